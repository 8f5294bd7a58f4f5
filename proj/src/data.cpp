#include "stkm/data.hpp"
#include "stkm/error.hpp"
#include "stkm/sampler.hpp"
#include "stkm/tps.hpp"
#include "log.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>
#include <png.h>
#include <zlib.h>

namespace fs = std::filesystem;

namespace stkm {

std::string to_string(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::all: return "all";
    }
    return "all";
}

Split parse_split(const std::string &text) {
    if (text == "train")
        return Split::train;
    if (text == "test")
        return Split::test;
    if (text == "all")
        return Split::all;
    throw ValidationError("unknown split '" + text + "' (expected train, test or all)");
}

void Dataset::validate() const {
    if (labels && labels->size() != images.size())
        throw ValidationError("dataset '" + name + "' has " + std::to_string(images.size()) + " images but " +
                              std::to_string(labels->size()) + " labels");
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!images[i].same_shape(images[0]))
            throw ShapeError("dataset '" + name + "': image " + std::to_string(i) + " is " +
                             std::to_string(images[i].width) + "x" + std::to_string(images[i].height) +
                             ", expected " + std::to_string(images[0].width) + "x" + std::to_string(images[0].height));
        for (double p : images[i].pixels)
            if (!(p >= 0.0 && p <= 1.0))
                throw ValidationError("dataset '" + name + "': image " + std::to_string(i) +
                                      " has an intensity outside [0, 1]");
    }
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError("error reading '" + path.string() + "'");
    return bytes;
}

void write_file_atomic(const fs::path &path, const std::string &contents) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write '" + tmp.string() + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out)
            throw IoError("short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

namespace {

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t> &in, const std::string &what) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
        throw IoError("zlib initialization failed");
    zs.next_in = const_cast<Bytef *>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    std::vector<std::uint8_t> out;
    std::uint8_t chunk[1 << 16];
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = chunk;
        zs.avail_out = sizeof(chunk);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw IoError("'" + what + "' is not a valid gzip stream");
        }
        out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw IoError("'" + what + "' is a truncated gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

std::vector<std::uint8_t> read_maybe_gzip(const fs::path &path) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b)
        return gunzip(bytes, path.string());
    return bytes;
}

std::uint32_t be32(const std::vector<std::uint8_t> &b, std::size_t off) {
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) | (std::uint32_t(b[off + 2]) << 8) |
           std::uint32_t(b[off + 3]);
}

std::string hex4(const std::vector<std::uint8_t> &b) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02x %02x %02x %02x", b[0], b[1], b[2], b[3]);
    return buf;
}

void check_magic(const std::vector<std::uint8_t> &b, std::uint8_t dims, const std::string &what) {
    if (b.size() < 4)
        throw IoError("idx truncated: '" + what + "' is shorter than its 4-byte magic");
    if (b[0] != 0 || b[1] != 0 || b[2] != 0x08 || b[3] != dims) {
        char expect[32];
        std::snprintf(expect, sizeof expect, "00 00 08 %02x", dims);
        throw IoError("idx bad magic at offset 0 of '" + what + "': expected " + expect + ", found " + hex4(b));
    }
}

double snap(double v) { return static_cast<double>(static_cast<float>(v)); }

} // namespace

Dataset parse_idx(const std::vector<std::uint8_t> &img, const std::vector<std::uint8_t> *lab,
                  const std::string &name) {
    check_magic(img, 0x03, name);
    if (img.size() < 16)
        throw IoError("idx truncated: '" + name + "' header needs 16 bytes, found " + std::to_string(img.size()));
    const std::uint32_t count = be32(img, 4);
    const std::uint32_t rows = be32(img, 8);
    const std::uint32_t cols = be32(img, 12);
    const std::uint64_t need = 16ull + std::uint64_t(count) * rows * cols;
    if (img.size() < need)
        throw IoError("idx truncated: '" + name + "' declares " + std::to_string(count) + " images of " +
                      std::to_string(rows) + "x" + std::to_string(cols) + " (" + std::to_string(need) +
                      " bytes) but holds " + std::to_string(img.size()) + " bytes");

    Dataset ds;
    ds.name = name;
    ds.images.reserve(count);
    const std::size_t n = std::size_t(rows) * cols;
    for (std::uint32_t i = 0; i < count; ++i) {
        Image im(static_cast<int>(cols), static_cast<int>(rows));
        const std::uint8_t *src = img.data() + 16 + std::size_t(i) * n;
        for (std::size_t p = 0; p < n; ++p)
            im.pixels[p] = snap(src[p] / 255.0);
        ds.images.push_back(std::move(im));
    }

    if (lab) {
        const std::string lname = name + " labels";
        check_magic(*lab, 0x01, lname);
        if (lab->size() < 8)
            throw IoError("idx truncated: '" + lname + "' header needs 8 bytes");
        const std::uint32_t lcount = be32(*lab, 4);
        if (lab->size() < 8ull + lcount)
            throw IoError("idx truncated: '" + lname + "' declares " + std::to_string(lcount) + " labels but holds " +
                          std::to_string(lab->size() - 8) + " bytes of labels");
        if (lcount != count)
            throw IoError("idx count mismatch: " + std::to_string(count) + " images but " + std::to_string(lcount) +
                          " labels");
        std::vector<int> labels(lcount);
        for (std::uint32_t i = 0; i < lcount; ++i)
            labels[i] = (*lab)[8 + i];
        ds.labels = std::move(labels);
    }
    return ds;
}

Dataset load_idx(const fs::path &images_path, const std::optional<fs::path> &labels_path) {
    const auto img = read_maybe_gzip(images_path);
    std::optional<std::vector<std::uint8_t>> lab;
    if (labels_path)
        lab = read_maybe_gzip(*labels_path);
    Dataset ds = parse_idx(img, lab ? &*lab : nullptr, images_path.string());
    ds.name = images_path.stem().string();
    return ds;
}

// ---------------------------------------------------------------------------
// PGM / PNG
// ---------------------------------------------------------------------------

namespace {

/// Next whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(const std::vector<std::uint8_t> &b, std::size_t &pos) {
    for (;;) {
        while (pos < b.size() && std::isspace(b[pos]))
            ++pos;
        if (pos < b.size() && b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n')
                ++pos;
            continue;
        }
        break;
    }
    std::string tok;
    while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#')
        tok.push_back(static_cast<char>(b[pos++]));
    return tok;
}

int pgm_int(const std::vector<std::uint8_t> &b, std::size_t &pos, const fs::path &path) {
    const std::string tok = pgm_token(b, pos);
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size() || v < 0)
            throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception &) {
        throw IoError("'" + path.string() + "': malformed PGM header token '" + tok + "'");
    }
}

} // namespace

Image read_pgm(const fs::path &path) {
    const auto b = read_file_bytes(path);
    if (b.size() < 2 || b[0] != 'P' || (b[1] != '2' && b[1] != '5'))
        throw IoError("'" + path.string() + "' is not a P2/P5 PGM file");
    const bool binary = b[1] == '5';
    std::size_t pos = 2;
    const int w = pgm_int(b, pos, path);
    const int h = pgm_int(b, pos, path);
    const int maxval = pgm_int(b, pos, path);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535)
        throw IoError("'" + path.string() + "': invalid PGM dimensions or maxval");
    Image im(w, h);
    const std::size_t n = im.size();
    if (binary) {
        ++pos; // single whitespace after maxval
        const std::size_t bpp = maxval > 255 ? 2 : 1;
        if (b.size() < pos + n * bpp)
            throw IoError("'" + path.string() + "': truncated PGM raster");
        for (std::size_t p = 0; p < n; ++p) {
            const unsigned v = bpp == 1 ? b[pos + p] : (unsigned(b[pos + 2 * p]) << 8) | b[pos + 2 * p + 1];
            im.pixels[p] = snap(std::min<double>(v, maxval) / maxval);
        }
    } else {
        for (std::size_t p = 0; p < n; ++p) {
            const std::string tok = pgm_token(b, pos);
            if (tok.empty())
                throw IoError("'" + path.string() + "': truncated PGM raster");
            const int v = std::stoi(tok);
            im.pixels[p] = snap(std::clamp(v, 0, maxval) / static_cast<double>(maxval));
        }
    }
    return im;
}

Image read_png(const fs::path &path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.string().c_str()))
        throw IoError("'" + path.string() + "': " + png.message);
    if (png.format & PNG_FORMAT_FLAG_COLOR) {
        png_image_free(&png);
        throw IoError("'" + path.string() + "' is a color PNG; only grayscale is supported");
    }
    png.format = PNG_FORMAT_GRAY;
    std::vector<png_byte> buf(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr))
        throw IoError("'" + path.string() + "': " + png.message);
    Image im(static_cast<int>(png.width), static_cast<int>(png.height));
    for (std::size_t p = 0; p < im.size(); ++p)
        im.pixels[p] = snap(buf[p] / 255.0);
    return im;
}

Image read_image(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    char head[8] = {};
    in.read(head, 8);
    if (head[0] == 'P' && (head[1] == '2' || head[1] == '5'))
        return read_pgm(path);
    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (std::memcmp(head, sig, 8) == 0)
        return read_png(path);
    throw IoError("'" + path.string() + "' is neither PGM nor PNG");
}

void write_pgm(const fs::path &path, const Image &img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.reserve(out.size() + img.size());
    for (double p : img.pixels)
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0))));
    write_file_atomic(path, out);
}

Dataset load_image_dir(const fs::path &root) {
    if (!fs::is_directory(root))
        throw IoError("'" + root.string() + "' is not a directory");
    std::vector<fs::path> classes;
    for (const auto &e : fs::directory_iterator(root))
        if (e.is_directory())
            classes.push_back(e.path());
    std::sort(classes.begin(), classes.end(),
              [](const fs::path &a, const fs::path &b) { return a.filename().string() < b.filename().string(); });
    if (classes.empty())
        throw IoError("'" + root.string() + "' has no class subdirectories");

    Dataset ds;
    ds.name = root.filename().string();
    ds.labels.emplace();
    fs::path first_file;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        std::vector<fs::path> files;
        for (const auto &e : fs::directory_iterator(classes[c]))
            if (e.is_regular_file())
                files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw IoError("class directory '" + classes[c].string() + "' is empty");
        for (const auto &f : files) {
            Image im = read_image(f);
            if (ds.images.empty()) {
                first_file = f;
            } else if (!im.same_shape(ds.images.front())) {
                throw ShapeError("'" + f.string() + "' is " + std::to_string(im.width) + "x" +
                                 std::to_string(im.height) + " but '" + first_file.string() + "' is " +
                                 std::to_string(ds.images.front().width) + "x" +
                                 std::to_string(ds.images.front().height));
            }
            ds.images.push_back(std::move(im));
            ds.labels->push_back(static_cast<int>(c));
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

void SynthSpec::validate() const {
    if (base_images.empty())
        throw ValidationError("synthesis needs at least one base image");
    for (const auto &b : base_images)
        if (!b.same_shape(base_images[0]))
            throw ShapeError("synthesis base images must share dimensions");
    if (copies_per_class < 1)
        throw ValidationError("copies_per_class must be >= 1");
    for (const Interval *r : {&rotation_degrees, &scale, &shear, &translation})
        if (!(r->lo <= r->hi))
            throw ValidationError("synthesis ranges must satisfy lo <= hi");
    if (scale.lo <= 0.0)
        throw ValidationError("synthesis scale must be positive");
    if (tps_displacement_std < 0.0)
        throw ValidationError("tps_displacement_std must be >= 0");
    if (tps_side_count < 2)
        throw ValidationError("tps_side_count must be >= 2");
}

Dataset synthesize(const SynthSpec &spec) {
    spec.validate();
    const int w = spec.base_images[0].width;
    const int h = spec.base_images[0].height;
    const LandmarkGrid grid(spec.tps_side_count, w, h);
    const Point2 center = grid.center();
    const auto &src = grid.source_points();

    std::mt19937_64 rng(spec.seed);
    auto draw = [&](const Interval &r) {
        if (r.lo == r.hi)
            return r.lo;
        return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
    };
    std::normal_distribution<double> noise(0.0, spec.tps_displacement_std > 0.0 ? spec.tps_displacement_std : 1.0);

    Dataset ds;
    ds.name = spec.name;
    ds.labels.emplace();
    std::vector<Point2> targets(src.size());
    for (std::size_t c = 0; c < spec.base_images.size(); ++c) {
        for (int j = 0; j < spec.copies_per_class; ++j) {
            const double theta = draw(spec.rotation_degrees) * std::numbers::pi / 180.0;
            const double s = draw(spec.scale);
            const double sh = draw(spec.shear);
            double tu = draw(spec.translation);
            double tv = draw(spec.translation);
            if (spec.integer_translation) {
                tu = std::round(tu);
                tv = std::round(tv);
            }
            // M = R(theta) [[s, sh], [0, s]]; landmarks move by (M - I)(p - c) + t.
            const double ct = std::cos(theta), st = std::sin(theta);
            const double m00 = ct * s, m01 = ct * sh - st * s;
            const double m10 = st * s, m11 = st * sh + ct * s;
            for (std::size_t i = 0; i < src.size(); ++i) {
                const double pu = src[i].u - center.u;
                const double pv = src[i].v - center.v;
                double du = (m00 - 1.0) * pu + m01 * pv + tu;
                double dv = m10 * pu + (m11 - 1.0) * pv + tv;
                if (spec.tps_displacement_std > 0.0) {
                    du += noise(rng);
                    dv += noise(rng);
                }
                targets[i] = {src[i].u + du, src[i].v + dv};
            }
            Image im = transform(spec.base_images[c], grid, targets).image;
            clamp_unit(im);
            snap_to_float32(im);
            ds.images.push_back(std::move(im));
            ds.labels->push_back(static_cast<int>(c));
        }
    }
    return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset &ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw ValidationError("test_fraction must lie in [0, 1)");
    std::mt19937_64 rng(seed);
    std::vector<char> is_test(ds.size(), 0);

    auto pick = [&](std::vector<std::size_t> idx) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto take = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(idx.size()) + 0.5));
        for (std::size_t q = 0; q < take && q < idx.size(); ++q)
            is_test[idx[q]] = 1;
    };
    if (ds.labels) {
        std::map<int, std::vector<std::size_t>> by_label;
        for (std::size_t i = 0; i < ds.size(); ++i)
            by_label[(*ds.labels)[i]].push_back(i);
        for (auto &[label, idx] : by_label)
            pick(std::move(idx));
    } else {
        log::info("dataset '{}' has no labels; splitting without stratification", ds.name);
        std::vector<std::size_t> idx(ds.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            idx[i] = i;
        pick(std::move(idx));
    }

    Dataset train, test;
    train.name = test.name = ds.name;
    train.split = Split::train;
    test.split = Split::test;
    if (ds.labels) {
        train.labels.emplace();
        test.labels.emplace();
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
        Dataset &dst = is_test[i] ? test : train;
        dst.images.push_back(ds.images[i]);
        if (ds.labels)
            dst.labels->push_back((*ds.labels)[i]);
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Container
// ---------------------------------------------------------------------------

namespace {

constexpr const char *kManifest = "manifest.json";

std::string encode_f32(const std::vector<Image> &images) {
    std::string out;
    std::size_t total = 0;
    for (const auto &im : images)
        total += im.size();
    out.resize(total * 4);
    std::size_t off = 0;
    for (const auto &im : images)
        for (double p : im.pixels) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(p));
            if constexpr (std::endian::native == std::endian::big)
                bits = __builtin_bswap32(bits);
            std::memcpy(out.data() + off, &bits, 4);
            off += 4;
        }
    return out;
}

nlohmann::ordered_json read_manifest(const fs::path &dir) {
    const auto bytes = read_file_bytes(dir / kManifest);
    try {
        auto j = nlohmann::ordered_json::parse(bytes.begin(), bytes.end());
        if (j.value("format", "") != "stkm-dataset")
            throw IoError("'" + (dir / kManifest).string() + "' is not a dataset manifest");
        return j;
    } catch (const nlohmann::json::exception &e) {
        throw IoError("'" + (dir / kManifest).string() + "': " + e.what());
    }
}

} // namespace

void write_container(const fs::path &dir, const std::vector<Dataset> &splits) {
    if (splits.empty())
        throw ValidationError("nothing to write: no splits given");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create '" + dir.string() + "': " + ec.message());

    nlohmann::ordered_json manifest;
    manifest["format"] = "stkm-dataset";
    manifest["version"] = 1;
    manifest["name"] = splits.front().name;
    manifest["width"] = splits.front().width();
    manifest["height"] = splits.front().height();
    nlohmann::ordered_json entries = nlohmann::ordered_json::object();
    for (const auto &ds : splits) {
        ds.validate();
        if (!ds.images.empty() && (ds.width() != splits.front().width() || ds.height() != splits.front().height()))
            throw ShapeError("container splits must share image dimensions");
        const std::string key = to_string(ds.split);
        if (entries.contains(key))
            throw ValidationError("split '" + key + "' given twice");
        const std::string file = key + ".f32";
        write_file_atomic(dir / file, encode_f32(ds.images));
        nlohmann::ordered_json e;
        e["count"] = ds.size();
        e["file"] = file;
        e["labels"] = ds.labels ? nlohmann::ordered_json(*ds.labels) : nlohmann::ordered_json(nullptr);
        entries[key] = std::move(e);
    }
    manifest["splits"] = std::move(entries);
    write_file_atomic(dir / kManifest, manifest.dump(2) + "\n");
}

std::vector<Split> container_splits(const fs::path &dir) {
    const auto j = read_manifest(dir);
    std::vector<Split> out;
    for (const auto &[key, _] : j.at("splits").items())
        out.push_back(parse_split(key));
    return out;
}

Dataset read_container(const fs::path &dir, Split split) {
    const auto j = read_manifest(dir);
    const std::string key = to_string(split);
    try {
        const auto &splits = j.at("splits");
        if (!splits.contains(key))
            throw IoError("container '" + dir.string() + "' has no '" + key + "' split");
        const auto &e = splits.at(key);
        const int w = j.at("width").get<int>();
        const int h = j.at("height").get<int>();
        const std::size_t count = e.at("count").get<std::size_t>();
        const auto bytes = read_file_bytes(dir / e.at("file").get<std::string>());
        const std::size_t n = static_cast<std::size_t>(w) * h;
        if (bytes.size() != count * n * 4)
            throw IoError("container blob for '" + key + "' holds " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(count * n * 4));
        Dataset ds;
        ds.name = j.value("name", "");
        ds.split = split;
        ds.images.reserve(count);
        std::size_t off = 0;
        for (std::size_t i = 0; i < count; ++i) {
            Image im(w, h);
            for (std::size_t p = 0; p < n; ++p, off += 4) {
                std::uint32_t bits;
                std::memcpy(&bits, bytes.data() + off, 4);
                if constexpr (std::endian::native == std::endian::big)
                    bits = __builtin_bswap32(bits);
                im.pixels[p] = static_cast<double>(std::bit_cast<float>(bits));
            }
            ds.images.push_back(std::move(im));
        }
        if (!e.at("labels").is_null()) {
            ds.labels = e.at("labels").get<std::vector<int>>();
            if (ds.labels->size() != count)
                throw IoError("container split '" + key + "' lists " + std::to_string(ds.labels->size()) +
                              " labels for " + std::to_string(count) + " images");
        }
        return ds;
    } catch (const nlohmann::json::exception &ex) {
        throw IoError("'" + (dir / kManifest).string() + "': " + ex.what());
    }
}

Dataset toy_blobs(int per_class, int width, int height, std::uint64_t seed) {
    if (per_class < 1 || width < 4 || height < 4)
        throw ValidationError("toy_blobs needs per_class >= 1 and images of at least 4x4");
    const Point2 centers[3] = {{0.25 * (width - 1), 0.3 * (height - 1)},
                               {0.75 * (width - 1), 0.3 * (height - 1)},
                               {0.5 * (width - 1), 0.75 * (height - 1)}};
    const double sigma = 0.12 * std::min(width, height);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    Dataset ds;
    ds.name = "blobs";
    ds.labels.emplace();
    for (int c = 0; c < 3; ++c)
        for (int j = 0; j < per_class; ++j) {
            const double cu = centers[c].u + jitter(rng);
            const double cv = centers[c].v + jitter(rng);
            Image im(width, height);
            for (int v = 0; v < height; ++v)
                for (int u = 0; u < width; ++u) {
                    const double d2 = (u - cu) * (u - cu) + (v - cv) * (v - cv);
                    im.at(u, v) = std::exp(-0.5 * d2 / (sigma * sigma));
                }
            snap_to_float32(im);
            ds.images.push_back(std::move(im));
            ds.labels->push_back(c);
        }
    return ds;
}

} // namespace stkm
