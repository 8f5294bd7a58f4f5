#include "stkm/run_config.hpp"
#include "stkm/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace stkm {

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc() ? std::string(buf, end) : std::to_string(value);
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    const char *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end)
        throw ValidationError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
    return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on")
        return true;
    if (text == "false" || text == "0" || text == "no" || text == "off")
        return false;
    throw ValidationError(std::string(key) + ": expected true or false, got '" + std::string(text) + "'");
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
    std::vector<T> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        out.push_back(parse_number<T>(key, trim(text.substr(0, comma))));
        if (comma == std::string_view::npos)
            break;
        text.remove_prefix(comma + 1);
    }
    if (out.empty())
        throw ValidationError(std::string(key) + ": expected a comma-separated list");
    return out;
}

template <typename T>
std::string join(const std::vector<T> &values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            out += ",";
        if constexpr (std::is_floating_point_v<T>)
            out += format_double(values[i]);
        else
            out += std::to_string(values[i]);
    }
    return out;
}

struct Entry {
    const char *name;
    const char *help;
    std::function<void(RunConfig &, std::string_view)> set;
    std::function<std::string(const RunConfig &)> get;
};

#define STKM_INT(key, help, field)                                                                                     \
    Entry {                                                                                                            \
        key, help, [](RunConfig &c, std::string_view v) { c.field = parse_number<int>(key, v); },                      \
            [](const RunConfig &c) { return std::to_string(c.field); }                                                 \
    }
#define STKM_REAL(key, help, field)                                                                                    \
    Entry {                                                                                                            \
        key, help, [](RunConfig &c, std::string_view v) { c.field = parse_number<double>(key, v); },                   \
            [](const RunConfig &c) { return format_double(c.field); }                                                  \
    }
#define STKM_TEXT(key, help, field)                                                                                    \
    Entry {                                                                                                            \
        key, help, [](RunConfig &c, std::string_view v) { c.field = std::string(v); },                                 \
            [](const RunConfig &c) { return c.field; }                                                                 \
    }

const std::vector<Entry> &entries() {
    static const std::vector<Entry> table = {
        Entry{"mode", "euclidean, affine or st",
              [](RunConfig &c, std::string_view v) { c.fit.mode = parse_mode(v); },
              [](const RunConfig &c) { return to_string(c.fit.mode); }},
        Entry{"seed", "random seed",
              [](RunConfig &c, std::string_view v) { c.seed = parse_number<std::uint64_t>("seed", v); },
              [](const RunConfig &c) { return std::to_string(c.seed); }},
        STKM_INT("clusters", "number of clusters K", fit.cluster_count),
        STKM_INT("landmarks", "landmark grid side count", fit.landmark_side),
        Entry{"distance_norm", "landmark distance in the spline kernel: euclidean or l1",
              [](RunConfig &c, std::string_view v) {
                  if (v == "euclidean")
                      c.fit.tps.norm = DistanceNorm::euclidean;
                  else if (v == "l1")
                      c.fit.tps.norm = DistanceNorm::l1;
                  else
                      throw ValidationError("distance_norm: expected euclidean or l1, got '" + std::string(v) + "'");
              },
              [](const RunConfig &c) { return std::string(c.fit.tps.norm == DistanceNorm::l1 ? "l1" : "euclidean"); }},
        STKM_REAL("regularization", "spline smoothing added to the kernel diagonal", fit.tps.regularization),
        STKM_REAL("lr", "Adam learning rate", fit.alignment.learning_rate),
        STKM_INT("steps", "Adam steps per alignment", fit.alignment.max_steps),
        Entry{"affine_steps", "steps spent in the affine stage, or auto for 30% of steps",
              [](RunConfig &c, std::string_view v) {
                  if (v == "auto")
                      c.fit.alignment.affine_stage_steps.reset();
                  else
                      c.fit.alignment.affine_stage_steps = parse_number<int>("affine_steps", v);
              },
              [](const RunConfig &c) {
                  const auto &s = c.fit.alignment.affine_stage_steps;
                  return s ? std::to_string(*s) : std::string("auto");
              }},
        STKM_REAL("adam_beta1", "Adam first-moment decay", fit.alignment.adam_beta1),
        STKM_REAL("adam_beta2", "Adam second-moment decay", fit.alignment.adam_beta2),
        STKM_REAL("adam_epsilon", "Adam denominator offset", fit.alignment.adam_epsilon),
        STKM_REAL("lowpass_sigma", "Gaussian std-dev (pixels) for the affine stage", fit.alignment.lowpass_kernel_width),
        STKM_REAL("convergence_tolerance", "relative loss change that ends a stage early; 0 disables",
                  fit.alignment.convergence_tolerance),
        Entry{"warp_cap", "maximum landmark displacement in pixels, or none",
              [](RunConfig &c, std::string_view v) {
                  if (v == "none")
                      c.fit.alignment.warp_magnitude_cap.reset();
                  else
                      c.fit.alignment.warp_magnitude_cap = parse_number<double>("warp_cap", v);
              },
              [](const RunConfig &c) {
                  const auto &w = c.fit.alignment.warp_magnitude_cap;
                  return w ? format_double(*w) : std::string("none");
              }},
        STKM_INT("lloyd_iters", "maximum Lloyd iterations", fit.max_lloyd_iterations),
        STKM_INT("batch_size", "alignments per scheduling batch", fit.batch_size),
        STKM_REAL("change_tolerance", "stop when at most this fraction of points changes cluster",
                  fit.assignment_change_tolerance),
        STKM_INT("jobs", "worker threads, 0 for all cores", fit.jobs),
        STKM_INT("restarts", "fits with consecutive seeds; the lowest distortion is kept", restarts),
        STKM_TEXT("data", "dataset: container dir, class-per-subdir image dir, IDX file or builtin:NAME", data),
        STKM_TEXT("labels", "IDX labels file", labels),
        Entry{"split", "container split: train, test or all",
              [](RunConfig &c, std::string_view v) { c.split = parse_split(std::string(v)); },
              [](const RunConfig &c) { return to_string(c.split); }},
        STKM_TEXT("model", "model file", model),
        STKM_TEXT("out", "output directory", out),
        Entry{"grid_landmarks", "gridsearch landmark side counts",
              [](RunConfig &c, std::string_view v) { c.grid_landmarks = parse_list<int>("grid_landmarks", v); },
              [](const RunConfig &c) { return join(c.grid_landmarks); }},
        Entry{"grid_lr", "gridsearch learning rates",
              [](RunConfig &c, std::string_view v) { c.grid_lr = parse_list<double>("grid_lr", v); },
              [](const RunConfig &c) { return join(c.grid_lr); }},
        Entry{"export_warped", "export also writes every datum warped onto its centroid",
              [](RunConfig &c, std::string_view v) { c.export_warped = parse_bool("export_warped", v); },
              [](const RunConfig &c) { return std::string(c.export_warped ? "true" : "false"); }},
        STKM_TEXT("synth_kind", "rigid, nonrigid or blobs", synth_kind),
        STKM_TEXT("synth_base", "IDX images file supplying one base image per class; empty uses builtin glyphs",
                  synth_base),
        STKM_TEXT("synth_base_labels", "IDX labels file for synth_base", synth_base_labels),
        STKM_INT("synth_copies", "copies per class", synth_copies),
        STKM_REAL("synth_tps_std", "landmark displacement std-dev in pixels for nonrigid", synth_tps_std),
        STKM_REAL("test_fraction", "fraction of each class held out as the test split", test_fraction),
        Entry{"data_seed", "seed for synthesis and for splitting sources without stored splits",
              [](RunConfig &c, std::string_view v) { c.data_seed = parse_number<std::uint64_t>("data_seed", v); },
              [](const RunConfig &c) { return std::to_string(c.data_seed); }},
    };
    return table;
}

#undef STKM_INT
#undef STKM_REAL
#undef STKM_TEXT

} // namespace

void RunConfig::validate() const {
    fit.validate();
    if (restarts < 1)
        throw ValidationError("restarts must be >= 1");
    if (grid_landmarks.empty() || grid_lr.empty())
        throw ValidationError("gridsearch grids must be non-empty");
    for (int s : grid_landmarks)
        if (s < 2)
            throw ValidationError("grid_landmarks entries must be >= 2");
    for (double lr : grid_lr)
        if (!(lr > 0.0))
            throw ValidationError("grid_lr entries must be > 0");
    if (synth_kind != "rigid" && synth_kind != "nonrigid" && synth_kind != "blobs")
        throw ValidationError("synth_kind must be rigid, nonrigid or blobs");
    if (synth_copies < 1)
        throw ValidationError("synth_copies must be >= 1");
    if (!(synth_tps_std >= 0.0))
        throw ValidationError("synth_tps_std must be >= 0");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw ValidationError("test_fraction must lie in [0, 1)");
}

const std::vector<ConfigKey> &config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const auto &e : entries())
            out.push_back({e.name, e.help});
        return out;
    }();
    return keys;
}

void apply_setting(RunConfig &cfg, std::string_view key, std::string_view value) {
    for (const auto &e : entries())
        if (key == e.name) {
            e.set(cfg, trim(value));
            return;
        }
    throw ValidationError("unknown key '" + std::string(key) + "'");
}

void apply_config_text(RunConfig &cfg, std::string_view text, const std::string &origin) {
    std::set<std::string, std::less<>> seen;
    std::vector<std::pair<int, std::string>> applied;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        ++line_no;
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const std::string where = origin + ":" + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ValidationError(where + "expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        if (key.empty())
            throw ValidationError(where + "missing key before '='");
        if (!seen.insert(std::string(key)).second)
            throw ValidationError(where + "duplicate key '" + std::string(key) + "'");
        try {
            apply_setting(cfg, key, line.substr(eq + 1));
        } catch (const Error &e) {
            throw ValidationError(where + e.what());
        }
        applied.push_back({line_no, std::string(key)});
    }
    try {
        cfg.validate();
    } catch (const Error &e) {
        // Blame the first line whose removal makes the file valid.
        const RunConfig defaults;
        for (const auto &[no, key] : applied) {
            RunConfig probe = cfg;
            for (const auto &entry : entries())
                if (key == entry.name)
                    entry.set(probe, entry.get(defaults));
            try {
                probe.validate();
            } catch (const Error &) {
                continue;
            }
            throw ValidationError(origin + ":" + std::to_string(no) + ": " + e.what());
        }
        throw ValidationError(origin + ": " + e.what());
    }
}

void apply_config_file(RunConfig &cfg, const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str(), path.string());
}

std::string render_config(const RunConfig &cfg) {
    std::string out;
    for (const auto &e : entries())
        out += std::string(e.name) + " = " + e.get(cfg) + "\n";
    return out;
}

} // namespace stkm
