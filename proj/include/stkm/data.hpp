#pragma once

// Dataset ingestion (IDX digit files, per-class image directories, the
// toolkit's own float32 container) and synthetic deformation datasets.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stkm/image.hpp"

namespace stkm {

enum class Split { train, test, all };

std::string to_string(Split s);
Split parse_split(const std::string &text);

struct Dataset {
    std::vector<Image> images;
    std::optional<std::vector<int>> labels;
    std::string name;
    Split split = Split::all;

    std::size_t size() const { return images.size(); }
    int width() const { return images.empty() ? 0 : images.front().width; }
    int height() const { return images.empty() ? 0 : images.front().height; }

    /// Throws unless dimensions are uniform, labels match and intensities lie in [0, 1].
    void validate() const;
};

Dataset load_idx(const std::filesystem::path &images_path,
                 const std::optional<std::filesystem::path> &labels_path = std::nullopt);

/// Raw IDX bytes (already decompressed); exposed for tests and in-memory use.
Dataset parse_idx(const std::vector<std::uint8_t> &image_bytes, const std::vector<std::uint8_t> *label_bytes,
                  const std::string &name);

/// One subdirectory per class (ranked lexicographically) holding PGM or PNG files.
Dataset load_image_dir(const std::filesystem::path &root);

Image read_pgm(const std::filesystem::path &path);
Image read_png(const std::filesystem::path &path);
/// Reads PGM (P2/P5) or grayscale PNG by content.
Image read_image(const std::filesystem::path &path);
/// Writes an 8-bit binary PGM; intensities are clamped to [0, 1] and rounded.
void write_pgm(const std::filesystem::path &path, const Image &img);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct SynthSpec {
    std::vector<Image> base_images;
    int copies_per_class = 100;
    Interval rotation_degrees{-25.0, 25.0};
    Interval scale{0.8, 1.2};
    Interval shear{-0.15, 0.15};
    Interval translation{-3.0, 3.0};
    // Draw translations as whole pixels.
    bool integer_translation = false;
    // Std-dev of independent landmark displacements in pixels; 0 gives rigid copies.
    double tps_displacement_std = 0.0;
    int tps_side_count = 4;
    std::uint64_t seed = 0;
    std::string name = "synthetic";

    void validate() const;
};

Dataset synthesize(const SynthSpec &spec);

/// Stratified by label when labels exist; deterministic per seed. Returns (train, test).
std::pair<Dataset, Dataset> split_dataset(const Dataset &ds, double test_fraction, std::uint64_t seed);

/// Container layout: <dir>/manifest.json plus one little-endian float32 blob per split.
void write_container(const std::filesystem::path &dir, const std::vector<Dataset> &splits);
Dataset read_container(const std::filesystem::path &dir, Split split);
std::vector<Split> container_splits(const std::filesystem::path &dir);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path &path, const std::string &contents);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path);

/// Ten stroke-rendered digit glyphs (classes 0..9), one per image.
std::vector<Image> builtin_glyphs(int width = 28, int height = 28);

/// Three Gaussian blob classes at distinct positions with small jitter.
Dataset toy_blobs(int per_class, int width, int height, std::uint64_t seed);

} // namespace stkm
