#pragma once

// Run configuration shared by every subcommand. A config file holds one
// `key = value` pair per line; `#` starts a comment. Every key can also be
// given as a command-line flag (`lloyd_iters` is `--lloyd-iters`).

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stkm/cluster.hpp"
#include "stkm/data.hpp"

namespace stkm {

struct RunConfig {
    FitConfig fit;
    std::uint64_t seed = 0;

    // Dataset reference: a container directory, a per-class image directory,
    // an IDX images file, or builtin:blobs / builtin:rigid / builtin:nonrigid.
    std::string data;
    std::string labels;
    Split split = Split::train;
    std::string model;
    std::string out = "stkm-out";

    std::vector<int> grid_landmarks{3, 4, 5, 6, 7, 8};
    std::vector<double> grid_lr{1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2};
    int restarts = 1;
    bool export_warped = false;

    std::string synth_kind = "rigid";
    std::string synth_base;
    std::string synth_base_labels;
    int synth_copies = 100;
    double synth_tps_std = 1.0;
    double test_fraction = 1.0 / 3.0;
    // Seeds synthesis and the train/test split of sources without stored splits.
    std::uint64_t data_seed = 0;

    void validate() const;
};

struct ConfigKey {
    std::string name;
    std::string help;
};

/// Every recognised key, in the order used when echoing a config.
const std::vector<ConfigKey> &config_keys();

/// Sets one key; throws ValidationError for unknown keys or malformed values.
void apply_setting(RunConfig &cfg, std::string_view key, std::string_view value);

/// Applies a config file on top of cfg. Diagnostics carry `path:line:`.
void apply_config_text(RunConfig &cfg, std::string_view text, const std::string &origin);
void apply_config_file(RunConfig &cfg, const std::filesystem::path &path);

/// Effective configuration in the same format the parser reads.
std::string render_config(const RunConfig &cfg);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

} // namespace stkm
