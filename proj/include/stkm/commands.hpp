#pragma once

// Subcommand drivers behind the stkm executable. Each one writes its files
// under RunConfig::out (atomically, alongside an echo of the effective
// config) and returns the text to print on stdout.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stkm/cluster.hpp"
#include "stkm/data.hpp"
#include "stkm/error.hpp"
#include "stkm/run_config.hpp"

namespace stkm {

/// 2 for io, 3 for validation and shape, 4 for numerical failures.
int exit_code(ErrorCategory category);

/// Resolves RunConfig::data for the requested split.
Dataset load_dataset(const RunConfig &cfg, Split split);
/// The held-out split belonging to the same source, when it has one.
std::optional<Dataset> load_test_split(const RunConfig &cfg);

struct Scores {
    std::size_t count = 0;
    double distortion = 0.0;
    std::optional<double> accuracy;
    std::optional<double> nmi;
    std::optional<double> ari;
    std::vector<int> cluster_sizes;
};

Scores score(const ClusterModel &model, const Dataset &data, const FitConfig &config);

struct RunRecord {
    std::uint64_t seed = 0;
    double distortion = 0.0;
    int iterations = 0;
    bool converged = false;
    std::optional<double> test_accuracy;
};

struct FitOutcome {
    ClusterModel model;
    std::vector<RunRecord> runs;
    std::size_t selected = 0;
};

/// cfg.restarts fits with seeds cfg.seed, cfg.seed + 1, ...; keeps the lowest
/// final distortion (lowest seed on ties). Test accuracy per run is filled in
/// when a labelled test set is given.
FitOutcome fit_with_restarts(const RunConfig &cfg, const Dataset &train, const Dataset *test);

struct GridCell {
    int landmarks = 0;
    double learning_rate = 0.0;
    bool ok = false;
    std::string error;
    double distortion = 0.0;
    std::optional<double> train_accuracy;
    std::optional<double> test_accuracy;
};

struct GridResult {
    std::vector<GridCell> cells;
    std::optional<std::size_t> selected;
    // Rank correlation of distortion against test (else train) accuracy.
    std::optional<double> spearman;
};

GridResult run_gridsearch(const RunConfig &cfg, const Dataset &train, const Dataset *test);

std::string cmd_fit(const RunConfig &cfg);
std::string cmd_predict(const RunConfig &cfg);
std::string cmd_eval(const RunConfig &cfg);
std::string cmd_gridsearch(const RunConfig &cfg);
std::string cmd_export(const RunConfig &cfg);
std::string cmd_synth(const RunConfig &cfg);

} // namespace stkm
