#pragma once

// Lloyd iteration for K-means under three similarity measures: plain squared
// Euclidean distance, the affine-restricted alignment distance, and the full
// spatial-transformer distance. Centroids are updated as the mean of the
// members after each is warped by its stored optimal warp.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stkm/align.hpp"
#include "stkm/image.hpp"
#include "stkm/tps.hpp"

namespace stkm {

enum class Mode { euclidean, affine_invariant, spatial_transformer };

std::string to_string(Mode m);
/// Accepts euclidean, affine, affine_invariant, st, spatial_transformer.
Mode parse_mode(std::string_view text);

struct FitConfig {
    int cluster_count = 10;
    int max_lloyd_iterations = 10;
    Mode mode = Mode::spatial_transformer;
    int landmark_side = 4;
    TpsOptions tps;
    AlignmentConfig alignment;
    // Scheduling unit for the assignment fan-out; does not affect results.
    int batch_size = 64;
    // Stop once no more than this fraction of the points changes cluster.
    double assignment_change_tolerance = 0.0;
    // Worker threads for the assignment phase; 0 uses every hardware thread.
    int jobs = 0;

    void validate() const;
};

struct ClusterModel {
    Mode mode = Mode::spatial_transformer;
    std::shared_ptr<const LandmarkGrid> grid;
    std::vector<Image> centroids;
    std::vector<int> assignments;
    // Cost of each point against its assigned centroid under its stored warp.
    std::vector<double> distances;
    // Row-major N x K distances from the latest assignment pass.
    std::vector<double> pair_distances;
    // warm_warps[i * K + k]: optimal warp of point i onto centroid k; empty means identity.
    std::vector<std::vector<Point2>> warm_warps;
    // Distortion after each completed Lloyd iteration.
    std::vector<double> distortion_history;
    // Distortion after every assignment and every update phase, interleaved.
    std::vector<double> distortion_chain;
    std::uint64_t rng_seed = 0;
    int iterations = 0;
    bool converged = false;

    int cluster_count() const { return static_cast<int>(centroids.size()); }
    std::span<const Point2> warp(std::size_t i, int k) const {
        return warm_warps[i * centroids.size() + static_cast<std::size_t>(k)];
    }
};

/// Indices chosen by D^2-weighted seeding under squared Euclidean distance.
std::vector<std::size_t> kmeanspp_indices(std::span<const Image> data, int k, std::uint64_t seed);
std::vector<Image> init_kmeanspp(std::span<const Image> data, int k, std::uint64_t seed);

/// A model with the given centroids and no assignments yet.
ClusterModel make_model(std::vector<Image> centroids, const FitConfig &config, std::uint64_t seed);

/// Assignment phase; returns how many points changed cluster.
int assign(ClusterModel &model, std::span<const Image> data, const FitConfig &config);

/// Update phase (transformed-average centroids), including empty-cluster repair.
void update_centroids(ClusterModel &model, std::span<const Image> data);

ClusterModel fit(std::span<const Image> data, const FitConfig &config, std::uint64_t seed);

struct Prediction {
    std::vector<int> assignments;
    std::vector<double> distances;
    std::vector<double> pair_distances;
    // Optimal warp onto the assigned centroid; empty means identity.
    std::vector<std::vector<Point2>> warps;
};

/// Assignment against fixed centroids. Alignments start from the identity
/// unless use_warm_starts is set and the model holds warps for this data.
Prediction predict_detailed(const ClusterModel &model, std::span<const Image> data, const FitConfig &config,
                            bool use_warm_starts = false);
std::vector<int> predict(const ClusterModel &model, std::span<const Image> data, const FitConfig &config,
                         bool use_warm_starts = false);

/// Distortion: sum over points of the cost against the assigned centroid.
double distortion(const ClusterModel &model, std::span<const Image> data);

/// Cost of one point against a centroid under a warp (identity when empty).
double pair_cost(const Image &x, const Image &centroid, const LandmarkGrid &grid, std::span<const Point2> warp);

} // namespace stkm
