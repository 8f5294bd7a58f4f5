#pragma once

// Deformation-invariant similarity d(x, mu) = min_nu ||T(x, nu) - mu||^2,
// estimated with Adam in two stages: an affine stage on low-pass filtered
// copies of both images, then all landmark coordinates on the raw images.
//
// The optimizer works on landmark displacements in normalized units
// (grid.unit() pixels per unit), starting from the identity warp. The
// returned warp is the lowest-loss candidate seen, where identity and the
// optional warm start are always candidates, so the result never exceeds
// either of their losses.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "stkm/image.hpp"
#include "stkm/tps.hpp"

namespace stkm {

struct AlignmentConfig {
    double learning_rate = 0.05;
    int max_steps = 60;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    // Steps spent in the affine stage; unset means 30% of max_steps.
    std::optional<int> affine_stage_steps;
    double lowpass_kernel_width = 1.5;
    // Stop a stage once the relative loss change stays below this for a few
    // consecutive steps; 0 disables the check.
    double convergence_tolerance = 0.0;
    // Maximum landmark displacement in pixels.
    std::optional<double> warp_magnitude_cap;

    int affine_steps() const;
    void validate() const;
};

enum class WarpFamily { full_tps, affine_only };

struct AlignmentResult {
    std::vector<Point2> warp_targets;
    double distance = 0.0;
    Image warped;
    int steps_taken = 0;
    // Objective value at each Adam step (the smoothed objective during the affine stage).
    std::vector<double> loss_trace;
};

/// Affine warp of the landmark grid in normalized coordinates about the image
/// center c with unit s: target = c + s * (t + (I + M) (p - c) / s).
/// Parameter order: (t_u, t_v, m_uu, m_uv, m_vu, m_vv); all zero is the identity.
using AffineParams = std::array<double, 6>;

std::vector<Point2> affine_project(const LandmarkGrid &grid, const AffineParams &params);

/// Least-squares affine parameters reproducing the given landmark targets.
AffineParams fit_affine(const LandmarkGrid &grid, std::span<const Point2> targets);

AlignmentResult align(const Image &image, const Image &centroid, const LandmarkGrid &grid,
                      const AlignmentConfig &config, std::optional<std::span<const Point2>> warm_start = std::nullopt,
                      WarpFamily family = WarpFamily::full_tps);

/// ||T(x, nu) - mu||^2 evaluated along the same path align() uses for its candidates.
double warp_loss(const Image &image, const Image &centroid, const LandmarkGrid &grid,
                 std::span<const Point2> warp_targets);

} // namespace stkm
