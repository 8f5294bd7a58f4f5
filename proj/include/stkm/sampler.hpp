#pragma once

// Bilinear resampling of an image at mapped coordinates, and the spatial
// transformer T(x, nu) built from it. Coordinates outside [0, W-1] x [0, H-1]
// read intensity 0; a non-finite coordinate yields a NaN pixel so that
// divergence surfaces in the loss.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stkm/image.hpp"
#include "stkm/tps.hpp"

namespace stkm {

struct WarpedImage {
    Image image;
    // Per output pixel: (d out / d u', d out / d v'). Empty unless requested.
    std::vector<Point2> coordinate_jacobian;
};

WarpedImage sample(const Image &image, std::span<const Point2> mapped_coords, bool with_jacobian = false);

/// T(x, nu): TPS map of the pixel lattice followed by bilinear sampling.
WarpedImage transform(const Image &image, const LandmarkGrid &grid, std::span<const Point2> warp_targets,
                      bool with_jacobian = false);

struct LossGradient {
    double loss = 0.0;
    // d loss / d nu, interleaved (u_0, v_0, u_1, v_1, ...) in pixel units.
    std::vector<double> gradient;
};

/// ||T(x, nu) - target||^2 and its analytic gradient with respect to the landmarks.
LossGradient loss_and_gradient(const Image &image, const Image &target, const LandmarkGrid &grid,
                               std::span<const Point2> warp_targets);

namespace detail {

/// Samples `image` at (mapped_u[p], mapped_v[p]) into out[p]; optional outputs
/// receive the partial derivatives with respect to each mapped coordinate.
void sample_into(const Image &image, const double *mapped_u, const double *mapped_v, std::size_t count, double *out,
                 double *d_u, double *d_v);

/// Sum over p of (sample(p) - target[p])^2 in ascending pixel order. When the
/// gradient buffers are given they receive d loss / d mapped coordinate.
double residual_loss(const Image &image, const Image &target, const Eigen::VectorXd &mapped_u,
                     const Eigen::VectorXd &mapped_v, Eigen::VectorXd *grad_u, Eigen::VectorXd *grad_v);

} // namespace detail

} // namespace stkm
