#pragma once

// Thin-plate-spline coordinate maps over a uniform landmark grid.
//
// Source landmarks sit on an s x s grid spanning [0, W-1] x [0, H-1]. The
// (l+3) x (l+3) interpolation system depends only on those, so it is inverted
// once at construction; every later solve is a matrix-vector product. The grid
// also caches the n x l matrix that takes target landmark displacements to
// displacements of the full pixel lattice, which is what the sampler and the
// optimizer use in their inner loops.

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace stkm {

struct Point2 {
    double u = 0.0; // column / x
    double v = 0.0; // row / y

    bool operator==(const Point2 &) const = default;
};

enum class DistanceNorm { euclidean, l1 };

struct TpsOptions {
    DistanceNorm norm = DistanceNorm::euclidean;
    // Added to the kernel block diagonal (K + lambda I); 0 is exact interpolation.
    double regularization = 0.0;
};

/// U(r) = r^2 log(r^2), with U(0) = 0.
double kernel(double r);

double landmark_distance(Point2 a, Point2 b, DistanceNorm norm);

/// Assembles [[K, P], [P^T, 0]] for the given source points.
Eigen::MatrixXd assemble_system(std::span<const Point2> points, const TpsOptions &opts);

/// Every pixel center of a W x H image, row-major.
std::vector<Point2> pixel_lattice(int width, int height);

class LandmarkGrid {
public:
    LandmarkGrid(int side_count, int width, int height, TpsOptions opts = {});

    int side_count() const { return side_count_; }
    int landmark_count() const { return side_count_ * side_count_; }
    int width() const { return width_; }
    int height() const { return height_; }
    const TpsOptions &options() const { return options_; }

    const std::vector<Point2> &source_points() const { return source_; }
    const Eigen::MatrixXd &system_matrix() const { return system_; }
    const Eigen::MatrixXd &system_inverse() const { return inverse_; }
    double condition_number() const { return condition_; }

    /// n x l: row p holds d(mapped coordinate of pixel p) / d(target i), identical for both axes.
    const Eigen::MatrixXd &lattice_map() const { return lattice_map_; }
    const Eigen::VectorXd &lattice_u() const { return lattice_u_; }
    const Eigen::VectorXd &lattice_v() const { return lattice_v_; }

    /// Pixels per normalized coordinate unit; the optimizer works in these units.
    double unit() const { return unit_; }
    Point2 center() const { return {0.5 * (width_ - 1), 0.5 * (height_ - 1)}; }

private:
    int side_count_;
    int width_;
    int height_;
    TpsOptions options_;
    std::vector<Point2> source_;
    Eigen::MatrixXd system_;
    Eigen::MatrixXd inverse_;
    double condition_ = 0.0;
    Eigen::MatrixXd lattice_map_;
    Eigen::VectorXd lattice_u_;
    Eigen::VectorXd lattice_v_;
    double unit_ = 1.0;
};

LandmarkGrid build_landmark_grid(int side_count, int width, int height, TpsOptions opts = {});

struct TpsCoefficients {
    std::vector<double> weights_u;
    std::vector<double> weights_v;
    std::array<double, 3> affine_u{}; // (a1, a_u, a_v)
    std::array<double, 3> affine_v{};
};

TpsCoefficients solve_coefficients(const LandmarkGrid &grid, std::span<const Point2> targets);

std::vector<Point2> map_coordinates(const LandmarkGrid &grid, const TpsCoefficients &coeffs,
                                    std::span<const Point2> query);

/// Mapped pixel lattice for the given targets, lattice + A (targets - sources).
/// Identity targets reproduce the lattice bit-exactly.
void map_lattice(const LandmarkGrid &grid, std::span<const Point2> targets, Eigen::VectorXd &mapped_u,
                 Eigen::VectorXd &mapped_v);

} // namespace stkm
