#include "stkm/tps.hpp"
#include "stkm/error.hpp"
#include "log.hpp"

#include <cmath>
#include <string>

namespace stkm {

double kernel(double r) {
    if (r <= 0.0)
        return 0.0;
    const double r2 = r * r;
    return r2 * std::log(r2);
}

double landmark_distance(Point2 a, Point2 b, DistanceNorm norm) {
    const double du = a.u - b.u;
    const double dv = a.v - b.v;
    if (norm == DistanceNorm::l1)
        return std::abs(du) + std::abs(dv);
    return std::sqrt(du * du + dv * dv);
}

Eigen::MatrixXd assemble_system(std::span<const Point2> points, const TpsOptions &opts) {
    const Eigen::Index l = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(l + 3, l + 3);
    for (Eigen::Index i = 0; i < l; ++i) {
        for (Eigen::Index j = 0; j < l; ++j)
            sys(i, j) = kernel(landmark_distance(points[i], points[j], opts.norm));
        sys(i, i) += opts.regularization;
        sys(i, l) = 1.0;
        sys(i, l + 1) = points[i].u;
        sys(i, l + 2) = points[i].v;
        sys(l, i) = 1.0;
        sys(l + 1, i) = points[i].u;
        sys(l + 2, i) = points[i].v;
    }
    return sys;
}

std::vector<Point2> pixel_lattice(int width, int height) {
    std::vector<Point2> out;
    out.reserve(static_cast<std::size_t>(width) * height);
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u)
            out.push_back({static_cast<double>(u), static_cast<double>(v)});
    return out;
}

LandmarkGrid::LandmarkGrid(int side_count, int width, int height, TpsOptions opts)
    : side_count_(side_count), width_(width), height_(height), options_(opts) {
    if (side_count < 2)
        throw ValidationError("landmark grid needs side_count >= 2, got " + std::to_string(side_count));
    if (width < 2 || height < 2)
        throw ValidationError("landmark grid needs an image of at least 2x2, got " + std::to_string(width) + "x" +
                              std::to_string(height));

    const double du = static_cast<double>(width - 1) / (side_count - 1);
    const double dv = static_cast<double>(height - 1) / (side_count - 1);
    source_.reserve(static_cast<std::size_t>(side_count) * side_count);
    for (int r = 0; r < side_count; ++r)
        for (int c = 0; c < side_count; ++c)
            source_.push_back({c * du, r * dv});

    system_ = assemble_system(source_, options_);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system_);
    if (!lu.isInvertible())
        throw NumericalError("singular TPS system for a " + std::to_string(side_count) + "x" +
                             std::to_string(side_count) + " landmark grid on " + std::to_string(width) + "x" +
                             std::to_string(height) + " (degenerate landmark configuration)");
    inverse_ = lu.inverse();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(system_);
    const auto &sv = svd.singularValues();
    condition_ = sv(0) / sv(sv.size() - 1);
    if (condition_ > 1e10)
        log::warn("TPS system for {} landmarks is ill-conditioned (cond = {:.3e})", landmark_count(), condition_);
    else
        log::debug("TPS system for {} landmarks, cond = {:.3e}", landmark_count(), condition_);

    // Basis rows [U(|q - p_i|)..., 1, q_u, q_v] over the lattice, folded with the
    // target columns of the inverse.
    const Eigen::Index l = landmark_count();
    const Eigen::Index n = static_cast<Eigen::Index>(width) * height;
    Eigen::MatrixXd basis(n, l + 3);
    lattice_u_.resize(n);
    lattice_v_.resize(n);
    Eigen::Index p = 0;
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u, ++p) {
            const Point2 q{static_cast<double>(u), static_cast<double>(v)};
            for (Eigen::Index i = 0; i < l; ++i)
                basis(p, i) = kernel(landmark_distance(source_[i], q, options_.norm));
            basis(p, l) = 1.0;
            basis(p, l + 1) = q.u;
            basis(p, l + 2) = q.v;
            lattice_u_(p) = q.u;
            lattice_v_(p) = q.v;
        }
    lattice_map_ = basis * inverse_.leftCols(l);

    unit_ = 0.5 * (std::max(width, height) - 1);
}

LandmarkGrid build_landmark_grid(int side_count, int width, int height, TpsOptions opts) {
    return LandmarkGrid(side_count, width, height, opts);
}

namespace {

void check_targets(const LandmarkGrid &grid, std::span<const Point2> targets) {
    if (static_cast<int>(targets.size()) != grid.landmark_count())
        throw ValidationError("expected " + std::to_string(grid.landmark_count()) + " target landmarks, got " +
                              std::to_string(targets.size()));
    for (std::size_t i = 0; i < targets.size(); ++i)
        if (!std::isfinite(targets[i].u) || !std::isfinite(targets[i].v))
            throw ValidationError("target landmark " + std::to_string(i) + " is not finite");
}

} // namespace

TpsCoefficients solve_coefficients(const LandmarkGrid &grid, std::span<const Point2> targets) {
    check_targets(grid, targets);
    const Eigen::Index l = grid.landmark_count();
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(l + 3, 2);
    for (Eigen::Index i = 0; i < l; ++i) {
        rhs(i, 0) = targets[i].u;
        rhs(i, 1) = targets[i].v;
    }
    const Eigen::MatrixXd sol = grid.system_inverse() * rhs;

    TpsCoefficients c;
    c.weights_u.resize(l);
    c.weights_v.resize(l);
    for (Eigen::Index i = 0; i < l; ++i) {
        c.weights_u[i] = sol(i, 0);
        c.weights_v[i] = sol(i, 1);
    }
    c.affine_u = {sol(l, 0), sol(l + 1, 0), sol(l + 2, 0)};
    c.affine_v = {sol(l, 1), sol(l + 1, 1), sol(l + 2, 1)};
    return c;
}

std::vector<Point2> map_coordinates(const LandmarkGrid &grid, const TpsCoefficients &coeffs,
                                    std::span<const Point2> query) {
    const auto &src = grid.source_points();
    const auto norm = grid.options().norm;
    std::vector<Point2> out;
    out.reserve(query.size());
    for (const Point2 &q : query) {
        double fu = coeffs.affine_u[0] + coeffs.affine_u[1] * q.u + coeffs.affine_u[2] * q.v;
        double fv = coeffs.affine_v[0] + coeffs.affine_v[1] * q.u + coeffs.affine_v[2] * q.v;
        for (std::size_t i = 0; i < src.size(); ++i) {
            const double k = kernel(landmark_distance(src[i], q, norm));
            fu += coeffs.weights_u[i] * k;
            fv += coeffs.weights_v[i] * k;
        }
        out.push_back({fu, fv});
    }
    return out;
}

void map_lattice(const LandmarkGrid &grid, std::span<const Point2> targets, Eigen::VectorXd &mapped_u,
                 Eigen::VectorXd &mapped_v) {
    const Eigen::Index l = grid.landmark_count();
    if (static_cast<Eigen::Index>(targets.size()) != l)
        throw ValidationError("expected " + std::to_string(l) + " target landmarks, got " +
                              std::to_string(targets.size()));
    const auto &src = grid.source_points();
    Eigen::VectorXd du(l), dv(l);
    for (Eigen::Index i = 0; i < l; ++i) {
        du(i) = targets[i].u - src[i].u;
        dv(i) = targets[i].v - src[i].v;
    }
    mapped_u.noalias() = grid.lattice_map() * du;
    mapped_u += grid.lattice_u();
    mapped_v.noalias() = grid.lattice_map() * dv;
    mapped_v += grid.lattice_v();
}

} // namespace stkm
