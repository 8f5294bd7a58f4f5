#include "stkm/sampler.hpp"
#include "stkm/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace stkm {
namespace detail {

constexpr double kGridSnap = 1e-9;

void sample_into(const Image &image, const double *mapped_u, const double *mapped_v, std::size_t count, double *out,
                 double *d_u, double *d_v) {
    const int w = image.width;
    const int h = image.height;
    const double *px = image.pixels.data();
    for (std::size_t p = 0; p < count; ++p) {
        double u = mapped_u[p];
        double v = mapped_v[p];
        // Round-off from the lattice solve must not leak weight onto a neighbour.
        if (std::abs(u - std::nearbyint(u)) < kGridSnap)
            u = std::nearbyint(u);
        if (std::abs(v - std::nearbyint(v)) < kGridSnap)
            v = std::nearbyint(v);
        if (!std::isfinite(u) || !std::isfinite(v)) {
            out[p] = std::numeric_limits<double>::quiet_NaN();
            if (d_u) {
                d_u[p] = 0.0;
                d_v[p] = 0.0;
            }
            continue;
        }
        // Entire 2x2 support outside the frame.
        if (u <= -1.0 || v <= -1.0 || u >= w || v >= h) {
            out[p] = 0.0;
            if (d_u) {
                d_u[p] = 0.0;
                d_v[p] = 0.0;
            }
            continue;
        }
        const double fu0 = std::floor(u);
        const double fv0 = std::floor(v);
        const int u0 = static_cast<int>(fu0);
        const int v0 = static_cast<int>(fv0);
        const double fu = u - fu0;
        const double fv = v - fv0;

        const bool in_u0 = u0 >= 0;
        const bool in_u1 = u0 + 1 < w;
        const bool in_v0 = v0 >= 0;
        const bool in_v1 = v0 + 1 < h;
        const std::size_t row0 = static_cast<std::size_t>(v0) * w;
        const std::size_t row1 = row0 + w;
        const double a = (in_u0 && in_v0) ? px[row0 + u0] : 0.0;
        const double b = (in_u1 && in_v0) ? px[row0 + u0 + 1] : 0.0;
        const double c = (in_u0 && in_v1) ? px[row1 + u0] : 0.0;
        const double d = (in_u1 && in_v1) ? px[row1 + u0 + 1] : 0.0;

        out[p] = (1.0 - fu) * (1.0 - fv) * a + fu * (1.0 - fv) * b + (1.0 - fu) * fv * c + fu * fv * d;
        if (d_u) {
            d_u[p] = (1.0 - fv) * (b - a) + fv * (d - c);
            d_v[p] = (1.0 - fu) * (c - a) + fu * (d - b);
        }
    }
}

double residual_loss(const Image &image, const Image &target, const Eigen::VectorXd &mapped_u,
                     const Eigen::VectorXd &mapped_v, Eigen::VectorXd *grad_u, Eigen::VectorXd *grad_v) {
    const std::size_t n = target.pixels.size();
    thread_local std::vector<double> out;
    out.resize(n);
    double *du = nullptr;
    double *dv = nullptr;
    if (grad_u) {
        grad_u->resize(static_cast<Eigen::Index>(n));
        grad_v->resize(static_cast<Eigen::Index>(n));
        du = grad_u->data();
        dv = grad_v->data();
    }
    sample_into(image, mapped_u.data(), mapped_v.data(), n, out.data(), du, dv);

    double loss = 0.0;
    const double *mu = target.pixels.data();
    for (std::size_t p = 0; p < n; ++p) {
        const double r = out[p] - mu[p];
        loss += r * r;
        if (du) {
            du[p] *= 2.0 * r;
            dv[p] *= 2.0 * r;
        }
    }
    return loss;
}

} // namespace detail

WarpedImage sample(const Image &image, std::span<const Point2> mapped_coords, bool with_jacobian) {
    const std::size_t n = image.pixels.size();
    if (mapped_coords.size() != n)
        throw ShapeError("sample: expected " + std::to_string(n) + " mapped coordinates, got " +
                         std::to_string(mapped_coords.size()));
    std::vector<double> mu(n), mv(n);
    for (std::size_t p = 0; p < n; ++p) {
        mu[p] = mapped_coords[p].u;
        mv[p] = mapped_coords[p].v;
    }
    WarpedImage res{Image(image.width, image.height), {}};
    if (!with_jacobian) {
        detail::sample_into(image, mu.data(), mv.data(), n, res.image.pixels.data(), nullptr, nullptr);
        return res;
    }
    std::vector<double> du(n), dv(n);
    detail::sample_into(image, mu.data(), mv.data(), n, res.image.pixels.data(), du.data(), dv.data());
    res.coordinate_jacobian.resize(n);
    for (std::size_t p = 0; p < n; ++p)
        res.coordinate_jacobian[p] = {du[p], dv[p]};
    return res;
}

namespace {

void check_grid_shape(const Image &image, const LandmarkGrid &grid) {
    if (image.width != grid.width() || image.height != grid.height())
        throw ShapeError("image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                         " but the landmark grid was built for " + std::to_string(grid.width()) + "x" +
                         std::to_string(grid.height()));
}

} // namespace

WarpedImage transform(const Image &image, const LandmarkGrid &grid, std::span<const Point2> warp_targets,
                      bool with_jacobian) {
    check_grid_shape(image, grid);
    Eigen::VectorXd mu, mv;
    map_lattice(grid, warp_targets, mu, mv);
    const std::size_t n = image.pixels.size();
    WarpedImage res{Image(image.width, image.height), {}};
    if (!with_jacobian) {
        detail::sample_into(image, mu.data(), mv.data(), n, res.image.pixels.data(), nullptr, nullptr);
        return res;
    }
    std::vector<double> du(n), dv(n);
    detail::sample_into(image, mu.data(), mv.data(), n, res.image.pixels.data(), du.data(), dv.data());
    res.coordinate_jacobian.resize(n);
    for (std::size_t p = 0; p < n; ++p)
        res.coordinate_jacobian[p] = {du[p], dv[p]};
    return res;
}

LossGradient loss_and_gradient(const Image &image, const Image &target, const LandmarkGrid &grid,
                               std::span<const Point2> warp_targets) {
    if (!image.same_shape(target))
        throw ValidationError("loss_and_gradient: image and target dimensions differ");
    check_grid_shape(image, grid);
    Eigen::VectorXd mu, mv, gu, gv;
    map_lattice(grid, warp_targets, mu, mv);
    LossGradient res;
    res.loss = detail::residual_loss(image, target, mu, mv, &gu, &gv);
    const Eigen::VectorXd tu = grid.lattice_map().transpose() * gu;
    const Eigen::VectorXd tv = grid.lattice_map().transpose() * gv;
    res.gradient.resize(2 * static_cast<std::size_t>(tu.size()));
    for (Eigen::Index i = 0; i < tu.size(); ++i) {
        res.gradient[2 * i] = tu(i);
        res.gradient[2 * i + 1] = tv(i);
    }
    return res;
}

} // namespace stkm
