#include "stkm/align.hpp"
#include "stkm/error.hpp"
#include "stkm/sampler.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace stkm {

int AlignmentConfig::affine_steps() const {
    if (affine_stage_steps)
        return *affine_stage_steps;
    return static_cast<int>(std::lround(0.3 * max_steps));
}

void AlignmentConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ValidationError("learning_rate must be positive");
    if (max_steps < 1)
        throw ValidationError("max_steps must be >= 1");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
        throw ValidationError("adam betas must lie in (0, 1)");
    if (!(adam_epsilon > 0.0))
        throw ValidationError("adam_epsilon must be positive");
    if (affine_stage_steps && (*affine_stage_steps < 0 || *affine_stage_steps > max_steps))
        throw ValidationError("affine_stage_steps must lie in [0, max_steps]");
    if (lowpass_kernel_width < 0.0)
        throw ValidationError("lowpass_kernel_width must be >= 0");
    if (convergence_tolerance < 0.0)
        throw ValidationError("convergence_tolerance must be >= 0");
    if (warp_magnitude_cap && !(*warp_magnitude_cap > 0.0))
        throw ValidationError("warp_magnitude_cap must be positive when set");
}

std::vector<Point2> affine_project(const LandmarkGrid &grid, const AffineParams &a) {
    for (double p : a)
        if (!std::isfinite(p))
            throw ValidationError("affine_project: parameters must be finite");
    const Point2 c = grid.center();
    const double s = grid.unit();
    std::vector<Point2> out;
    out.reserve(grid.source_points().size());
    for (const Point2 &p : grid.source_points()) {
        const double pu = (p.u - c.u) / s;
        const double pv = (p.v - c.v) / s;
        out.push_back({c.u + s * (a[0] + (1.0 + a[2]) * pu + a[3] * pv),
                       c.v + s * (a[1] + a[4] * pu + (1.0 + a[5]) * pv)});
    }
    return out;
}

AffineParams fit_affine(const LandmarkGrid &grid, std::span<const Point2> targets) {
    const auto &src = grid.source_points();
    if (targets.size() != src.size())
        throw ValidationError("fit_affine: expected " + std::to_string(src.size()) + " targets");
    const Point2 c = grid.center();
    const double s = grid.unit();
    const Eigen::Index l = static_cast<Eigen::Index>(src.size());
    Eigen::MatrixXd design(l, 3);
    Eigen::MatrixXd rhs(l, 2);
    for (Eigen::Index i = 0; i < l; ++i) {
        const double pu = (src[i].u - c.u) / s;
        const double pv = (src[i].v - c.v) / s;
        design.row(i) << 1.0, pu, pv;
        rhs(i, 0) = (targets[i].u - c.u) / s - pu;
        rhs(i, 1) = (targets[i].v - c.v) / s - pv;
    }
    const Eigen::MatrixXd sol = design.colPivHouseholderQr().solve(rhs);
    return {sol(0, 0), sol(0, 1), sol(1, 0), sol(2, 0), sol(1, 1), sol(2, 1)};
}

double warp_loss(const Image &image, const Image &centroid, const LandmarkGrid &grid,
                 std::span<const Point2> warp_targets) {
    Eigen::VectorXd mu, mv;
    map_lattice(grid, warp_targets, mu, mv);
    return detail::residual_loss(image, centroid, mu, mv, nullptr, nullptr);
}

namespace {

class Adam {
public:
    Adam(const AlignmentConfig &cfg, Eigen::Index dim)
        : lr_(cfg.learning_rate), b1_(cfg.adam_beta1), b2_(cfg.adam_beta2), eps_(cfg.adam_epsilon),
          m_(Eigen::VectorXd::Zero(dim)), v_(Eigen::VectorXd::Zero(dim)) {}

    void step(Eigen::VectorXd &params, const Eigen::VectorXd &grad) {
        ++t_;
        m_ = b1_ * m_ + (1.0 - b1_) * grad;
        v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseProduct(grad);
        const double c1 = 1.0 - std::pow(b1_, t_);
        const double c2 = 1.0 - std::pow(b2_, t_);
        params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
    }

private:
    double lr_, b1_, b2_, eps_;
    Eigen::VectorXd m_, v_;
    int t_ = 0;
};

/// Tracks consecutive small relative changes of the objective.
class Plateau {
public:
    explicit Plateau(double tol) : tol_(tol) {}

    bool update(double loss) {
        if (tol_ <= 0.0)
            return false;
        if (have_prev_) {
            const double rel = std::abs(prev_ - loss) / std::max(std::abs(prev_), 1e-300);
            quiet_ = rel < tol_ ? quiet_ + 1 : 0;
        }
        prev_ = loss;
        have_prev_ = true;
        return quiet_ >= 3;
    }

private:
    double tol_;
    double prev_ = 0.0;
    bool have_prev_ = false;
    int quiet_ = 0;
};

void require_finite(double loss, int step) {
    if (!std::isfinite(loss))
        throw NumericalError("alignment diverged: non-finite loss at step " + std::to_string(step));
}

struct Candidate {
    std::vector<Point2> targets;
    double loss = std::numeric_limits<double>::infinity();
};

void offer(Candidate &best, std::vector<Point2> targets, double loss) {
    if (loss < best.loss) {
        best.loss = loss;
        best.targets = std::move(targets);
    }
}

/// Pixel lattice offsets from the image center, in normalized units.
struct AffineLattice {
    Eigen::VectorXd pu, pv;
    Point2 center;
    double unit;

    explicit AffineLattice(const LandmarkGrid &grid) : center(grid.center()), unit(grid.unit()) {
        pu = (grid.lattice_u().array() - center.u) / unit;
        pv = (grid.lattice_v().array() - center.v) / unit;
    }

    void map(const AffineParams &a, Eigen::VectorXd &mu, Eigen::VectorXd &mv) const {
        mu = (center.u + unit * a[0]) + (unit * (1.0 + a[2])) * pu.array() + (unit * a[3]) * pv.array();
        mv = (center.v + unit * a[1]) + (unit * a[4]) * pu.array() + (unit * (1.0 + a[5])) * pv.array();
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd &gu, const Eigen::VectorXd &gv) const {
        Eigen::VectorXd g(6);
        g << unit * gu.sum(), unit * gv.sum(), unit * gu.dot(pu), unit * gu.dot(pv), unit * gv.dot(pu),
            unit * gv.dot(pv);
        return g;
    }
};

/// Largest landmark displacement (pixels) produced by an affine parameter vector.
double affine_max_displacement(const LandmarkGrid &grid, const AffineParams &a) {
    const auto projected = affine_project(grid, a);
    const auto &src = grid.source_points();
    double worst = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i)
        worst = std::max(worst, std::hypot(projected[i].u - src[i].u, projected[i].v - src[i].v));
    return worst;
}

AffineParams to_affine(const Eigen::VectorXd &x) { return {x(0), x(1), x(2), x(3), x(4), x(5)}; }

} // namespace

AlignmentResult align(const Image &image, const Image &centroid, const LandmarkGrid &grid,
                      const AlignmentConfig &config, std::optional<std::span<const Point2>> warm_start,
                      WarpFamily family) {
    config.validate();
    if (!image.same_shape(centroid))
        throw ShapeError("align: image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                         ", centroid is " + std::to_string(centroid.width) + "x" + std::to_string(centroid.height));
    if (image.width != grid.width() || image.height != grid.height())
        throw ShapeError("align: images do not match the landmark grid dimensions");
    if (warm_start && static_cast<int>(warm_start->size()) != grid.landmark_count())
        throw ValidationError("align: warm start has " + std::to_string(warm_start->size()) + " landmarks, expected " +
                              std::to_string(grid.landmark_count()));

    AlignmentResult result;
    const auto &source = grid.source_points();
    const Eigen::Index l = grid.landmark_count();
    const double unit = grid.unit();
    const std::optional<double> cap = config.warp_magnitude_cap;

    Candidate best;
    offer(best, source, warp_loss(image, centroid, grid, source));
    if (warm_start) {
        std::vector<Point2> warm(warm_start->begin(), warm_start->end());
        const double wl = warp_loss(image, centroid, grid, warm);
        require_finite(wl, 0);
        offer(best, std::move(warm), wl);
    }

    Eigen::VectorXd mu, mv, gu, gv;
    int step = 0;

    // Affine stage on low-pass filtered images.
    const int affine_budget = config.affine_steps();
    if (affine_budget > 0) {
        const Image smooth_image = gaussian_blur(image, config.lowpass_kernel_width);
        const Image smooth_centroid = gaussian_blur(centroid, config.lowpass_kernel_width);
        const AffineLattice lattice(grid);

        Eigen::VectorXd theta = Eigen::VectorXd::Zero(6);
        if (warm_start) {
            const AffineParams guess = fit_affine(grid, *warm_start);
            lattice.map(guess, mu, mv);
            const double warm_smooth = detail::residual_loss(smooth_image, smooth_centroid, mu, mv, nullptr, nullptr);
            lattice.map(to_affine(theta), mu, mv);
            const double id_smooth = detail::residual_loss(smooth_image, smooth_centroid, mu, mv, nullptr, nullptr);
            if (warm_smooth < id_smooth)
                theta = Eigen::Map<const Eigen::VectorXd>(guess.data(), 6);
        }

        Adam adam(config, 6);
        Plateau plateau(config.convergence_tolerance);
        AffineParams best_theta{};
        double best_raw = std::numeric_limits<double>::infinity();
        for (int k = 0; k < affine_budget; ++k, ++step) {
            lattice.map(to_affine(theta), mu, mv);
            const double raw = detail::residual_loss(image, centroid, mu, mv, nullptr, nullptr);
            const double smooth = detail::residual_loss(smooth_image, smooth_centroid, mu, mv, &gu, &gv);
            require_finite(smooth, step);
            require_finite(raw, step);
            result.loss_trace.push_back(smooth);
            if (raw < best_raw) {
                best_raw = raw;
                best_theta = to_affine(theta);
            }
            if (plateau.update(smooth) || k + 1 == affine_budget) {
                ++step;
                break;
            }
            adam.step(theta, lattice.gradient(gu, gv));
            if (cap) {
                const double worst = affine_max_displacement(grid, to_affine(theta));
                if (worst > *cap)
                    theta *= *cap / worst;
            }
        }
        if (std::isfinite(best_raw)) {
            auto targets = affine_project(grid, best_theta);
            const double loss = warp_loss(image, centroid, grid, targets);
            offer(best, std::move(targets), loss);
        }
    }

    if (family == WarpFamily::full_tps) {
        const int budget = config.max_steps - affine_budget;
        // Displacements from the source grid in normalized units.
        Eigen::VectorXd disp_u(l), disp_v(l);
        for (Eigen::Index i = 0; i < l; ++i) {
            disp_u(i) = (best.targets[i].u - source[i].u) / unit;
            disp_v(i) = (best.targets[i].v - source[i].v) / unit;
        }
        Eigen::VectorXd params(2 * l), grad(2 * l);
        params << disp_u, disp_v;
        std::vector<Point2> targets(source.size());
        Adam adam(config, 2 * l);
        Plateau plateau(config.convergence_tolerance);
        const Eigen::MatrixXd &lattice_map = grid.lattice_map();

        for (int k = 0; k < budget; ++k, ++step) {
            for (Eigen::Index i = 0; i < l; ++i)
                targets[i] = {source[i].u + unit * params(i), source[i].v + unit * params(l + i)};
            map_lattice(grid, targets, mu, mv);
            const double loss = detail::residual_loss(image, centroid, mu, mv, &gu, &gv);
            require_finite(loss, step);
            result.loss_trace.push_back(loss);
            offer(best, targets, loss);
            if (plateau.update(loss) || k + 1 == budget) {
                ++step;
                break;
            }
            // targets = source + unit * params, so d/dparams = unit * A^T g.
            grad.head(l).noalias() = lattice_map.transpose() * gu;
            grad.tail(l).noalias() = lattice_map.transpose() * gv;
            grad *= unit;
            adam.step(params, grad);
            if (cap) {
                const double limit = *cap / unit;
                for (Eigen::Index i = 0; i < l; ++i) {
                    const double norm = std::hypot(params(i), params(l + i));
                    if (norm > limit) {
                        params(i) *= limit / norm;
                        params(l + i) *= limit / norm;
                    }
                }
            }
        }
    }

    result.steps_taken = step;
    result.distance = best.loss;
    result.warp_targets = std::move(best.targets);
    result.warped = transform(image, grid, result.warp_targets).image;
    return result;
}

} // namespace stkm
