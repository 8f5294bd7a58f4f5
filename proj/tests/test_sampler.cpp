#include <doctest.h>

#include "stkm/error.hpp"
#include "stkm/sampler.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace stkm;

namespace {

// Direct tent-kernel sum over every pixel.
double tent_sample(const Image &img, double u, double v) {
    double s = 0;
    for (int n = 0; n < img.height; ++n)
        for (int m = 0; m < img.width; ++m)
            s += img.at(m, n) * std::max(0.0, 1 - std::abs(u - m)) * std::max(0.0, 1 - std::abs(v - n));
    return s;
}

double loss_at(const Image &x, const Image &mu, const LandmarkGrid &g, const std::vector<Point2> &t) {
    const Image w = transform(x, g, t).image;
    double s = 0;
    for (std::size_t p = 0; p < w.size(); ++p)
        s += (w.pixels[p] - mu.pixels[p]) * (w.pixels[p] - mu.pixels[p]);
    return s;
}

double kink_distance(const LandmarkGrid &g, const std::vector<Point2> &t) {
    Eigen::VectorXd mu, mv;
    map_lattice(g, t, mu, mv);
    double d = 1.0;
    for (Eigen::Index p = 0; p < mu.size(); ++p) {
        d = std::min(d, std::abs(mu(p) - std::round(mu(p))));
        d = std::min(d, std::abs(mv(p) - std::round(mv(p))));
    }
    return d;
}

} // namespace

TEST_CASE("identity lattice reproduces the image") {
    std::mt19937_64 rng(1);
    const Image img = support::random_image(9, 7, rng);
    const auto w = sample(img, pixel_lattice(9, 7)).image;
    CHECK(w == img);
    const LandmarkGrid g(3, 9, 7);
    CHECK(transform(img, g, g.source_points()).image == img);
}

TEST_CASE("midpoint of a two-column ramp") {
    Image img(2, 2);
    img.at(1, 0) = 1;
    img.at(1, 1) = 1;
    std::vector<Point2> q(4, Point2{0.5, 0.0});
    CHECK(sample(img, q).image.pixels[0] == doctest::Approx(0.5));
    q.assign(4, Point2{0.5, 0.5});
    CHECK(sample(img, q).image.pixels[0] == doctest::Approx(0.5));
}

TEST_CASE("sampler matches the tent-kernel formula") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-3.0, 14.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Image img = support::random_image(12, 10, rng);
        std::vector<Point2> q(img.size());
        for (auto &p : q)
            p = {d(rng), d(rng)};
        const auto w = sample(img, q).image;
        for (std::size_t p = 0; p < q.size(); ++p)
            CHECK(std::abs(w.pixels[p] - tent_sample(img, q[p].u, q[p].v)) < 1e-12);
    }
}

TEST_CASE("smooth warp matches the tent-kernel formula") {
    std::mt19937_64 rng(3);
    const Image img = support::blob_image(16, 16, rng);
    const LandmarkGrid g(4, 16, 16);
    const auto t = support::jitter(g.source_points(), 1.5, rng);
    const auto w = transform(img, g, t).image;
    const auto mapped = map_coordinates(g, solve_coefficients(g, t), pixel_lattice(16, 16));
    const auto composed = sample(img, mapped).image;
    for (std::size_t p = 0; p < mapped.size(); ++p) {
        CHECK(std::abs(w.pixels[p] - tent_sample(img, mapped[p].u, mapped[p].v)) < 1e-8);
        CHECK(std::abs(w.pixels[p] - composed.pixels[p]) < 1e-8);
    }
}

TEST_CASE("whole-pixel translation shifts with zero fill") {
    std::mt19937_64 rng(4);
    const Image img = support::random_image(10, 8, rng);
    const LandmarkGrid g(3, 10, 8);
    const auto w = transform(img, g, support::shifted(g.source_points(), 1.0, 0.0)).image;
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 10; ++u) {
            const double expect = u + 1 < 10 ? img.at(u + 1, v) : 0.0;
            CHECK(std::abs(w.at(u, v) - expect) < 1e-12);
        }
}

TEST_CASE("out of frame samples read zero and non-finite read NaN") {
    Image img(3, 3, 1.0);
    std::vector<Point2> q(9, Point2{-1.0, 1.0});
    q[1] = {3.0, 1.0};
    q[2] = {1.0, -2.5};
    q[3] = {2.5, 1.0};
    q[4] = {std::nan(""), 0.0};
    const auto w = sample(img, q).image;
    CHECK(w.pixels[0] == 0.0);
    CHECK(w.pixels[1] == 0.0);
    CHECK(w.pixels[2] == 0.0);
    CHECK(w.pixels[3] == doctest::Approx(0.5));
    CHECK(std::isnan(w.pixels[4]));
}

TEST_CASE("bilinear weights form a partition of unity") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(0.0, 6.0);
    const Image ones(7, 7, 1.0);
    std::vector<Point2> q(49);
    for (auto &p : q)
        p = {d(rng), d(rng)};
    for (double s : sample(ones, q).image.pixels)
        CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("one input pixel only reaches its 2x2 neighbourhood") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> d(-1.0, 9.0);
    Image img = support::random_image(8, 8, rng);
    std::vector<Point2> q(64);
    for (auto &p : q)
        p = {d(rng), d(rng)};
    const auto before = sample(img, q).image;
    img.at(3, 4) += 0.5;
    const auto after = sample(img, q).image;
    for (std::size_t p = 0; p < q.size(); ++p) {
        const bool near = std::abs(q[p].u - 3) < 1 && std::abs(q[p].v - 4) < 1;
        if (!near)
            CHECK(after.pixels[p] == before.pixels[p]);
    }
}

TEST_CASE("right-limit subgradient at integer coordinates") {
    Image img(3, 1);
    img.pixels = {0.0, 1.0, 5.0};
    const auto w = sample(img, std::vector<Point2>{{1.0, 0.0}, {0.0, 0.0}, {1.5, 0.0}}, true);
    CHECK(w.coordinate_jacobian[0].u == doctest::Approx(4.0));
    CHECK(w.coordinate_jacobian[1].u == doctest::Approx(1.0));
    CHECK(w.coordinate_jacobian[2].u == doctest::Approx(4.0));
}

TEST_CASE("matched pair has zero loss and zero gradient") {
    std::mt19937_64 rng(7);
    const Image img = support::blob_image(20, 20, rng);
    const LandmarkGrid g(4, 20, 20);
    const auto lg = loss_and_gradient(img, img, g, g.source_points());
    CHECK(lg.loss == 0.0);
    for (double x : lg.gradient)
        CHECK(std::abs(x) < 1e-10);
}

TEST_CASE("analytic gradient matches central differences away from kinks") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> frac(0.3, 0.7);
    std::uniform_int_distribution<int> side(2, 6);
    const double h = 1e-3;
    int accepted = 0;
    while (accepted < 100) {
        const int w = 14, hgt = 12;
        const LandmarkGrid g(side(rng), w, hgt);
        const Image x = support::random_image(w, hgt, rng);
        const Image mu = support::random_image(w, hgt, rng);
        auto t = support::jitter(support::shifted(g.source_points(), frac(rng), frac(rng)), 0.04, rng);
        if (kink_distance(g, t) < 1e-2)
            continue;
        ++accepted;
        const auto lg = loss_and_gradient(x, mu, g, t);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < t.size(); ++i)
            for (int axis = 0; axis < 2; ++axis) {
                auto tp = t, tm = t;
                (axis ? tp[i].v : tp[i].u) += h;
                (axis ? tm[i].v : tm[i].u) -= h;
                const double fd = (loss_at(x, mu, g, tp) - loss_at(x, mu, g, tm)) / (2 * h);
                const double an = lg.gradient[2 * i + axis];
                num += (an - fd) * (an - fd);
                den += fd * fd;
            }
        CHECK(std::sqrt(num / den) < 1e-4);
    }
}

TEST_CASE("translation line scan agrees in sign with the slope") {
    std::mt19937_64 rng(9);
    const Image mu = support::blob_image(24, 24, rng);
    const LandmarkGrid g(3, 24, 24);
    const Image x = transform(mu, g, support::shifted(g.source_points(), -2.3, 0.0)).image;
    for (double s = -4.0; s <= 4.0; s += 0.37) {
        const auto t = support::shifted(g.source_points(), s, 0.0);
        const auto lg = loss_and_gradient(x, mu, g, t);
        double dir = 0;
        for (std::size_t i = 0; i < t.size(); ++i)
            dir += lg.gradient[2 * i];
        const double slope = (loss_at(x, mu, g, support::shifted(g.source_points(), s + 1e-4, 0)) -
                              loss_at(x, mu, g, support::shifted(g.source_points(), s - 1e-4, 0))) /
                             2e-4;
        if (std::abs(slope) > 1e-3)
            CHECK((dir > 0) == (slope > 0));
    }
}

TEST_CASE("lattice map is the derivative of the mapped coordinates") {
    std::mt19937_64 rng(10);
    const LandmarkGrid g(5, 16, 16);
    const auto t = support::jitter(g.source_points(), 1.0, rng);
    auto dt = support::jitter(std::vector<Point2>(t.size()), 0.3, rng);
    std::vector<Point2> t2(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        t2[i] = {t[i].u + dt[i].u, t[i].v + dt[i].v};
    Eigen::VectorXd du(t.size()), dv(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        du(static_cast<Eigen::Index>(i)) = dt[i].u, dv(static_cast<Eigen::Index>(i)) = dt[i].v;
    const Eigen::VectorXd pu = g.lattice_map() * du, pv = g.lattice_map() * dv;
    const auto lattice = pixel_lattice(16, 16);
    const auto m1 = map_coordinates(g, solve_coefficients(g, t), lattice);
    const auto m2 = map_coordinates(g, solve_coefficients(g, t2), lattice);
    for (std::size_t p = 0; p < lattice.size(); ++p) {
        CHECK(std::abs(m2[p].u - m1[p].u - pu(static_cast<Eigen::Index>(p))) < 1e-8);
        CHECK(std::abs(m2[p].v - m1[p].v - pv(static_cast<Eigen::Index>(p))) < 1e-8);
    }
}

TEST_CASE("shape mismatches are rejected") {
    const Image a(8, 8), b(8, 9);
    const LandmarkGrid g(3, 8, 8);
    CHECK_THROWS_AS(loss_and_gradient(a, b, g, g.source_points()), ValidationError);
    CHECK_THROWS_AS(transform(b, g, g.source_points()), ShapeError);
    CHECK_THROWS_AS(sample(a, std::vector<Point2>(3)), ShapeError);
}
