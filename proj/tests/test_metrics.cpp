#include <doctest.h>

#include "stkm/error.hpp"
#include "stkm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

using namespace stkm;

namespace {

std::vector<int> random_labels(std::size_t n, int k, std::mt19937_64 &rng) {
    std::uniform_int_distribution<int> d(0, k - 1);
    std::vector<int> out(n);
    for (auto &x : out)
        x = d(rng);
    return out;
}

// Tries every injective map from predicted ids to true ids (padding with -1).
double brute_accuracy(const std::vector<int> &truth, const std::vector<int> &pred) {
    const int kp = *std::max_element(pred.begin(), pred.end()) + 1;
    const int kt = *std::max_element(truth.begin(), truth.end()) + 1;
    std::vector<int> slots(std::max(kp, kt));
    std::iota(slots.begin(), slots.end(), 0);
    long best = 0;
    do {
        long hit = 0;
        for (std::size_t i = 0; i < truth.size(); ++i)
            hit += slots[pred[i]] == truth[i];
        best = std::max(best, hit);
    } while (std::next_permutation(slots.begin(), slots.end()));
    return static_cast<double>(best) / truth.size();
}

double entropy_oracle(const std::vector<int> &x) {
    std::map<int, double> c;
    for (int v : x)
        c[v] += 1;
    double h = 0;
    for (auto [k, n] : c)
        h -= n / x.size() * std::log(n / x.size());
    return h;
}

double nmi_oracle(const std::vector<int> &a, const std::vector<int> &b) {
    std::map<std::pair<int, int>, double> joint;
    for (std::size_t i = 0; i < a.size(); ++i)
        joint[{a[i], b[i]}] += 1;
    double hj = 0;
    for (auto [k, n] : joint)
        hj -= n / a.size() * std::log(n / a.size());
    const double ha = entropy_oracle(a), hb = entropy_oracle(b);
    return (ha + hb - hj) / std::sqrt(ha * hb);
}

double ari_oracle(const std::vector<int> &a, const std::vector<int> &b) {
    double both = 0, only_a = 0, only_b = 0, total = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += sa && sb;
            only_a += sa;
            only_b += sb;
            total += 1;
        }
    const double expected = only_a * only_b / total;
    return (both - expected) / (0.5 * (only_a + only_b) - expected);
}

std::vector<int> relabel(const std::vector<int> &x, std::mt19937_64 &rng) {
    std::vector<int> perm(64);
    std::iota(perm.begin(), perm.end(), 10);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> out;
    for (int v : x)
        out.push_back(perm[v]);
    return out;
}

} // namespace

TEST_CASE("accuracy examples") {
    CHECK(accuracy(std::vector{0, 0, 1, 1}, std::vector{1, 1, 0, 0}) == 1.0);
    CHECK(accuracy(std::vector{0, 1}, std::vector{0, 0}) == 0.5);
    CHECK(accuracy(std::vector{5, 5, 9}, std::vector{-3, -3, 7}) == 1.0);
}

TEST_CASE("accuracy equals the permutation maximum") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 300; ++trial) {
        const int kt = 1 + trial % 6, kp = 1 + (trial / 6) % 6;
        const auto truth = random_labels(30, kt, rng);
        const auto pred = random_labels(30, kp, rng);
        // Compact so that brute force sees dense ids.
        std::vector<int> t2 = truth, p2 = pred;
        for (auto *v : {&t2, &p2}) {
            std::map<int, int> ids;
            for (int &x : *v)
                x = ids.emplace(x, static_cast<int>(ids.size())).first->second;
        }
        CHECK(accuracy(truth, pred) == doctest::Approx(brute_accuracy(t2, p2)).epsilon(1e-15));
    }
}

TEST_CASE("accuracy beats a greedy matching") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const auto truth = random_labels(60, 5, rng);
        const auto pred = random_labels(60, 5, rng);
        const auto t = contingency(truth, pred);
        std::vector<bool> used_r(t.predicted_count), used_c(t.true_count);
        long hit = 0;
        for (int round = 0; round < std::min(t.predicted_count, t.true_count); ++round) {
            long best = -1;
            int br = 0, bc = 0;
            for (int r = 0; r < t.predicted_count; ++r)
                for (int c = 0; c < t.true_count; ++c)
                    if (!used_r[r] && !used_c[c] && t.at(r, c) > best)
                        best = t.at(r, c), br = r, bc = c;
            used_r[br] = used_c[bc] = true;
            hit += best;
        }
        CHECK(accuracy(truth, pred) >= static_cast<double>(hit) / 60 - 1e-15);
    }
}

TEST_CASE("assignment solver on rectangular costs") {
    // 2 rows, 3 cols: optimum picks cols 2 and 0.
    const std::vector<double> cost{4, 9, 1, 2, 8, 7};
    CHECK(solve_assignment(cost, 2, 3) == std::vector<int>{2, 0});
    // 3 rows, 2 cols: one row stays unmatched.
    const std::vector<double> tall{1, 5, 6, 1, 0, 0};
    const auto m = solve_assignment(tall, 3, 2);
    CHECK(std::count(m.begin(), m.end(), -1) == 1);
    CHECK_THROWS_AS(solve_assignment(cost, 3, 3), ValidationError);
}

TEST_CASE("contingency table totals") {
    std::mt19937_64 rng(3);
    const auto a = random_labels(50, 4, rng), b = random_labels(50, 3, rng);
    const auto t = contingency(a, b);
    CHECK(t.n == 50);
    CHECK(std::accumulate(t.counts.begin(), t.counts.end(), std::int64_t{0}) == 50);
    for (auto c : t.counts)
        CHECK(c >= 0);
}

TEST_CASE("NMI and ARI match direct oracles") {
    std::mt19937_64 rng(4);
    int checked = 0;
    while (checked < 1000) {
        const std::size_t n = 2 + rng() % 40;
        const auto a = random_labels(n, 1 + static_cast<int>(rng() % 5), rng);
        const auto b = random_labels(n, 1 + static_cast<int>(rng() % 5), rng);
        if (entropy_oracle(a) == 0 || entropy_oracle(b) == 0)
            continue;
        ++checked;
        CHECK(std::abs(nmi(a, b) - std::clamp(nmi_oracle(a, b), 0.0, 1.0)) < 1e-10);
        const double ar = ari_oracle(a, b);
        if (std::isfinite(ar))
            CHECK(std::abs(ari(a, b) - ar) < 1e-10);
    }
}

TEST_CASE("degenerate partitions") {
    const std::vector<int> two{0, 0, 1, 1}, one{3, 3, 3, 3};
    CHECK(nmi(two, one) == 0.0);
    CHECK(nmi(one, two) == 0.0);
    CHECK(nmi(one, one) == 1.0);
    CHECK(ari(two, one) == 0.0);
    CHECK(ari_oracle(two, one) == 0.0);
    CHECK(ari(one, one) == 1.0);
    CHECK(accuracy(two, one) == 0.5);
}

TEST_CASE("self agreement and relabeling invariance") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_labels(40, 2 + trial % 6, rng);
        const auto b = random_labels(40, 2 + trial % 4, rng);
        if (entropy_oracle(a) == 0)
            continue;
        CHECK(accuracy(a, a) == 1.0);
        CHECK(nmi(a, a) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(ari(a, a) == doctest::Approx(1.0).epsilon(1e-12));
        const auto ra = relabel(a, rng), rb = relabel(b, rng);
        CHECK(accuracy(ra, rb) == accuracy(a, b));
        CHECK(std::abs(nmi(ra, rb) - nmi(a, b)) < 1e-12);
        CHECK(std::abs(ari(ra, rb) - ari(a, b)) < 1e-12);
    }
}

TEST_CASE("metric input errors") {
    CHECK_THROWS_AS(accuracy(std::vector{0, 1}, std::vector{0}), ValidationError);
    CHECK_THROWS_AS(nmi(std::vector{0, 1}, std::vector{0}), ValidationError);
    CHECK_THROWS_AS(ari(std::vector{0}, std::vector{0}), ValidationError);
    CHECK_THROWS_AS(nmi(std::vector<int>{}, std::vector<int>{}), ValidationError);
}

TEST_CASE("spearman rank correlation") {
    CHECK(spearman(std::vector{1.0, 2.0, 3.0}, std::vector{10.0, 20.0, 30.0}) == doctest::Approx(1.0));
    CHECK(spearman(std::vector{1.0, 2.0, 3.0, 4.0}, std::vector{9.0, 4.0, 1.0, 0.0}) == doctest::Approx(-1.0));
    // Ties take average ranks: ranks (1.5, 1.5, 3) against (1, 2, 3).
    const double expect = 1.5 / std::sqrt(1.5 * 2.0);
    CHECK(spearman(std::vector{5.0, 5.0, 7.0}, std::vector{1.0, 2.0, 3.0}) == doctest::Approx(expect));
    CHECK(spearman(std::vector{1.0, 1.0}, std::vector{1.0, 2.0}) == 0.0);
    CHECK_THROWS_AS(spearman(std::vector{1.0}, std::vector{1.0}), ValidationError);
}
