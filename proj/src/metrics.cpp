#include "stkm/metrics.hpp"
#include "stkm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

namespace stkm {

namespace {

std::vector<int> compact(std::span<const int> labels, int &count) {
    std::unordered_map<int, int> index;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) {
        auto [it, inserted] = index.emplace(l, static_cast<int>(index.size()));
        out.push_back(it->second);
    }
    count = static_cast<int>(index.size());
    return out;
}

void check_lengths(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size())
        throw ValidationError("label sequences differ in length: " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
}

double choose2(double x) { return 0.5 * x * (x - 1.0); }

} // namespace

ContingencyTable contingency(std::span<const int> true_labels, std::span<const int> predicted) {
    check_lengths(true_labels, predicted);
    ContingencyTable t;
    const auto truth = compact(true_labels, t.true_count);
    const auto pred = compact(predicted, t.predicted_count);
    t.counts.assign(static_cast<std::size_t>(t.predicted_count) * t.true_count, 0);
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++t.counts[static_cast<std::size_t>(pred[i]) * t.true_count + truth[i]];
    t.n = static_cast<std::int64_t>(truth.size());
    return t;
}

std::vector<int> solve_assignment(std::span<const double> cost, int rows, int cols) {
    if (cost.size() != static_cast<std::size_t>(rows) * cols)
        throw ValidationError("assignment cost matrix has the wrong size");
    if (rows == 0 || cols == 0)
        return std::vector<int>(rows, -1);
    // Square padding with zero-cost dummies, then the O(n^3) potentials method.
    const int n = std::max(rows, cols);
    auto c = [&](int i, int j) -> double {
        if (i < rows && j < cols)
            return cost[static_cast<std::size_t>(i) * cols + j];
        return 0.0;
    };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j])
                    continue;
                const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> match(rows, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] - 1 < rows && j - 1 < cols)
            match[p[j] - 1] = j - 1;
    return match;
}

double accuracy(std::span<const int> true_labels, std::span<const int> predicted) {
    const ContingencyTable t = contingency(true_labels, predicted);
    if (t.n == 0)
        throw ValidationError("accuracy of an empty labeling is undefined");
    if (t.predicted_count > 512 || t.true_count > 512)
        throw ValidationError("accuracy supports at most 512 clusters and 512 labels");
    std::vector<double> cost(t.counts.size());
    for (std::size_t i = 0; i < cost.size(); ++i)
        cost[i] = -static_cast<double>(t.counts[i]);
    const auto match = solve_assignment(cost, t.predicted_count, t.true_count);
    std::int64_t hits = 0;
    for (int r = 0; r < t.predicted_count; ++r)
        if (match[r] >= 0)
            hits += t.at(r, match[r]);
    return static_cast<double>(hits) / static_cast<double>(t.n);
}

double nmi(std::span<const int> true_labels, std::span<const int> predicted) {
    const ContingencyTable t = contingency(true_labels, predicted);
    if (t.n == 0)
        throw ValidationError("NMI of an empty labeling is undefined");
    const double n = static_cast<double>(t.n);
    std::vector<double> rows(t.predicted_count, 0.0), cols(t.true_count, 0.0);
    for (int r = 0; r < t.predicted_count; ++r)
        for (int c = 0; c < t.true_count; ++c) {
            rows[r] += static_cast<double>(t.at(r, c));
            cols[c] += static_cast<double>(t.at(r, c));
        }
    auto entropy = [n](const std::vector<double> &m) {
        double h = 0.0;
        for (double x : m)
            if (x > 0.0)
                h -= (x / n) * std::log(x / n);
        return h;
    };
    const double h_pred = entropy(rows);
    const double h_true = entropy(cols);
    if (t.predicted_count == 1 && t.true_count == 1)
        return 1.0;
    if (h_pred <= 0.0 || h_true <= 0.0)
        return 0.0;
    double mi = 0.0;
    for (int r = 0; r < t.predicted_count; ++r)
        for (int c = 0; c < t.true_count; ++c) {
            const double x = static_cast<double>(t.at(r, c));
            if (x > 0.0)
                mi += (x / n) * std::log(n * x / (rows[r] * cols[c]));
        }
    return std::clamp(mi / std::sqrt(h_pred * h_true), 0.0, 1.0);
}

double ari(std::span<const int> true_labels, std::span<const int> predicted) {
    const ContingencyTable t = contingency(true_labels, predicted);
    if (t.n < 2)
        throw ValidationError("ARI needs at least two points");
    double index = 0.0;
    std::vector<double> rows(t.predicted_count, 0.0), cols(t.true_count, 0.0);
    for (int r = 0; r < t.predicted_count; ++r)
        for (int c = 0; c < t.true_count; ++c) {
            const double x = static_cast<double>(t.at(r, c));
            index += choose2(x);
            rows[r] += x;
            cols[c] += x;
        }
    double sum_rows = 0.0, sum_cols = 0.0;
    for (double x : rows)
        sum_rows += choose2(x);
    for (double x : cols)
        sum_cols += choose2(x);
    const double total = choose2(static_cast<double>(t.n));
    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected)
        // Both partitions trivial in the same way (all singletons or one block).
        return index == expected ? 1.0 : 0.0;
    return (index - expected) / (max_index - expected);
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]])
            ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t q = i; q <= j; ++q)
            ranks[order[q]] = rank;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ValidationError("spearman: sequences differ in length");
    if (a.size() < 2)
        throw ValidationError("spearman needs at least two observations");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0)
        return 0.0;
    return sab / std::sqrt(saa * sbb);
}

} // namespace stkm
