#pragma once

// External validity indices for a clustering against ground-truth labels.
// Labels and cluster ids may be arbitrary integers; they are compacted to
// dense indices in order of first appearance.

#include <cstdint>
#include <span>
#include <vector>

namespace stkm {

struct ContingencyTable {
    int predicted_count = 0; // rows
    int true_count = 0;      // columns
    std::vector<std::int64_t> counts; // row-major predicted x true
    std::int64_t n = 0;

    std::int64_t at(int pred, int truth) const { return counts[static_cast<std::size_t>(pred) * true_count + truth]; }
};

ContingencyTable contingency(std::span<const int> true_labels, std::span<const int> predicted);

/// Minimum-cost assignment on a rows x cols cost matrix (row-major); returns the
/// column matched to each row, or -1 when rows > cols leaves a row unmatched.
std::vector<int> solve_assignment(std::span<const double> cost, int rows, int cols);

/// Best one-to-one cluster-to-label mapping accuracy, solved exactly.
double accuracy(std::span<const int> true_labels, std::span<const int> predicted);

/// Mutual information normalized by the geometric mean of the two entropies.
double nmi(std::span<const int> true_labels, std::span<const int> predicted);

/// Adjusted Rand index under the permutation model.
double ari(std::span<const int> true_labels, std::span<const int> predicted);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

} // namespace stkm
