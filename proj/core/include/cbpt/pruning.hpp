#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cbpt/dataset.hpp"
#include "cbpt/error.hpp"
#include "cbpt/tree.hpp"

namespace cbpt {

/// Weakest-link value g(t) = (L(t) - L(T_t)) / (|leaves(T_t)| - 1) of an
/// internal node, where L(t) is the node's cost as a leaf and L(T_t) the
/// summed leaf cost of its branch. Clamped at 0. Costs come from the class
/// weights stored on `t`.
double weakest_link_alpha(const Tree& t, std::size_t node_id, CostKind kind = CostKind::weight_share);

/// Nested subtrees of one tree obtained by repeated weakest-link pruning.
///
/// Entry 0 is the unpruned tree (alpha 0); the last entry is the root-only
/// tree. Subtrees are kept implicitly as the step at which each node was
/// collapsed, so long sequences over large trees stay cheap.
class PruneSequence {
public:
    struct Entry {
        double alpha;
        std::size_t n_leaves;
    };

    explicit PruneSequence(Tree full, CostKind kind = CostKind::weight_share);

    std::size_t size() const noexcept { return entries_.size(); }
    const Entry& entry(std::size_t j) const { return entries_.at(j); }
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    const Tree& full_tree() const noexcept { return full_; }
    CostKind cost_kind() const noexcept { return kind_; }

    /// Materialized subtree j.
    Tree subtree(std::size_t j) const;

    /// Leaf of subtree j reached by `x` (id in the full tree).
    std::size_t leaf_index(std::size_t j, std::span<const double> x) const noexcept;
    int predict(std::size_t j, std::span<const double> x) const;

    /// Index of the last entry whose alpha does not exceed `alpha`, i.e. the
    /// subtree minimizing the regularized cost at `alpha`.
    std::size_t index_for_alpha(double alpha) const;

    /// Step at which each node of the full tree becomes a leaf
    /// (0 for original leaves, `npos` for nodes never collapsed).
    const std::vector<std::size_t>& collapse_step() const noexcept { return collapse_step_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    Tree full_;
    CostKind kind_;
    std::vector<Entry> entries_;
    std::vector<std::size_t> collapse_step_;
};

PruneSequence prune_sequence(const Tree& t, CostKind kind = CostKind::weight_share);

/// Weight fraction of misclassified samples among `rows`:
/// sum of w over misses / sum of w.
template <class Predict>
double weighted_test_error(const Dataset& d, std::span<const std::size_t> rows,
                           std::span<const double> weights, Predict&& predict);

double weighted_test_error(const Tree& t, const Dataset& d, std::span<const std::size_t> rows,
                           std::span<const double> weights);

/// Same over all samples of `d`.
double weighted_test_error(const Tree& t, const Dataset& d, std::span<const double> weights);

struct PruneReport {
    std::vector<double> candidate_alphas;
    std::vector<double> mean_errors;
    std::size_t chosen_candidate = 0;
    double alpha_star = 0.0;
    std::size_t full_leaves = 0;
};

/// Resampled weighted pruning: grows T_max on all of `d`, grows one tree per
/// fold complement, and returns the subtree of T_max whose alpha minimizes
/// the mean weighted fold error.
Tree best_pruned_tree(const Dataset& d, std::span<const double> weights, std::size_t n_folds,
                      std::uint64_t seed, Impurity impurity = Impurity::gini,
                      PruneReport* report = nullptr, CostKind cost = CostKind::weight_share);

// ---------------------------------------------------------------------------

template <class Predict>
double weighted_test_error(const Dataset& d, std::span<const std::size_t> rows,
                           std::span<const double> weights, Predict&& predict) {
    double total = 0.0, missed = 0.0;
    for (auto i : rows) {
        const double w = weights[i];
        total += w;
        if (predict(d.row(i)) != d.label(i)) missed += w;
    }
    if (!(total > 0.0)) throw ValidationError("test weights sum to zero");
    return missed / total;
}

}  // namespace cbpt
