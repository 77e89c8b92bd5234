#include "cbpt/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "cbpt/parallel.hpp"

namespace cbpt {

namespace {

double root_weight(const Tree& t) {
    const auto& w = t.root().class_weights;
    return std::accumulate(w.begin(), w.end(), 0.0);
}

}  // namespace

double weakest_link_alpha(const Tree& t, std::size_t node_id, CostKind kind) {
    const auto& node = t.node(node_id);
    const double rw = root_weight(t);
    const auto leaf_gini = [rw, kind](const TreeNode& n) { return leaf_cost(n, rw, kind); };
    if (node.is_leaf) throw ValidationError("node " + std::to_string(node_id) + " is a leaf");
    double branch_cost = 0.0;
    std::size_t branch_leaves = 0;
    std::vector<std::size_t> stack{node_id};
    while (!stack.empty()) {
        const auto& n = t.node(stack.back());
        stack.pop_back();
        if (n.is_leaf) {
            branch_cost += leaf_gini(n);
            ++branch_leaves;
        } else {
            stack.push_back(n.left);
            stack.push_back(n.right);
        }
    }
    const double g = (leaf_gini(node) - branch_cost) / static_cast<double>(branch_leaves - 1);
    return std::max(0.0, g);
}

PruneSequence::PruneSequence(Tree full, CostKind kind) : full_(std::move(full)), kind_(kind) {
    const auto& nodes = full_.nodes();
    const double rw = root_weight(full_);
    const std::size_t m = nodes.size();
    collapse_step_.assign(m, npos);
    std::vector<double> own(m), cost(m);
    std::vector<std::size_t> leaves(m);
    std::vector<char> is_leaf(m), alive(m);
    for (std::size_t i = 0; i < m; ++i) {
        own[i] = leaf_cost(nodes[i], rw, kind);
        is_leaf[i] = nodes[i].is_leaf ? 1 : 0;
        if (nodes[i].is_leaf) collapse_step_[i] = 0;
    }
    entries_.push_back({0.0, full_.n_leaves()});

    double alpha = 0.0;
    std::vector<double> g(m);
    for (std::size_t step = 1;; ++step) {
        // children are stored after their parent, so a reverse sweep is bottom-up
        for (std::size_t i = m; i-- > 0;) {
            if (is_leaf[i]) {
                cost[i] = own[i];
                leaves[i] = 1;
            } else {
                cost[i] = cost[nodes[i].left] + cost[nodes[i].right];
                leaves[i] = leaves[nodes[i].left] + leaves[nodes[i].right];
            }
        }
        std::fill(alive.begin(), alive.end(), 0);
        alive[0] = 1;
        double min_g = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            if (!alive[i] || is_leaf[i]) continue;
            alive[nodes[i].left] = alive[nodes[i].right] = 1;
            g[i] = std::max(0.0, (own[i] - cost[i]) / static_cast<double>(leaves[i] - 1));
            min_g = std::min(min_g, g[i]);
        }
        if (is_leaf[0]) break;

        for (std::size_t i = 0; i < m; ++i) {
            if (alive[i] && !is_leaf[i] && g[i] == min_g) {
                is_leaf[i] = 1;
                collapse_step_[i] = step;
            }
        }
        alpha = std::max(alpha, min_g);
        std::size_t n_leaves = 0;
        std::vector<std::size_t> stack{0};
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            if (is_leaf[i]) {
                ++n_leaves;
            } else {
                stack.push_back(nodes[i].left);
                stack.push_back(nodes[i].right);
            }
        }
        entries_.push_back({alpha, n_leaves});
    }
}

Tree PruneSequence::subtree(std::size_t j) const {
    if (j >= entries_.size()) throw ValidationError("prune sequence index out of range");
    std::vector<char> collapsed(full_.size(), 0);
    for (std::size_t i = 0; i < full_.size(); ++i) collapsed[i] = collapse_step_[i] <= j ? 1 : 0;
    return collapse_nodes(full_, collapsed);
}

std::size_t PruneSequence::leaf_index(std::size_t j, std::span<const double> x) const noexcept {
    const auto& nodes = full_.nodes();
    std::size_t id = 0;
    while (collapse_step_[id] > j) {
        const auto& n = nodes[id];
        id = x[n.feature] < n.threshold ? n.left : n.right;
    }
    return id;
}

int PruneSequence::predict(std::size_t j, std::span<const double> x) const {
    return argmax_class(full_.node(leaf_index(j, x)).class_weights);
}

std::size_t PruneSequence::index_for_alpha(double alpha) const {
    std::size_t j = 0;
    while (j + 1 < entries_.size() && entries_[j + 1].alpha <= alpha) ++j;
    return j;
}

PruneSequence prune_sequence(const Tree& t, CostKind kind) { return PruneSequence(t, kind); }

double weighted_test_error(const Tree& t, const Dataset& d, std::span<const std::size_t> rows,
                           std::span<const double> weights) {
    if (weights.size() != d.n_samples()) throw ValidationError("weight length mismatch");
    for (auto i : rows) {
        if (!(weights[i] >= 0.0)) throw ValidationError("test weights must be non-negative");
    }
    return weighted_test_error(d, rows, weights, [&t](std::span<const double> x) { return t.predict(x); });
}

double weighted_test_error(const Tree& t, const Dataset& d, std::span<const double> weights) {
    std::vector<std::size_t> rows(d.n_samples());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return weighted_test_error(t, d, rows, weights);
}

Tree best_pruned_tree(const Dataset& d, std::span<const double> weights, std::size_t n_folds,
                      std::uint64_t seed, Impurity impurity, PruneReport* report, CostKind cost) {
    if (n_folds < 2) throw ValidationError("resampling folds must be at least 2");
    if (n_folds > d.n_samples()) {
        throw ValidationError("resampling folds " + std::to_string(n_folds) + " exceed sample count " +
                              std::to_string(d.n_samples()));
    }
    const GrowOptions opts{impurity};
    const PruneSequence full_seq(grow_full_tree(d, weights, opts), cost);
    if (report) {
        *report = {};
        report->full_leaves = full_seq.full_tree().n_leaves();
    }
    const std::size_t J = full_seq.size();
    if (J == 1) return full_seq.full_tree();

    // Candidate j stands for subtree j of T_max: the geometric mean of the
    // alpha interval over which that subtree is optimal, and the last alpha
    // for the root-only tree.
    std::vector<double> candidates(J);
    for (std::size_t j = 0; j + 1 < J; ++j) {
        candidates[j] = std::sqrt(full_seq.entry(j).alpha * full_seq.entry(j + 1).alpha);
    }
    candidates[J - 1] = full_seq.entry(J - 1).alpha;

    const SplitPlan plan = make_folds(d, n_folds, seed, /*stratified=*/false);
    std::vector<std::vector<double>> fold_errors(n_folds);
    parallel_for(n_folds, [&](std::size_t s) {
        const auto train = plan.train_indices(s);
        const auto test = plan.test_indices(s);
        double train_total = 0.0, test_total = 0.0;
        for (auto i : train) train_total += weights[i];
        for (auto i : test) test_total += weights[i];
        if (!(train_total > 0.0) || !(test_total > 0.0)) return;

        std::vector<double> fold_w(d.n_samples(), 0.0);
        for (auto i : train) fold_w[i] = weights[i] / train_total;
        const PruneSequence seq(grow_tree(d, train, fold_w, opts), cost);

        std::map<std::size_t, double> by_subtree;
        auto& errs = fold_errors[s];
        errs.resize(J);
        for (std::size_t c = 0; c < J; ++c) {
            const auto j = seq.index_for_alpha(candidates[c]);
            auto it = by_subtree.find(j);
            if (it == by_subtree.end()) {
                const double e = weighted_test_error(d, test, weights, [&seq, j](std::span<const double> x) {
                    return seq.predict(j, x);
                });
                it = by_subtree.emplace(j, e).first;
            }
            errs[c] = it->second;
        }
    });

    std::vector<double> mean(J, 0.0);
    std::size_t used = 0;
    for (const auto& errs : fold_errors) {
        if (errs.empty()) continue;
        ++used;
        for (std::size_t c = 0; c < J; ++c) mean[c] += errs[c];
    }
    if (used == 0) return full_seq.full_tree();
    for (auto& m : mean) m /= static_cast<double>(used);

    // Only positive alphas compete when some pruned, non-root subtree has
    // one; the unpruned T_max (alpha 0) is then out. A sequence of just
    // [T_max, root] is decided on fold error alone.
    bool any_positive = false;
    for (std::size_t c = 0; c + 1 < J; ++c) any_positive = any_positive || candidates[c] > 0.0;
    auto positive = [&](std::size_t c) { return candidates[c] > 0.0; };
    std::size_t chosen = J;
    for (std::size_t c = 0; c < J; ++c) {
        if (any_positive && !positive(c)) continue;
        // later candidates have larger alpha, so ties move toward the simpler tree
        if (chosen == J || mean[c] <= mean[chosen] + 1e-12) chosen = c;
    }
    const double alpha_star = candidates[chosen];
    if (report) {
        report->candidate_alphas = candidates;
        report->mean_errors = mean;
        report->chosen_candidate = chosen;
        report->alpha_star = alpha_star;
    }
    return full_seq.subtree(full_seq.index_for_alpha(alpha_star));
}

}  // namespace cbpt
