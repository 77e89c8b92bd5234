#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "cbpt/dataset.hpp"

namespace cbpt {

enum class Impurity { gini, entropy };

std::string_view to_string(Impurity kind);
Impurity impurity_from_string(std::string_view name);

/// Gini impurity 1 - sum_c p_c^2 of a vector of per-class weight sums.
/// Throws ValidationError on a zero or negative total.
double weighted_gini(std::span<const double> class_weight_sums);

/// Shannon entropy (natural log) of the class proportions.
double weighted_entropy(std::span<const double> class_weight_sums);

double impurity_of(std::span<const double> class_weight_sums, Impurity kind);

/// Index of the largest entry; ties go to the lowest index.
int argmax_class(std::span<const double> scores);

struct TreeNode {
    std::size_t id = 0;
    std::size_t depth = 0;
    bool is_leaf = true;
    std::size_t feature = 0;   // internal nodes only
    double threshold = 0.0;    // internal nodes only; x < threshold goes left
    std::size_t left = 0;      // internal nodes only
    std::size_t right = 0;     // internal nodes only
    std::vector<double> class_weights;
    std::size_t sample_count = 0;
    double impurity = 0.0;
    /// Weighted impurity decrease of the split (0 for leaves).
    double gain = 0.0;

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Where a sample ends up when routed through a tree.
struct LandingNode {
    std::size_t depth = 0;
    std::size_t sample_count = 0;
    std::size_t node_id = 0;
    double impurity = 0.0;
};

/// Binary classification tree with nodes stored in preorder (root = 0).
class Tree {
public:
    /// Validates the structure (see audit()).
    Tree(std::vector<TreeNode> nodes, std::size_t n_features, std::size_t n_classes,
         Impurity impurity);

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeNode& node(std::size_t id) const { return nodes_.at(id); }
    const TreeNode& root() const { return nodes_.front(); }
    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t n_leaves() const noexcept { return n_leaves_; }
    std::size_t max_depth() const noexcept { return max_depth_; }
    std::size_t n_features() const noexcept { return n_features_; }
    std::size_t n_classes() const noexcept { return n_classes_; }
    Impurity impurity_kind() const noexcept { return impurity_; }

    /// Leaf reached by `x`; no input validation.
    std::size_t leaf_index(std::span<const double> x) const noexcept;

    /// Majority class (by weight) of the landing leaf.
    int predict(std::span<const double> x) const;
    LandingNode find_landing_node(std::span<const double> x) const;

    /// Re-checks every structural invariant; throws ValidationError.
    void audit() const;

    friend bool operator==(const Tree&, const Tree&) = default;

private:
    void check_input(std::span<const double> x) const;

    std::vector<TreeNode> nodes_;
    std::size_t n_features_ = 0;
    std::size_t n_classes_ = 0;
    Impurity impurity_ = Impurity::gini;
    std::size_t n_leaves_ = 0;
    std::size_t max_depth_ = 0;
};

struct GrowOptions {
    /// Impurity recorded on nodes; split search always uses weighted Gini.
    Impurity impurity = Impurity::gini;
    std::size_t max_depth = std::numeric_limits<std::size_t>::max();
};

/// Grows a weighted CART tree on all samples of `d` until every leaf is pure
/// among positive-weight samples or cannot be split.
Tree grow_full_tree(const Dataset& d, std::span<const double> weights, const GrowOptions& opts = {});

/// Same, restricted to `rows`. `weights` is indexed by sample id (length N).
Tree grow_tree(const Dataset& d, std::span<const std::size_t> rows, std::span<const double> weights,
               const GrowOptions& opts = {});

/// How leaf impurities add up to a tree cost.
enum class CostKind {
    /// Leaf Gini scaled by the leaf's share of the total weight. Used for
    /// pruning by default.
    weight_share,
    /// Plain sum of leaf Gini impurities, each normalized within its leaf.
    leaf_sum,
};

std::string_view to_string(CostKind kind);
CostKind cost_kind_from_string(std::string_view name);

/// Cost contribution of `node` as a leaf; `root_weight` is the total weight
/// at the root. Nodes without weight contribute 0.
double leaf_cost(const TreeNode& node, double root_weight, CostKind kind);

/// Sum of leaf costs from the class weights stored on the tree.
double tree_cost(const Tree& t, CostKind kind = CostKind::weight_share);

/// Sum of leaf costs after routing `d` with weights `w` through the tree.
/// Leaves that receive no weight contribute nothing.
double tree_cost(const Tree& t, const Dataset& d, std::span<const double> weights,
                 CostKind kind = CostKind::weight_share);

/// tree_cost + alpha * n_leaves.
double regularized_cost(const Tree& t, double alpha, CostKind kind = CostKind::weight_share);
double regularized_cost(const Tree& t, const Dataset& d, std::span<const double> weights,
                        double alpha, CostKind kind = CostKind::weight_share);

/// Copy of `t` with every node flagged in `collapsed` turned into a leaf and
/// its descendants dropped. Node ids are renumbered in preorder.
Tree collapse_nodes(const Tree& t, std::span<const char> collapsed);

}  // namespace cbpt
