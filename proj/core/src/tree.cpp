#include "cbpt/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cbpt/error.hpp"

namespace cbpt {

std::string_view to_string(Impurity kind) {
    return kind == Impurity::gini ? "gini" : "entropy";
}

Impurity impurity_from_string(std::string_view name) {
    if (name == "gini") return Impurity::gini;
    if (name == "entropy") return Impurity::entropy;
    throw ValidationError("unknown impurity '" + std::string(name) + "'");
}

namespace {

double checked_total(std::span<const double> sums) {
    double total = 0.0;
    for (double s : sums) {
        if (!(s >= 0.0)) throw ValidationError("class weight sums must be non-negative");
        total += s;
    }
    if (!(total > 0.0)) throw ValidationError("class weight sums have zero total");
    return total;
}

}  // namespace

double weighted_gini(std::span<const double> class_weight_sums) {
    const double total = checked_total(class_weight_sums);
    double sq = 0.0;
    for (double s : class_weight_sums) {
        const double p = s / total;
        sq += p * p;
    }
    return std::max(0.0, 1.0 - sq);
}

double weighted_entropy(std::span<const double> class_weight_sums) {
    const double total = checked_total(class_weight_sums);
    double h = 0.0;
    for (double s : class_weight_sums) {
        if (s > 0.0) {
            const double p = s / total;
            h -= p * std::log(p);
        }
    }
    return std::max(0.0, h);
}

double impurity_of(std::span<const double> class_weight_sums, Impurity kind) {
    return kind == Impurity::gini ? weighted_gini(class_weight_sums)
                                  : weighted_entropy(class_weight_sums);
}

int argmax_class(std::span<const double> scores) {
    int best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c) {
        if (scores[c] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    }
    return best;
}

Tree::Tree(std::vector<TreeNode> nodes, std::size_t n_features, std::size_t n_classes,
           Impurity impurity)
    : nodes_(std::move(nodes)), n_features_(n_features), n_classes_(n_classes), impurity_(impurity) {
    for (const auto& n : nodes_) {
        if (n.is_leaf) ++n_leaves_;
        max_depth_ = std::max(max_depth_, n.depth);
    }
    audit();
}

void Tree::audit() const {
    if (nodes_.empty()) throw ValidationError("tree has no nodes");
    if (n_classes_ < 2 || n_features_ < 1) throw ValidationError("tree shape is degenerate");
    std::vector<std::size_t> parents(nodes_.size(), 0);
    std::vector<char> has_parent(nodes_.size(), 0);
    std::size_t leaves = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.id != i) throw ValidationError("node id " + std::to_string(n.id) + " stored at " + std::to_string(i));
        if (n.class_weights.size() != n_classes_) throw ValidationError("node class weight length mismatch");
        if (n.is_leaf) {
            ++leaves;
            continue;
        }
        if (n.feature >= n_features_) throw ValidationError("split feature out of range");
        for (auto child : {n.left, n.right}) {
            // preorder storage means children always follow their parent
            if (child <= i || child >= nodes_.size()) throw ValidationError("child id out of order");
            if (has_parent[child]) throw ValidationError("node has two parents");
            has_parent[child] = 1;
            parents[child] = i;
            if (nodes_[child].depth != n.depth + 1) throw ValidationError("child depth mismatch");
        }
        const auto& l = nodes_[n.left];
        const auto& r = nodes_[n.right];
        if (l.sample_count + r.sample_count != n.sample_count) {
            throw ValidationError("sample count of node " + std::to_string(i) + " differs from its children");
        }
        for (std::size_t c = 0; c < n_classes_; ++c) {
            const double sum = l.class_weights[c] + r.class_weights[c];
            if (std::abs(sum - n.class_weights[c]) > 1e-9 * std::max(1.0, std::abs(n.class_weights[c]))) {
                throw ValidationError("class weights of node " + std::to_string(i) + " differ from its children");
            }
        }
    }
    if (nodes_[0].depth != 0) throw ValidationError("root depth must be 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (!has_parent[i]) throw ValidationError("node " + std::to_string(i) + " is unreachable");
    }
    if (leaves != n_leaves_) throw ValidationError("leaf count mismatch");
}

std::size_t Tree::leaf_index(std::span<const double> x) const noexcept {
    std::size_t id = 0;
    while (!nodes_[id].is_leaf) {
        const auto& n = nodes_[id];
        id = x[n.feature] < n.threshold ? n.left : n.right;
    }
    return id;
}

void Tree::check_input(std::span<const double> x) const {
    if (x.size() != n_features_) {
        throw ValidationError("input has " + std::to_string(x.size()) + " features, tree expects " +
                              std::to_string(n_features_));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw ValidationError("input contains a non-finite value");
    }
}

int Tree::predict(std::span<const double> x) const {
    check_input(x);
    return argmax_class(nodes_[leaf_index(x)].class_weights);
}

LandingNode Tree::find_landing_node(std::span<const double> x) const {
    check_input(x);
    const auto& leaf = nodes_[leaf_index(x)];
    return {leaf.depth, leaf.sample_count, leaf.id, leaf.impurity};
}

namespace {

/// Presorted CART growth. Every node owns the same contiguous range
/// [begin, end) in each per-feature order array; splitting stably
/// partitions all arrays so each stays sorted within both children.
class Grower {
public:
    Grower(const Dataset& d, std::span<const std::size_t> rows, std::span<const double> weights,
           const GrowOptions& opts)
        : opts_(opts), n_(rows.size()), v_(d.n_features()), c_(d.n_classes()) {
        if (weights.size() != d.n_samples()) {
            throw ValidationError("weight vector has length " + std::to_string(weights.size()) +
                                  ", expected " + std::to_string(d.n_samples()));
        }
        if (rows.empty()) throw ValidationError("cannot grow a tree on zero samples");
        x_.resize(n_ * v_);
        w_.resize(n_);
        y_.resize(n_);
        double total = 0.0;
        for (std::size_t l = 0; l < n_; ++l) {
            const auto i = rows[l];
            if (i >= d.n_samples()) throw ValidationError("row index out of range");
            const double wi = weights[i];
            if (!(wi >= 0.0) || !std::isfinite(wi)) throw ValidationError("sample weights must be finite and non-negative");
            w_[l] = wi;
            y_[l] = static_cast<std::size_t>(d.label(i));
            total += wi;
            for (std::size_t v = 0; v < v_; ++v) x_[v * n_ + l] = d.at(i, v);
        }
        if (!(total > 0.0)) throw ValidationError("sample weights sum to zero");

        order_.resize(v_ * n_);
        for (std::size_t v = 0; v < v_; ++v) {
            auto* ord = order_.data() + v * n_;
            std::iota(ord, ord + n_, std::size_t{0});
            const double* col = x_.data() + v * n_;
            std::stable_sort(ord, ord + n_, [col](std::size_t a, std::size_t b) { return col[a] < col[b]; });
        }
        buffer_.resize(n_);
        goes_left_.resize(n_);
    }

    Tree grow() {
        struct Pending {
            std::size_t begin, end, depth, parent;
            bool is_left;
        };
        std::vector<TreeNode> nodes;
        std::vector<Pending> stack{{0, n_, 0, 0, false}};
        std::vector<double> left_sums(c_), right_sums(c_);
        while (!stack.empty()) {
            const Pending p = stack.back();
            stack.pop_back();
            const std::size_t id = nodes.size();
            if (id > 0) {
                auto& parent = nodes[p.parent];
                (p.is_left ? parent.left : parent.right) = id;
            }
            TreeNode node;
            node.id = id;
            node.depth = p.depth;
            node.sample_count = p.end - p.begin;
            node.class_weights.assign(c_, 0.0);
            for (std::size_t k = p.begin; k < p.end; ++k) {
                const auto l = order_[k];
                node.class_weights[y_[l]] += w_[l];
            }
            const double total = std::accumulate(node.class_weights.begin(), node.class_weights.end(), 0.0);
            node.impurity = total > 0.0 ? impurity_of(node.class_weights, opts_.impurity) : 0.0;

            const auto classes_present = std::count_if(node.class_weights.begin(), node.class_weights.end(),
                                                       [](double s) { return s > 0.0; });
            Split best;
            if (classes_present > 1 && p.depth < opts_.max_depth) best = find_split(p.begin, p.end, node.class_weights);
            if (!best.found) {
                nodes.push_back(std::move(node));
                continue;
            }
            node.is_leaf = false;
            node.feature = best.feature;
            node.threshold = best.threshold;
            node.gain = std::max(0.0, best.gain);
            const std::size_t mid = partition(p.begin, p.end, best.feature, best.threshold);
            nodes.push_back(std::move(node));
            stack.push_back({mid, p.end, p.depth + 1, id, false});
            stack.push_back({p.begin, mid, p.depth + 1, id, true});
        }
        return Tree(std::move(nodes), v_, c_, opts_.impurity);
    }

private:
    struct Split {
        bool found = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double gain = 0.0;
    };

    static double sum_sq_over_total(std::span<const double> sums, double total) {
        double sq = 0.0;
        for (double s : sums) sq += s * s;
        return sq / total;
    }

    Split find_split(std::size_t begin, std::size_t end, std::span<const double> parent_sums) {
        const double total = std::accumulate(parent_sums.begin(), parent_sums.end(), 0.0);
        const double parent_term = sum_sq_over_total(parent_sums, total);
        // Weighted impurity decrease W*g(P) - W_L*g(L) - W_R*g(R) reduces to
        // sum(L^2)/W_L + sum(R^2)/W_R - sum(P^2)/W.
        const double tol = 1e-12 * total;
        Split best;
        std::vector<double> left(c_), right(c_);
        for (std::size_t v = 0; v < v_; ++v) {
            const std::size_t* ord = order_.data() + v * n_;
            const double* col = x_.data() + v * n_;
            std::fill(left.begin(), left.end(), 0.0);
            double w_left = 0.0;
            std::size_t prev = n_;  // last positive-weight sample seen
            for (std::size_t k = begin; k < end; ++k) {
                const auto l = ord[k];
                if (w_[l] <= 0.0) continue;
                if (prev != n_ && col[l] > col[prev]) {
                    // right-hand sums come from a subtraction that can cancel to
                    // zero when the remaining weight is tiny next to the node total
                    double w_right = 0.0;
                    for (std::size_t c = 0; c < c_; ++c) {
                        right[c] = std::max(0.0, parent_sums[c] - left[c]);
                        w_right += right[c];
                    }
                    const double right_term = w_right > 0.0 ? sum_sq_over_total(right, w_right) : 0.0;
                    const double gain = sum_sq_over_total(left, w_left) + right_term - parent_term;
                    if (!best.found || gain > best.gain + tol) {
                        double thr = 0.5 * (col[prev] + col[l]);
                        if (!(thr > col[prev])) thr = col[l];
                        best = {true, v, thr, gain};
                    }
                }
                left[y_[l]] += w_[l];
                w_left += w_[l];
                prev = l;
            }
        }
        return best;
    }

    std::size_t partition(std::size_t begin, std::size_t end, std::size_t feature, double threshold) {
        const double* col = x_.data() + feature * n_;
        std::size_t n_left = 0;
        for (std::size_t k = begin; k < end; ++k) {
            const auto l = order_[feature * n_ + k];
            goes_left_[l] = col[l] < threshold ? 1 : 0;
            n_left += goes_left_[l];
        }
        for (std::size_t v = 0; v < v_; ++v) {
            std::size_t* ord = order_.data() + v * n_;
            std::size_t li = 0, ri = n_left;
            for (std::size_t k = begin; k < end; ++k) {
                const auto l = ord[k];
                buffer_[goes_left_[l] ? li++ : ri++] = l;
            }
            std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(end - begin), ord + begin);
        }
        return begin + n_left;
    }

    GrowOptions opts_;
    std::size_t n_, v_, c_;
    std::vector<double> x_;  // column-major local copy
    std::vector<double> w_;
    std::vector<std::size_t> y_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> buffer_;
    std::vector<char> goes_left_;
};

}  // namespace

Tree grow_tree(const Dataset& d, std::span<const std::size_t> rows, std::span<const double> weights,
               const GrowOptions& opts) {
    return Grower(d, rows, weights, opts).grow();
}

Tree grow_full_tree(const Dataset& d, std::span<const double> weights, const GrowOptions& opts) {
    std::vector<std::size_t> rows(d.n_samples());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return grow_tree(d, rows, weights, opts);
}

std::string_view to_string(CostKind kind) {
    return kind == CostKind::weight_share ? "weight-share" : "leaf-sum";
}

CostKind cost_kind_from_string(std::string_view name) {
    if (name == "weight-share" || name == "weight_share") return CostKind::weight_share;
    if (name == "leaf-sum" || name == "leaf_sum") return CostKind::leaf_sum;
    throw ValidationError("unknown cost kind '" + std::string(name) + "'");
}

namespace {

double cost_of(std::span<const double> sums, double root_weight, CostKind kind) {
    const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
    if (!(total > 0.0)) return 0.0;
    const double g = weighted_gini(sums);
    return kind == CostKind::leaf_sum ? g : g * total / root_weight;
}

double root_weight_of(const Tree& t) {
    const auto& w = t.root().class_weights;
    return std::accumulate(w.begin(), w.end(), 0.0);
}

}  // namespace

double leaf_cost(const TreeNode& node, double root_weight, CostKind kind) {
    if (kind == CostKind::weight_share && !(root_weight > 0.0)) {
        throw ValidationError("root weight must be positive");
    }
    return cost_of(node.class_weights, root_weight, kind);
}

double tree_cost(const Tree& t, CostKind kind) {
    const double root_weight = root_weight_of(t);
    double cost = 0.0;
    for (const auto& n : t.nodes()) {
        if (n.is_leaf) cost += cost_of(n.class_weights, root_weight, kind);
    }
    return cost;
}

double tree_cost(const Tree& t, const Dataset& d, std::span<const double> weights, CostKind kind) {
    if (weights.size() != d.n_samples()) throw ValidationError("weight length mismatch");
    if (d.n_features() != t.n_features() || d.n_classes() != t.n_classes()) {
        throw ValidationError("dataset shape does not match tree");
    }
    std::vector<double> sums(t.size() * t.n_classes(), 0.0);
    double root_weight = 0.0;
    for (std::size_t i = 0; i < d.n_samples(); ++i) {
        if (!(weights[i] >= 0.0)) throw ValidationError("negative sample weight");
        sums[t.leaf_index(d.row(i)) * t.n_classes() + static_cast<std::size_t>(d.label(i))] += weights[i];
        root_weight += weights[i];
    }
    if (!(root_weight > 0.0)) throw ValidationError("sample weights sum to zero");
    double cost = 0.0;
    for (const auto& n : t.nodes()) {
        if (!n.is_leaf) continue;
        cost += cost_of(std::span<const double>(sums.data() + n.id * t.n_classes(), t.n_classes()), root_weight, kind);
    }
    return cost;
}

double regularized_cost(const Tree& t, double alpha, CostKind kind) {
    if (!(alpha >= 0.0)) throw ValidationError("alpha must be non-negative");
    return tree_cost(t, kind) + alpha * static_cast<double>(t.n_leaves());
}

double regularized_cost(const Tree& t, const Dataset& d, std::span<const double> weights, double alpha,
                        CostKind kind) {
    if (!(alpha >= 0.0)) throw ValidationError("alpha must be non-negative");
    return tree_cost(t, d, weights, kind) + alpha * static_cast<double>(t.n_leaves());
}

Tree collapse_nodes(const Tree& t, std::span<const char> collapsed) {
    if (collapsed.size() != t.size()) throw ValidationError("collapse mask length mismatch");
    std::vector<TreeNode> out;
    struct Pending {
        std::size_t src, parent;
        bool is_left;
    };
    std::vector<Pending> stack{{0, 0, false}};
    while (!stack.empty()) {
        const Pending p = stack.back();
        stack.pop_back();
        const std::size_t id = out.size();
        if (id > 0) (p.is_left ? out[p.parent].left : out[p.parent].right) = id;
        TreeNode n = t.node(p.src);
        n.id = id;
        if (n.is_leaf || collapsed[p.src]) {
            n.is_leaf = true;
            n.feature = 0;
            n.threshold = 0.0;
            n.left = n.right = 0;
            n.gain = 0.0;
            out.push_back(std::move(n));
            continue;
        }
        const auto l = n.left, r = n.right;
        out.push_back(std::move(n));
        stack.push_back({r, id, false});
        stack.push_back({l, id, true});
    }
    return Tree(std::move(out), t.n_features(), t.n_classes(), t.impurity_kind());
}

}  // namespace cbpt
