#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cbpt/error.hpp"
#include "cbpt/tree.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cbpt;
using test::leaf_node;
using test::split_node;

namespace {

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

// 1-D points 0,1,2,3 labelled a,b,a,b grow into a right-leaning chain.
Dataset chain_data() { return Dataset({0, 1, 2, 3}, {0, 1, 0, 1}, {"x"}, {"a", "b"}); }

}  // namespace

TEST_SUITE("tree") {

TEST_CASE("weighted gini values") {
    CHECK(weighted_gini(std::vector<double>{0.5, 0.5}) == doctest::Approx(0.5));
    CHECK(weighted_gini(std::vector<double>{1.0, 0.0}) == 0.0);
    CHECK(weighted_gini(std::vector<double>{0.75, 0.25}) == doctest::Approx(0.375));
    CHECK_THROWS_AS(weighted_gini(std::vector<double>{0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(weighted_gini(std::vector<double>{-1.0, 2.0}), ValidationError);
    CHECK(weighted_entropy(std::vector<double>{1.0, 1.0}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("gini is scale invariant and bounded") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t c = 2 + static_cast<std::size_t>(trial % 5);
        std::vector<double> s(c), scaled(c);
        for (std::size_t i = 0; i < c; ++i) s[i] = u(rng);
        const double k = 1e-3 + 100.0 * u(rng);
        for (std::size_t i = 0; i < c; ++i) scaled[i] = k * s[i];
        const double g = weighted_gini(s);
        CHECK(weighted_gini(scaled) == doctest::Approx(g).epsilon(1e-12));
        CHECK(g >= 0.0);
        CHECK(g <= 1.0 - 1.0 / static_cast<double>(c) + 1e-12);
        CHECK(g == doctest::Approx(oracle::gini(s)).epsilon(1e-12));
    }
}

TEST_CASE("single separating split") {
    const Dataset d({0, 1}, {0, 1}, {"x"}, {"A", "B"});
    const Tree t = grow_full_tree(d, uniform(2));
    REQUIRE(t.size() == 3);
    CHECK(t.n_leaves() == 2);
    CHECK_FALSE(t.root().is_leaf);
    CHECK(t.root().feature == 0);
    CHECK(t.root().threshold == 0.5);
    CHECK(t.predict(std::vector<double>{0.0}) == 0);
    CHECK(t.predict(std::vector<double>{1.0}) == 1);
}

TEST_CASE("identical features give a root-only tree") {
    const Dataset d({1, 1, 1, 1, 1, 1}, {0, 1, 1}, {"x", "y"}, {"A", "B"});
    const Tree t = grow_full_tree(d, uniform(3));
    CHECK(t.size() == 1);
    CHECK(t.predict(std::vector<double>{1, 1}) == 1);
}

TEST_CASE("xor needs four leaves") {
    const Dataset d({0, 0, 1, 1, 0, 1, 1, 0}, {0, 0, 1, 1}, {"x", "y"}, {"A", "B"});
    const Tree t = grow_full_tree(d, uniform(4));
    CHECK(t.n_leaves() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(t.predict(d.row(i)) == d.label(i));
    // every root split has zero gain; ties resolve to the lowest feature
    const auto splits = oracle::all_root_splits(d, uniform(4));
    for (const auto& s : splits) CHECK(s.gain == doctest::Approx(0.0));
    CHECK(t.root().feature == 0);
    CHECK(tree_cost(t) == 0.0);
}

TEST_CASE("tree cost") {
    SUBCASE("fully grown tree on separable data costs nothing") {
        const Dataset d = test::random_dataset(30, 2, 3, 9);
        const Tree t = grow_full_tree(d, uniform(30));
        CHECK(tree_cost(t) == 0.0);
        CHECK(tree_cost(t, CostKind::leaf_sum) == 0.0);
        CHECK(tree_cost(t, d, uniform(30)) == 0.0);
    }
    SUBCASE("root only") {
        const Tree t = test::root_only({0.5, 0.5}, 2);
        CHECK(tree_cost(t) == doctest::Approx(0.5));
        CHECK(tree_cost(t, CostKind::leaf_sum) == doctest::Approx(0.5));
    }
    SUBCASE("three leaves") {
        // leaves [1,0], [0.5,0.5], [0,1]
        const Tree t({split_node(0, 0, 0, 1.0, 1, 2, {1.5, 1.5}, 4),
                      leaf_node(1, 1, {1.0, 0.0}, 1),
                      split_node(2, 1, 0, 2.0, 3, 4, {0.5, 1.5}, 3),
                      leaf_node(3, 2, {0.5, 0.5}, 2),
                      leaf_node(4, 2, {0.0, 1.0}, 1)},
                     1, 2, Impurity::gini);
        CHECK(tree_cost(t, CostKind::leaf_sum) == doctest::Approx(0.5));
        // the mixed leaf carries a third of the weight
        CHECK(tree_cost(t, CostKind::weight_share) == doctest::Approx(0.5 / 3.0));
    }
}

TEST_CASE("regularized cost") {
    const Tree root = test::root_only({0.5, 0.5}, 2);
    CHECK(regularized_cost(root, 0.0) == tree_cost(root));
    CHECK(regularized_cost(root, 0.1) == doctest::Approx(0.6));
    const Dataset d({0, 0, 1, 1, 0, 1, 1, 0}, {0, 0, 1, 1}, {"x", "y"}, {"A", "B"});
    const Tree xor_tree = grow_full_tree(d, uniform(4));
    CHECK(regularized_cost(xor_tree, 0.05) == doctest::Approx(0.2));
    CHECK_THROWS_AS(regularized_cost(root, -0.1), ValidationError);
}

TEST_CASE("predict") {
    const Tree t = test::root_only({0.7, 0.3}, 10);
    CHECK(t.predict(std::vector<double>{5.0}) == 0);
    CHECK(test::root_only({0.5, 0.5}, 2).predict(std::vector<double>{0.0}) == 0);
    CHECK(test::root_only({0.2, 0.4, 0.4}, 2).predict(std::vector<double>{0.0}) == 1);
    const Dataset d({0, 1}, {1, 0}, {"x"}, {"A", "B"});
    CHECK(grow_full_tree(d, uniform(2)).predict(std::vector<double>{0.0}) == 1);
    CHECK_THROWS_AS(t.predict(std::vector<double>{1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(t.predict(std::vector<double>{NAN}), ValidationError);
}

TEST_CASE("landing nodes") {
    SUBCASE("root only") {
        const Tree t = test::root_only({0.5, 0.5}, 10);
        const auto l = t.find_landing_node(std::vector<double>{1.0});
        CHECK(l.depth == 0);
        CHECK(l.sample_count == 10);
    }
    SUBCASE("two leaves") {
        const Dataset d({0, 1}, {0, 1}, {"x"}, {"A", "B"});
        const Tree t = grow_full_tree(d, uniform(2));
        for (double x : {-5.0, 0.0, 0.6, 3.0}) CHECK(t.find_landing_node(std::vector<double>{x}).depth == 1);
    }
    SUBCASE("chain") {
        const Dataset d = chain_data();
        const Tree t = grow_full_tree(d, uniform(4));
        CHECK(t.max_depth() == 3);
        const auto l = t.find_landing_node(std::vector<double>{3.0});
        CHECK(l.depth == 3);
        CHECK(l.sample_count == 1);
        // manual trace: 0.5 sends x=0 left, 1.5 sends x=1 left, 2.5 separates 2 and 3
        CHECK(t.find_landing_node(std::vector<double>{0.0}).depth == 1);
        CHECK(t.find_landing_node(std::vector<double>{1.0}).depth == 2);
        CHECK(t.find_landing_node(std::vector<double>{2.0}).depth == 3);
    }
}

TEST_CASE("predict and landing node agree") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Dataset d = test::random_dataset(40, 3, 3, seed, 4);
        const Tree t = grow_full_tree(d, uniform(40));
        for (std::size_t i = 0; i < d.n_samples(); ++i) {
            const auto l = t.find_landing_node(d.row(i));
            CHECK(l.node_id == t.leaf_index(d.row(i)));
            CHECK(argmax_class(t.node(l.node_id).class_weights) == t.predict(d.row(i)));
            CHECK(t.node(l.node_id).is_leaf);
        }
    }
}

TEST_CASE("zero weight samples are counted but weightless") {
    const Dataset d({0, 1, 2, 3}, {0, 0, 1, 1}, {"x"}, {"A", "B"});
    const std::vector<double> w{0.5, 0.0, 0.5, 0.0};
    const Tree t = grow_full_tree(d, w);
    REQUIRE(t.n_leaves() == 2);
    // the only positive-weight neighbours are 0 and 2
    CHECK(t.root().threshold == 1.0);
    CHECK(t.root().sample_count == 4);
    const auto& left = t.node(t.root().left);
    CHECK(left.sample_count == 1);
    CHECK(t.node(t.root().right).sample_count == 3);
    CHECK(left.class_weights == std::vector<double>{0.5, 0.0});
}

TEST_CASE("weights are validated") {
    const Dataset d({0, 1}, {0, 1}, {"x"}, {"A", "B"});
    CHECK_THROWS_AS(grow_full_tree(d, std::vector<double>{1.0}), ValidationError);
    CHECK_THROWS_AS(grow_full_tree(d, std::vector<double>{0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(grow_full_tree(d, std::vector<double>{-1.0, 2.0}), ValidationError);
}

TEST_CASE("no duplicated points means zero training error") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Dataset d = test::random_dataset(60, 2, 4, seed);
        std::mt19937_64 rng(seed);
        std::vector<double> w(60);
        for (auto& x : w) x = 0.01 + static_cast<double>(rng() % 100);
        const Tree t = grow_full_tree(d, w);
        for (std::size_t i = 0; i < 60; ++i) CHECK(t.predict(d.row(i)) == d.label(i));
        CHECK(tree_cost(t) == 0.0);
        CHECK_NOTHROW(t.audit());
    }
}

TEST_CASE("root split matches exhaustive search") {
    std::mt19937_64 rng(2024);
    int compared = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = 3 + rng() % 10;
        const std::size_t v = 1 + rng() % 3;
        const std::size_t c = 2 + rng() % 2;
        const Dataset d = test::random_dataset(n, v, c, rng(), trial % 2 ? 5 : 0);
        std::vector<double> w(n);
        for (auto& x : w) x = rng() % 5 == 0 ? 0.0 : 0.05 + static_cast<double>(rng() % 1000) / 1000.0;
        if (std::accumulate(w.begin(), w.end(), 0.0) == 0.0) w[0] = 1.0;

        const Tree t = grow_full_tree(d, w);
        const auto splits = oracle::all_root_splits(d, w);
        std::vector<double> parent(c, 0.0);
        for (std::size_t i = 0; i < n; ++i) parent[static_cast<std::size_t>(d.label(i))] += w[i];
        const bool pure = std::count_if(parent.begin(), parent.end(), [](double s) { return s > 0.0; }) < 2;
        if (pure || splits.empty()) {
            CHECK(t.root().is_leaf);
            continue;
        }
        REQUIRE_FALSE(t.root().is_leaf);
        const double total = std::accumulate(parent.begin(), parent.end(), 0.0);
        double best = -1.0;
        for (const auto& s : splits) best = std::max(best, s.gain);
        // first candidate in (feature, threshold) order within rounding of the best
        const auto first = std::find_if(splits.begin(), splits.end(),
                                        [&](const auto& s) { return s.gain >= best - 1e-9 * total; });
        const auto chosen = std::find_if(splits.begin(), splits.end(), [&](const auto& s) {
            return s.feature == t.root().feature && s.threshold == t.root().threshold;
        });
        REQUIRE(chosen != splits.end());
        CHECK(chosen->gain == doctest::Approx(best).epsilon(1e-9).scale(total));
        CHECK(t.root().gain == doctest::Approx(std::max(0.0, chosen->gain)).epsilon(1e-9).scale(total));
        const bool clear_winner = std::none_of(splits.begin(), splits.end(), [&](const auto& s) {
            return &s != &*first && s.gain > best - 1e-9 * total;
        });
        if (clear_winner) {
            CHECK(chosen == first);
            ++compared;
        }
    }
    CHECK(compared > 100);
}

TEST_CASE("audit catches broken trees") {
    // child class weights do not add up
    CHECK_THROWS_AS(Tree({split_node(0, 0, 0, 0.5, 1, 2, {1.0, 1.0}, 2), leaf_node(1, 1, {1.0, 0.0}, 1),
                          leaf_node(2, 1, {0.0, 0.5}, 1)},
                         1, 2, Impurity::gini),
                    ValidationError);
    // sample counts do not add up
    CHECK_THROWS_AS(Tree({split_node(0, 0, 0, 0.5, 1, 2, {1.0, 1.0}, 3), leaf_node(1, 1, {1.0, 0.0}, 1),
                          leaf_node(2, 1, {0.0, 1.0}, 1)},
                         1, 2, Impurity::gini),
                    ValidationError);
    // depth skips a level
    CHECK_THROWS_AS(Tree({split_node(0, 0, 0, 0.5, 1, 2, {1.0, 1.0}, 2), leaf_node(1, 2, {1.0, 0.0}, 1),
                          leaf_node(2, 1, {0.0, 1.0}, 1)},
                         1, 2, Impurity::gini),
                    ValidationError);
    // orphan node
    CHECK_THROWS_AS(Tree({leaf_node(0, 0, {1.0, 1.0}, 2), leaf_node(1, 1, {1.0, 0.0}, 1)}, 1, 2, Impurity::gini),
                    ValidationError);
}

TEST_CASE("collapse keeps the tree valid") {
    const Dataset d = test::random_dataset(40, 2, 3, 5, 6);
    const Tree t = grow_full_tree(d, uniform(40));
    std::vector<char> mask(t.size(), 0);
    for (std::size_t i = 0; i < t.size(); i += 3) mask[i] = t.node(i).is_leaf ? 0 : 1;
    mask[0] = 0;
    const Tree c = collapse_nodes(t, mask);
    CHECK_NOTHROW(c.audit());
    CHECK(c.n_leaves() <= t.n_leaves());
    CHECK(c.root().class_weights == t.root().class_weights);
}

TEST_CASE("depth limit gives stumps") {
    const Dataset d = test::random_dataset(50, 3, 3, 12);
    const Tree t = grow_full_tree(d, uniform(50), GrowOptions{Impurity::gini, 1});
    CHECK(t.max_depth() == 1);
    CHECK(t.n_leaves() == 2);
}

TEST_CASE("tiny remaining weight does not poison the gain") {
    // the right-hand weight is far below the rounding error of the node total
    const Dataset d({0, 1, 2, 3}, {0, 1, 0, 1}, {"x"}, {"A", "B"});
    const std::vector<double> w{0.5, 0.5 - 1e-20, 1e-20, 1e-20};
    const Tree t = grow_full_tree(d, w);
    for (const auto& n : t.nodes()) CHECK(std::isfinite(n.gain));
    CHECK(t.root().threshold == 0.5);
}

}  // TEST_SUITE
