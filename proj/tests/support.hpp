#pragma once

// Shared fixtures for the unit and acceptance tests: small synthetic
// datasets, hand-built trees, scratch directories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "cbpt/dataset.hpp"
#include "cbpt/tree.hpp"

namespace cbpt::test {

inline std::vector<std::string> names(const char* prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

/// n samples, v features drawn uniformly from [0, 1), labels uniform over c
/// classes. With `grid` > 0 features are snapped to {0, ..., grid - 1}, so
/// duplicate points with conflicting labels become likely.
inline Dataset random_dataset(std::size_t n, std::size_t v, std::size_t c, std::uint64_t seed, int grid = 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (;;) {
        std::vector<double> x(n * v);
        for (auto& e : x) e = grid > 0 ? std::floor(unit(rng) * grid) : unit(rng);
        std::vector<int> y(n);
        std::vector<char> seen(c, 0);
        for (auto& l : y) {
            l = static_cast<int>(rng() % c);
            seen[static_cast<std::size_t>(l)] = 1;
        }
        if (std::find(seen.begin(), seen.end(), 0) != seen.end()) continue;  // redraw until every class shows up
        return Dataset(std::move(x), std::move(y), names("f", v), names("c", c));
    }
}

/// Two well separated blobs in the first feature; the rest is noise.
inline Dataset separable_dataset(std::size_t n_per_class, std::size_t v, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x;
    std::vector<int> y;
    for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
        const int label = static_cast<int>(i % 2);
        x.push_back(label * 10.0 + unit(rng));
        for (std::size_t f = 1; f < v; ++f) x.push_back(unit(rng));
        y.push_back(label);
    }
    return Dataset(std::move(x), std::move(y), names("f", v), {"neg", "pos"});
}

inline TreeNode leaf_node(std::size_t id, std::size_t depth, std::vector<double> weights, std::size_t count,
                          double impurity = 0.0) {
    TreeNode n;
    n.id = id;
    n.depth = depth;
    n.class_weights = std::move(weights);
    n.sample_count = count;
    n.impurity = impurity;
    return n;
}

inline TreeNode split_node(std::size_t id, std::size_t depth, std::size_t feature, double threshold,
                           std::size_t left, std::size_t right, std::vector<double> weights, std::size_t count,
                           double gain = 0.0) {
    TreeNode n = leaf_node(id, depth, std::move(weights), count);
    n.is_leaf = false;
    n.feature = feature;
    n.threshold = threshold;
    n.left = left;
    n.right = right;
    n.gain = gain;
    return n;
}

inline Tree root_only(std::vector<double> weights, std::size_t count, std::size_t n_features = 1) {
    const auto c = weights.size();
    return Tree({leaf_node(0, 0, std::move(weights), count)}, n_features, c, Impurity::gini);
}

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("cbpt-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string write(const std::string& name, const std::string& contents) const {
        std::ofstream(path_ / name, std::ios::binary) << contents;
        return file(name);
    }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace cbpt::test
