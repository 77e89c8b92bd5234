#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cbpt {

/// Dense N x V numeric feature matrix with class labels in [0, C).
///
/// Immutable after construction. Every constructor path validates the
/// invariants: finite features, labels in range, every class present,
/// N >= 2, V >= 1, C >= 2.
class Dataset {
public:
    /// `features` is row-major with `labels.size()` rows.
    Dataset(std::vector<double> features, std::vector<int> labels,
            std::vector<std::string> feature_names, std::vector<std::string> class_names);

    std::size_t n_samples() const noexcept { return labels_.size(); }
    std::size_t n_features() const noexcept { return feature_names_.size(); }
    std::size_t n_classes() const noexcept { return class_names_.size(); }

    std::span<const double> row(std::size_t i) const {
        return {features_.data() + i * n_features(), n_features()};
    }
    double at(std::size_t i, std::size_t v) const { return features_[i * n_features() + v]; }
    int label(std::size_t i) const { return labels_[i]; }

    std::span<const double> features() const noexcept { return features_; }
    std::span<const int> labels() const noexcept { return labels_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }

    /// Per-class sample counts.
    std::vector<std::size_t> class_counts() const;

    /// Rows `indices` in the given order. Keeps the full class list, so the
    /// subset must still contain every class.
    Dataset subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<double> features_;
    std::vector<int> labels_;
    std::vector<std::string> feature_names_;
    std::vector<std::string> class_names_;
};

/// Header plus raw string cells of a comma-separated file.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv_table(const std::filesystem::path& path);

/// Loads a labelled dataset. Class indices follow first appearance of each
/// distinct label string; feature columns keep file order.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

/// Builds a dataset from an already parsed table.
Dataset dataset_from_table(const CsvTable& table, const std::string& label_column);

/// Writes `d` so that load_csv(path, label_column) reproduces it exactly.
void save_csv(const Dataset& d, const std::filesystem::path& path,
              const std::string& label_column = "class");

/// Reads the feature columns named in `feature_names` (any order in the
/// file, extra columns ignored) into a row-major matrix.
std::vector<double> read_feature_matrix(const CsvTable& table,
                                        const std::vector<std::string>& feature_names);

/// Fold index per sample.
struct SplitPlan {
    std::vector<std::size_t> fold_assignments;
    std::size_t n_folds = 0;
    std::uint64_t seed = 0;
    bool stratified = false;

    std::vector<std::size_t> test_indices(std::size_t fold) const;
    std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Assigns samples to `n_folds` non-empty folds. With `stratified` each class
/// is dealt round-robin over the folds after a seeded shuffle, so per-class
/// fold sizes differ by at most one.
SplitPlan make_folds(std::span<const int> labels, std::size_t n_classes, std::size_t n_folds,
                     std::uint64_t seed, bool stratified);
SplitPlan make_folds(const Dataset& d, std::size_t n_folds, std::uint64_t seed, bool stratified);

struct TrainTestIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-class shuffled split. Each class contributes round(n_c * test_fraction)
/// test samples, clamped to [1, n_c - 1].
TrainTestIndices stratified_split_indices(const Dataset& d, double test_fraction,
                                          std::uint64_t seed);
std::pair<Dataset, Dataset> stratified_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed);

}  // namespace cbpt
