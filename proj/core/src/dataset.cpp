#include "cbpt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "cbpt/error.hpp"
#include "random.hpp"

namespace cbpt {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        auto cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        // tolerate surrounding blanks and quotes on label cells
        const auto b = cell.find_first_not_of(" \t\"");
        const auto e = cell.find_last_not_of(" \t\"");
        cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && std::isfinite(out);
}

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

}  // namespace

Dataset::Dataset(std::vector<double> features, std::vector<int> labels,
                 std::vector<std::string> feature_names, std::vector<std::string> class_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      feature_names_(std::move(feature_names)),
      class_names_(std::move(class_names)) {
    const std::size_t n = labels_.size();
    const std::size_t v = feature_names_.size();
    const std::size_t c = class_names_.size();
    if (n < 2) throw ValidationError("dataset needs at least 2 samples, got " + std::to_string(n));
    if (v < 1) throw ValidationError("dataset needs at least 1 feature");
    if (c < 2) throw ValidationError("dataset needs at least 2 classes, got " + std::to_string(c));
    if (features_.size() != n * v) {
        throw ValidationError("feature matrix has " + std::to_string(features_.size()) +
                              " cells, expected " + std::to_string(n * v));
    }
    for (std::size_t k = 0; k < features_.size(); ++k) {
        if (!std::isfinite(features_[k])) {
            throw ValidationError("non-finite feature value at sample " + std::to_string(k / v) +
                                  ", feature " + std::to_string(k % v));
        }
    }
    std::vector<std::size_t> seen(c, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= c) {
            throw ValidationError("label " + std::to_string(labels_[i]) + " of sample " +
                                  std::to_string(i) + " outside [0, " + std::to_string(c) + ")");
        }
        ++seen[static_cast<std::size_t>(labels_[i])];
    }
    for (std::size_t k = 0; k < c; ++k) {
        if (seen[k] == 0) throw ValidationError("class '" + class_names_[k] + "' has no samples");
    }
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(n_classes(), 0);
    for (int y : labels_) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    std::vector<double> f;
    f.reserve(indices.size() * n_features());
    std::vector<int> y;
    y.reserve(indices.size());
    for (auto i : indices) {
        if (i >= n_samples()) throw ValidationError("subset index out of range");
        auto r = row(i);
        f.insert(f.end(), r.begin(), r.end());
        y.push_back(labels_[i]);
    }
    return Dataset(std::move(f), std::move(y), feature_names_, class_names_);
}

CsvTable read_csv_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path.string());
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
            if (line.empty()) continue;
            table.header = split_line(line);
            have_header = true;
            continue;
        }
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size()) {
            throw ParseError(table.rows.size() + 2, std::min(cells.size(), table.header.size()) + 1,
                             "expected " + std::to_string(table.header.size()) + " cells, found " +
                                 std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (!have_header) throw SchemaError("empty file: " + path.string());
    return table;
}

Dataset dataset_from_table(const CsvTable& table, const std::string& label_column) {
    const auto it = std::find(table.header.begin(), table.header.end(), label_column);
    if (it == table.header.end()) throw SchemaError("label column '" + label_column + "' not found");
    if (table.rows.empty()) throw SchemaError("file has a header but no data rows");
    const auto label_col = static_cast<std::size_t>(it - table.header.begin());

    std::vector<std::string> feature_names;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c != label_col) feature_names.push_back(table.header[c]);
    }
    std::vector<double> features;
    features.reserve(table.rows.size() * feature_names.size());
    std::vector<int> labels;
    labels.reserve(table.rows.size());
    std::vector<std::string> class_names;
    std::map<std::string, int> class_index;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_col) continue;
            double x;
            if (!parse_double(cells[c], x)) {
                throw ParseError(r + 2, c + 1,
                                 "'" + cells[c] + "' in column '" + table.header[c] +
                                     "' is not a finite number");
            }
            features.push_back(x);
        }
        const auto& label = cells[label_col];
        if (label.empty()) throw ParseError(r + 2, label_col + 1, "missing label");
        auto [pos, inserted] = class_index.emplace(label, static_cast<int>(class_names.size()));
        if (inserted) class_names.push_back(label);
        labels.push_back(pos->second);
    }
    return Dataset(std::move(features), std::move(labels), std::move(feature_names),
                   std::move(class_names));
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
    return dataset_from_table(read_csv_table(path), label_column);
}

void save_csv(const Dataset& d, const std::filesystem::path& path, const std::string& label_column) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    for (const auto& name : d.feature_names()) out << name << ',';
    out << label_column << '\n';
    for (std::size_t i = 0; i < d.n_samples(); ++i) {
        for (double x : d.row(i)) out << format_double(x) << ',';
        out << d.class_names()[static_cast<std::size_t>(d.label(i))] << '\n';
    }
}

std::vector<double> read_feature_matrix(const CsvTable& table,
                                        const std::vector<std::string>& feature_names) {
    std::vector<std::size_t> columns;
    for (const auto& name : feature_names) {
        const auto it = std::find(table.header.begin(), table.header.end(), name);
        if (it == table.header.end()) throw SchemaError("missing feature column '" + name + "'");
        columns.push_back(static_cast<std::size_t>(it - table.header.begin()));
    }
    std::vector<double> out;
    out.reserve(table.rows.size() * columns.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (auto c : columns) {
            double x;
            if (!parse_double(table.rows[r][c], x)) {
                throw ParseError(r + 2, c + 1,
                                 "'" + table.rows[r][c] + "' in column '" + table.header[c] +
                                     "' is not a finite number");
            }
            out.push_back(x);
        }
    }
    return out;
}

std::vector<std::size_t> SplitPlan::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_assignments.size(); ++i) {
        if (fold_assignments[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> SplitPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_assignments.size(); ++i) {
        if (fold_assignments[i] != fold) out.push_back(i);
    }
    return out;
}

SplitPlan make_folds(std::span<const int> labels, std::size_t n_classes, std::size_t n_folds,
                     std::uint64_t seed, bool stratified) {
    const std::size_t n = labels.size();
    if (n_folds < 2) throw ValidationError("fold count must be at least 2");
    if (n_folds > n) {
        throw ValidationError("fold count " + std::to_string(n_folds) + " exceeds sample count " +
                              std::to_string(n));
    }
    std::mt19937_64 rng(seed);
    SplitPlan plan;
    plan.fold_assignments.assign(n, 0);
    plan.n_folds = n_folds;
    plan.seed = seed;
    plan.stratified = stratified;

    if (!stratified) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        detail::shuffle(order, rng);
        for (std::size_t k = 0; k < n; ++k) plan.fold_assignments[order[k]] = k % n_folds;
        return plan;
    }

    // Deal each shuffled class round-robin, continuing where the previous
    // class stopped so that overall fold sizes also stay within one.
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    std::size_t next = 0;
    for (auto& members : by_class) {
        detail::shuffle(members, rng);
        for (auto i : members) {
            plan.fold_assignments[i] = next;
            next = (next + 1) % n_folds;
        }
    }
    return plan;
}

SplitPlan make_folds(const Dataset& d, std::size_t n_folds, std::uint64_t seed, bool stratified) {
    return make_folds(d.labels(), d.n_classes(), n_folds, seed, stratified);
}

TrainTestIndices stratified_split_indices(const Dataset& d, double test_fraction,
                                          std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ValidationError("test fraction must lie in (0, 1)");
    }
    std::vector<std::vector<std::size_t>> by_class(d.n_classes());
    for (std::size_t i = 0; i < d.n_samples(); ++i) {
        by_class[static_cast<std::size_t>(d.label(i))].push_back(i);
    }
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].size() < 2) {
            throw ValidationError("class '" + d.class_names()[c] +
                                  "' has fewer than 2 samples and cannot appear in both splits");
        }
    }

    // Largest-remainder allocation: the test set holds round(N * fraction)
    // samples, shared out by class; ties in the remainder go to the lower
    // class index. Every class keeps at least one sample on each side.
    const std::size_t n_classes = by_class.size();
    const auto total = static_cast<std::size_t>(std::llround(static_cast<double>(d.n_samples()) * test_fraction));
    std::vector<std::size_t> n_test(n_classes);
    std::vector<double> remainder(n_classes);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double exact = static_cast<double>(by_class[c].size()) * test_fraction;
        n_test[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - std::floor(exact);
        assigned += n_test[c];
    }
    std::vector<std::size_t> order(n_classes);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total && k < n_classes; ++k, ++assigned) ++n_test[order[k]];
    for (std::size_t c = 0; c < n_classes; ++c) n_test[c] = std::clamp<std::size_t>(n_test[c], 1, by_class[c].size() - 1);

    std::mt19937_64 rng(seed);
    TrainTestIndices out;
    for (std::size_t c = 0; c < n_classes; ++c) {
        auto& members = by_class[c];
        detail::shuffle(members, rng);
        const auto cut = static_cast<std::ptrdiff_t>(n_test[c]);
        out.test.insert(out.test.end(), members.begin(), members.begin() + cut);
        out.train.insert(out.train.end(), members.begin() + cut, members.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed) {
    auto idx = stratified_split_indices(d, test_fraction, seed);
    return {d.subset(idx.train), d.subset(idx.test)};
}

}  // namespace cbpt
