#include "cbpt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "cbpt/error.hpp"
#include "cbpt/parallel.hpp"
#include "random.hpp"

namespace cbpt {

std::optional<double> binary_auc(std::span<const double> scores, std::span<const char> positive) {
    if (scores.size() != positive.size()) throw ValidationError("score and label lengths differ");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t k = 0; k < n;) {
        std::size_t end = k;
        while (end < n && scores[order[end]] == scores[order[k]]) ++end;
        // ranks k+1 .. end share their average
        const double avg_rank = 0.5 * static_cast<double>(k + 1 + end);
        for (std::size_t t = k; t < end; ++t) {
            if (positive[order[t]]) {
                rank_sum += avg_rank;
                ++n_pos;
            }
        }
        k = end;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

EvalReport evaluate_predictions(std::span<const int> truth, std::span<const int> predicted,
                                std::span<const double> scores, std::size_t n_classes) {
    const std::size_t n = truth.size();
    if (predicted.size() != n) throw ValidationError("prediction count differs from label count");
    if (!scores.empty() && scores.size() != n * n_classes) throw ValidationError("score matrix has the wrong size");
    EvalReport r;
    r.n_samples = n;
    r.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = static_cast<std::size_t>(truth[i]);
        const auto p = static_cast<std::size_t>(predicted[i]);
        if (t >= n_classes || p >= n_classes) throw ValidationError("class index out of range");
        ++r.confusion[t][p];
    }
    std::size_t correct = 0;
    for (std::size_t c = 0; c < n_classes; ++c) correct += r.confusion[c][c];
    r.accuracy = n > 0 ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;

    r.per_class.resize(n_classes);
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::size_t row = 0, col = 0;
        for (std::size_t k = 0; k < n_classes; ++k) {
            row += r.confusion[c][k];
            col += r.confusion[k][c];
        }
        const double tp = static_cast<double>(r.confusion[c][c]);
        auto& pr = r.per_class[c];
        pr.precision = col > 0 ? tp / static_cast<double>(col) : 0.0;
        pr.recall = row > 0 ? tp / static_cast<double>(row) : 0.0;
        pr.f1 = pr.precision + pr.recall > 0.0 ? 2.0 * pr.precision * pr.recall / (pr.precision + pr.recall) : 0.0;
        f1_sum += pr.f1;
    }
    r.macro_f1 = f1_sum / static_cast<double>(n_classes);

    if (!scores.empty()) {
        std::vector<double> col(n);
        std::vector<char> pos(n);
        double auc_sum = 0.0;
        std::size_t counted = 0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                col[i] = scores[i * n_classes + c];
                pos[i] = static_cast<std::size_t>(truth[i]) == c ? 1 : 0;
            }
            if (auto auc = binary_auc(col, pos)) {
                auc_sum += *auc;
                ++counted;
            }
            // binary problems: the second class's curve mirrors the first
            if (n_classes == 2) break;
        }
        if (counted > 0) r.auc_ovr = auc_sum / static_cast<double>(counted);
    }
    return r;
}

EvalReport evaluate(const EnsembleModel& m, const Dataset& test) {
    if (test.n_classes() != m.n_classes()) {
        throw ValidationError("test set has " + std::to_string(test.n_classes()) + " classes, model has " +
                              std::to_string(m.n_classes()));
    }
    if (test.n_features() != m.n_features()) throw ValidationError("feature count mismatch");
    const std::size_t n = test.n_samples(), c = m.n_classes();
    std::vector<int> predicted(n);
    std::vector<double> scores(n * c);
    for (std::size_t i = 0; i < n; ++i) {
        const auto shares = m.vote_shares(test.row(i));
        std::copy(shares.begin(), shares.end(), scores.begin() + static_cast<std::ptrdiff_t>(i * c));
        predicted[i] = argmax_class(shares);
    }
    return evaluate_predictions(test.labels(), predicted, scores, c);
}

MeanStd mean_std(std::vector<double> values) {
    if (values.empty()) return {};
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / n)};
}

CvReport cross_validate(const Dataset& d, const BoostConfig& cfg, std::size_t folds, std::uint64_t seed,
                        const CvOptions& opts) {
    if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
    const SplitPlan plan = make_folds(d, folds, seed, opts.stratified);
    CvReport report;
    report.folds.resize(folds);
    report.estimators_per_fold.resize(folds);
    parallel_for(folds, [&](std::size_t f) {
        const auto train_idx = plan.train_indices(f);
        const auto test_idx = plan.test_indices(f);
        try {
            const Dataset train = d.subset(train_idx);
            const Dataset test = d.subset(test_idx);
            TrainOptions topts;
            if (opts.on_iteration) {
                topts.on_iteration = [&opts, f](const IterationState& s) { opts.on_iteration(f, s); };
            }
            const auto model = train_model(train, cfg, topts);
            report.folds[f] = evaluate(model, test);
            report.estimators_per_fold[f] = model.size();
        } catch (const Error& e) {
            throw TrainingError("fold " + std::to_string(f + 1) + " of " + std::to_string(folds) +
                                " failed: " + e.what());
        }
    });
    std::vector<double> acc, f1, auc;
    for (const auto& r : report.folds) {
        acc.push_back(r.accuracy);
        f1.push_back(r.macro_f1);
        if (r.auc_ovr) auc.push_back(*r.auc_ovr);
    }
    report.accuracy = mean_std(acc);
    report.macro_f1 = mean_std(f1);
    report.auc_ovr = mean_std(auc);
    return report;
}

std::vector<CurvePoint> convergence_curve(const EnsembleModel& m, const Dataset& test) {
    if (test.n_features() != m.n_features() || test.n_classes() != m.n_classes()) {
        throw ValidationError("test set shape does not match the model");
    }
    std::vector<std::size_t> wrong(m.size(), 0);
    for (std::size_t i = 0; i < test.n_samples(); ++i) {
        const auto staged = m.staged_predict(test.row(i));
        for (std::size_t k = 0; k < staged.size(); ++k) {
            if (staged[k] != test.label(i)) ++wrong[k];
        }
    }
    std::vector<CurvePoint> curve;
    curve.reserve(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) {
        curve.push_back({static_cast<double>(k + 1),
                         static_cast<double>(wrong[k]) / static_cast<double>(test.n_samples()), 0.0});
    }
    return curve;
}

std::vector<CurvePoint> convergence_curve(const Dataset& train, const Dataset& test, const BoostConfig& cfg) {
    return convergence_curve(train_model(train, cfg), test);
}

namespace {

/// Per-class shuffled subsample holding round(n_c * fraction) of each class.
std::vector<std::size_t> stratified_subsample(const Dataset& d, double fraction, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> by_class(d.n_classes());
    for (std::size_t i = 0; i < d.n_samples(); ++i) by_class[static_cast<std::size_t>(d.label(i))].push_back(i);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        detail::shuffle(members, rng);
        const auto take = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * fraction));
        if (take == 0) {
            throw ValidationError("class '" + d.class_names()[c] + "' has no samples at fraction " +
                                  std::to_string(fraction));
        }
        out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(std::min(take, members.size())));
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

LearningCurve learning_curve(const Dataset& d, const BoostConfig& cfg, std::vector<double> fractions,
                             std::size_t repeats, std::uint64_t seed, const LearningCurveOptions& opts) {
    if (repeats < 1) throw ValidationError("repeats must be at least 1");
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw ValidationError("learning-curve fractions must lie in (0, 1]");
    }
    std::sort(fractions.begin(), fractions.end());
    const auto [pool, test] = stratified_split(d, opts.test_fraction, seed);

    LearningCurve out;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        const double f = fractions[fi];
        std::vector<double> acc(repeats, std::nan(""));
        std::vector<std::string> notes(repeats);
        parallel_for(repeats, [&](std::size_t r) {
            const std::uint64_t sub_seed = seed + 1 + fi * 1000003ULL + r;
            try {
                const Dataset train = f >= 1.0 ? pool : pool.subset(stratified_subsample(pool, f, sub_seed));
                BoostConfig run_cfg = cfg;
                run_cfg.seed = cfg.seed + r;
                acc[r] = evaluate(train_model(train, run_cfg), test).accuracy;
            } catch (const ValidationError& e) {
                notes[r] = "fraction " + std::to_string(f) + " repeat " + std::to_string(r + 1) +
                           " skipped: " + e.what();
            }
        });
        std::vector<double> kept;
        for (std::size_t r = 0; r < repeats; ++r) {
            if (notes[r].empty()) {
                kept.push_back(acc[r]);
            } else {
                out.warnings.push_back(notes[r]);
            }
        }
        if (kept.empty()) continue;
        const auto ms = mean_std(kept);
        out.points.push_back({f, ms.mean, ms.std});
    }
    return out;
}

}  // namespace cbpt
