#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbpt/boosting.hpp"
#include "cbpt/dataset.hpp"

namespace cbpt {

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    /// One-vs-rest macro AUC over classes that have both positives and
    /// negatives; nullopt when no class qualifies.
    std::optional<double> auc_ovr;
    /// confusion[true][predicted]
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<PrecisionRecall> per_class;
    std::size_t n_samples = 0;
};

/// Metrics from labels, predictions and per-class scores (row-major
/// n x C; may be empty, in which case AUC is not computed).
EvalReport evaluate_predictions(std::span<const int> truth, std::span<const int> predicted,
                                std::span<const double> scores, std::size_t n_classes);

/// Binary AUC by the rank-sum statistic with average ranks for ties. nullopt
/// if either class is absent.
std::optional<double> binary_auc(std::span<const double> scores, std::span<const char> positive);

EvalReport evaluate(const EnsembleModel& m, const Dataset& test);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Population mean and standard deviation. Values are sorted before
/// summation so the result does not depend on their order.
MeanStd mean_std(std::vector<double> values);

struct CvReport {
    MeanStd accuracy;
    MeanStd macro_f1;
    MeanStd auc_ovr;
    std::vector<EvalReport> folds;
    std::vector<std::size_t> estimators_per_fold;
};

struct CvOptions {
    bool stratified = true;
    /// Forwarded to every per-fold training run.
    std::function<void(std::size_t fold, const IterationState&)> on_iteration;
};

/// Trains on each fold complement and evaluates on the fold.
CvReport cross_validate(const Dataset& d, const BoostConfig& cfg, std::size_t folds, std::uint64_t seed,
                        const CvOptions& opts = {});

struct CurvePoint {
    double x = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

/// Test error of the first-k-estimator prefix for k = 1..K_effective.
std::vector<CurvePoint> convergence_curve(const EnsembleModel& m, const Dataset& test);
std::vector<CurvePoint> convergence_curve(const Dataset& train, const Dataset& test, const BoostConfig& cfg);

struct LearningCurveOptions {
    double test_fraction = 0.25;
};

struct LearningCurve {
    std::vector<CurvePoint> points;
    /// Human-readable notes for (fraction, repeat) runs that were skipped.
    std::vector<std::string> warnings;
};

/// Holds out a stratified test portion once, then for each fraction trains
/// on a stratified subsample of the remaining data `repeats` times and
/// reports mean and std of test accuracy. Output is sorted by fraction.
LearningCurve learning_curve(const Dataset& d, const BoostConfig& cfg, std::vector<double> fractions,
                             std::size_t repeats, std::uint64_t seed, const LearningCurveOptions& opts = {});

}  // namespace cbpt
