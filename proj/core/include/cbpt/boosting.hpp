#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbpt/dataset.hpp"
#include "cbpt/tree.hpp"

namespace cbpt {

enum class Algorithm { cbpt, adaboost, adaboost_pt };

std::string_view to_string(Algorithm a);
/// Accepts "cbpt", "adaboost", "adaboost-pt" and "adaboost_pt".
Algorithm algorithm_from_string(std::string_view name);

/// How misclassified sample weights are scaled in a CBPT update.
enum class PenaltyUpdate {
    /// w * DP * IP * exp(2 theta), consistent with the normalizer Z.
    multiplicative,
    /// w * exp(2 theta * log(DP) * log(IP)).
    log_product,
};

/// Base learner override, used to isolate the boosting schedule in tests.
enum class BaseLearner {
    automatic,    // stump for adaboost, pruned tree otherwise
    stump,
    full_tree,
    pruned_tree,
};

struct BoostConfig {
    Algorithm algorithm = Algorithm::cbpt;
    std::size_t n_trees = 500;
    double learning_rate = 1.0;
    double psi_d = 0.5;
    double eta_d = 1.0;
    std::size_t resampling_folds = 5;
    Impurity impurity = Impurity::gini;
    std::uint64_t seed = 0;
    PenaltyUpdate penalty_update = PenaltyUpdate::multiplicative;
    BaseLearner base_learner = BaseLearner::automatic;
    /// Leaf cost used when pruning the base trees.
    CostKind prune_cost = CostKind::weight_share;
    /// Forces DP = IP = 1 (reduces CBPT to multiclass Adaboost).
    bool neutral_penalties = false;

    /// Throws ValidationError when a field is out of range.
    void validate() const;

    friend bool operator==(const BoostConfig&, const BoostConfig&) = default;
};

/// Depth, impurity and inverse-impurity vectors of one boosting round.
struct PenaltyVector {
    std::vector<double> dp;
    std::vector<double> ip;
    std::vector<double> oe;
};

/// Min-max scales landing depths into [eta_d, eta_d + psi_d]. All-equal
/// depths map to eta_d.
std::vector<double> depth_penalty(std::span<const double> depths, double psi_d, double eta_d);

/// (N - mu) / (2N) + impurity * (N - mu) / N for a sample whose landing
/// node holds `mu` of the N training samples.
double inverse_impurity(std::size_t mu, double impurity, std::size_t n);

/// Min-max scales `oe` into [min(dp), max(dp)]. All-equal `oe` maps to
/// min(dp).
std::vector<double> impurity_penalty(std::span<const double> oe, std::span<const double> dp);

/// learning_rate * 0.5 * (ln((1 - eps) / eps) + ln(C - 1)). A zero error is
/// clamped to 1e-10. Returns 0 at eps = (C - 1) / C and throws
/// WeakLearnerError above it; training stops at the boundary itself.
double estimator_weight(double epsilon, std::size_t n_classes, double learning_rate);

/// Multiplies misclassified weights by the penalty factor and renormalizes.
/// `w` must sum to 1 within 1e-9.
std::vector<double> update_sample_weights(std::span<const double> w, std::span<const char> misclassified,
                                          double theta, std::span<const double> dp,
                                          std::span<const double> ip,
                                          PenaltyUpdate mode = PenaltyUpdate::multiplicative);

struct Estimator {
    Tree tree;
    double theta;

    friend bool operator==(const Estimator&, const Estimator&) = default;
};

struct IterationRecord {
    std::size_t iteration = 0;  // 1-based
    double epsilon = 0.0;
    double theta = 0.0;
    std::size_t n_leaves = 0;
    double train_error = 0.0;               // ensemble of the first `iteration` estimators
    std::optional<double> test_error;

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

class EnsembleModel {
public:
    EnsembleModel(std::vector<Estimator> estimators, std::vector<std::string> class_names,
                  std::vector<std::string> feature_names, BoostConfig config,
                  std::vector<IterationRecord> log);

    const std::vector<Estimator>& estimators() const noexcept { return estimators_; }
    std::size_t size() const noexcept { return estimators_.size(); }
    std::size_t n_classes() const noexcept { return class_names_.size(); }
    std::size_t n_features() const noexcept { return feature_names_.size(); }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const BoostConfig& config() const noexcept { return config_; }
    const std::vector<IterationRecord>& training_log() const noexcept { return log_; }

    /// Per-class sums of theta over estimators voting for that class.
    std::vector<double> scores(std::span<const double> x) const;
    /// scores / sum(scores); uniform when every theta is zero.
    std::vector<double> vote_shares(std::span<const double> x) const;
    int predict(std::span<const double> x) const;
    /// Element k is the prediction of the first k + 1 estimators.
    std::vector<int> staged_predict(std::span<const double> x) const;
    /// Theta-weighted split gains per feature, normalized to sum 1.
    std::vector<double> feature_importance() const;

    friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;

private:
    void check_input(std::span<const double> x) const;

    std::vector<Estimator> estimators_;
    std::vector<std::string> class_names_;
    std::vector<std::string> feature_names_;
    BoostConfig config_;
    std::vector<IterationRecord> log_;
};

/// Snapshot handed to the training observer after each accepted round.
struct IterationState {
    std::size_t iteration;
    const Tree& tree;
    double epsilon;
    double theta;
    std::span<const double> weights_before;
    std::span<const double> weights_after;
    /// Null for the Adaboost variants.
    const PenaltyVector* penalties;
};

struct TrainOptions {
    std::function<void(const IterationState&)> on_iteration;
    /// When set, each log record also carries the ensemble error on this set.
    const Dataset* test = nullptr;
};

EnsembleModel train_cbpt(const Dataset& d, const BoostConfig& cfg, const TrainOptions& opts = {});
EnsembleModel train_discrete_adaboost(const Dataset& d, const BoostConfig& cfg,
                                      const TrainOptions& opts = {});
/// Dispatches on cfg.algorithm.
EnsembleModel train_model(const Dataset& d, const BoostConfig& cfg, const TrainOptions& opts = {});

}  // namespace cbpt
