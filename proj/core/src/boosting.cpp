#include "cbpt/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbpt/error.hpp"
#include "cbpt/pruning.hpp"

namespace cbpt {

std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::cbpt: return "cbpt";
        case Algorithm::adaboost: return "adaboost";
        case Algorithm::adaboost_pt: return "adaboost-pt";
    }
    return "cbpt";
}

Algorithm algorithm_from_string(std::string_view name) {
    if (name == "cbpt") return Algorithm::cbpt;
    if (name == "adaboost") return Algorithm::adaboost;
    if (name == "adaboost-pt" || name == "adaboost_pt") return Algorithm::adaboost_pt;
    throw ValidationError("unknown algorithm '" + std::string(name) + "'");
}

void BoostConfig::validate() const {
    if (n_trees < 1) throw ValidationError("tree count must be at least 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ValidationError("learning rate must lie in (0, 1]");
    if (!(psi_d > 0.0) || !std::isfinite(psi_d)) throw ValidationError("psi_d must be a positive number");
    if (!(eta_d >= 1.0) || !std::isfinite(eta_d)) throw ValidationError("eta_d must be at least 1");
    if (resampling_folds < 2) throw ValidationError("resampling folds must be at least 2");
}

std::vector<double> depth_penalty(std::span<const double> depths, double psi_d, double eta_d) {
    std::vector<double> dp(depths.size(), eta_d);
    if (depths.empty()) return dp;
    const auto [lo, hi] = std::minmax_element(depths.begin(), depths.end());
    const double span = *hi - *lo;
    if (!(span > 0.0)) return dp;
    for (std::size_t i = 0; i < depths.size(); ++i) {
        dp[i] = psi_d * (depths[i] - *lo) / span + eta_d;
    }
    return dp;
}

double inverse_impurity(std::size_t mu, double impurity, std::size_t n) {
    if (n == 0 || mu > n) {
        throw ValidationError("landing node count " + std::to_string(mu) + " exceeds sample count " +
                              std::to_string(n));
    }
    if (!(impurity >= 0.0)) throw ValidationError("impurity must be non-negative");
    const double N = static_cast<double>(n);
    const double rest = N - static_cast<double>(mu);
    return rest / (2.0 * N) + impurity * rest / N;
}

std::vector<double> impurity_penalty(std::span<const double> oe, std::span<const double> dp) {
    if (oe.size() != dp.size()) throw ValidationError("penalty vectors differ in length");
    if (dp.empty()) return {};
    const auto [dlo, dhi] = std::minmax_element(dp.begin(), dp.end());
    const auto [olo, ohi] = std::minmax_element(oe.begin(), oe.end());
    std::vector<double> ip(oe.size(), *dlo);
    const double ospan = *ohi - *olo;
    if (!(ospan > 0.0)) return ip;
    const double dspan = *dhi - *dlo;
    for (std::size_t i = 0; i < oe.size(); ++i) {
        ip[i] = dspan * (oe[i] - *olo) / ospan + *dlo;
    }
    return ip;
}

double estimator_weight(double epsilon, std::size_t n_classes, double learning_rate) {
    if (n_classes < 2) throw ValidationError("need at least 2 classes");
    if (!(epsilon >= 0.0)) throw ValidationError("training error must be non-negative");
    const double C = static_cast<double>(n_classes);
    // exactly at chance the weight is zero; only worse than chance is an error
    if (epsilon > (C - 1.0) / C) {
        throw WeakLearnerError("estimator error " + std::to_string(epsilon) +
                               " is no better than chance for " + std::to_string(n_classes) + " classes");
    }
    const double eps = std::max(epsilon, 1e-10);
    return learning_rate * 0.5 * (std::log((1.0 - eps) / eps) + std::log(C - 1.0));
}

std::vector<double> update_sample_weights(std::span<const double> w, std::span<const char> misclassified,
                                          double theta, std::span<const double> dp,
                                          std::span<const double> ip, PenaltyUpdate mode) {
    const std::size_t n = w.size();
    if (misclassified.size() != n || dp.size() != n || ip.size() != n) {
        throw ValidationError("weight update inputs differ in length");
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("sample weights must sum to 1 before an update (sum = " + std::to_string(total) + ")");
    }
    std::vector<double> out(w.begin(), w.end());
    const double boost = std::exp(2.0 * theta);
    for (std::size_t i = 0; i < n; ++i) {
        if (!misclassified[i]) continue;
        if (mode == PenaltyUpdate::multiplicative) {
            out[i] *= dp[i] * ip[i] * boost;
        } else {
            out[i] *= std::exp(2.0 * theta * std::log(dp[i]) * std::log(ip[i]));
        }
    }
    const double z = std::accumulate(out.begin(), out.end(), 0.0);
    for (auto& x : out) x /= z;
    return out;
}

EnsembleModel::EnsembleModel(std::vector<Estimator> estimators, std::vector<std::string> class_names,
                             std::vector<std::string> feature_names, BoostConfig config,
                             std::vector<IterationRecord> log)
    : estimators_(std::move(estimators)),
      class_names_(std::move(class_names)),
      feature_names_(std::move(feature_names)),
      config_(config),
      log_(std::move(log)) {
    if (estimators_.empty()) throw ValidationError("ensemble has no estimators");
    for (const auto& e : estimators_) {
        if (!std::isfinite(e.theta)) throw ValidationError("estimator weight is not finite");
        if (e.tree.n_classes() != class_names_.size() || e.tree.n_features() != feature_names_.size()) {
            throw ValidationError("estimator shape does not match the model");
        }
    }
}

void EnsembleModel::check_input(std::span<const double> x) const {
    if (x.size() != n_features()) {
        throw ValidationError("input has " + std::to_string(x.size()) + " features, model expects " +
                              std::to_string(n_features()));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw ValidationError("input contains a non-finite value");
    }
}

std::vector<double> EnsembleModel::scores(std::span<const double> x) const {
    check_input(x);
    std::vector<double> s(n_classes(), 0.0);
    for (const auto& e : estimators_) {
        const auto& leaf = e.tree.node(e.tree.leaf_index(x));
        s[static_cast<std::size_t>(argmax_class(leaf.class_weights))] += e.theta;
    }
    return s;
}

std::vector<double> EnsembleModel::vote_shares(std::span<const double> x) const {
    auto s = scores(x);
    const double total = std::accumulate(s.begin(), s.end(), 0.0);
    for (auto& v : s) v = total > 0.0 ? v / total : 1.0 / static_cast<double>(s.size());
    return s;
}

int EnsembleModel::predict(std::span<const double> x) const { return argmax_class(scores(x)); }

std::vector<int> EnsembleModel::staged_predict(std::span<const double> x) const {
    check_input(x);
    std::vector<double> s(n_classes(), 0.0);
    std::vector<int> out;
    out.reserve(estimators_.size());
    for (const auto& e : estimators_) {
        const auto& leaf = e.tree.node(e.tree.leaf_index(x));
        s[static_cast<std::size_t>(argmax_class(leaf.class_weights))] += e.theta;
        out.push_back(argmax_class(s));
    }
    return out;
}

std::vector<double> EnsembleModel::feature_importance() const {
    std::vector<double> imp(n_features(), 0.0);
    for (const auto& e : estimators_) {
        for (const auto& n : e.tree.nodes()) {
            if (!n.is_leaf) imp[n.feature] += e.theta * n.gain;
        }
    }
    const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    for (auto& v : imp) v = total > 0.0 ? v / total : 1.0 / static_cast<double>(imp.size());
    return imp;
}

namespace {

/// Running ensemble votes over a dataset, for the per-iteration error log.
class StagedVotes {
public:
    explicit StagedVotes(const Dataset& d) : d_(d), scores_(d.n_samples() * d.n_classes(), 0.0) {}

    double add(const Tree& t, double theta) {
        const std::size_t c = d_.n_classes();
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < d_.n_samples(); ++i) {
            const auto& leaf = t.node(t.leaf_index(d_.row(i)));
            double* s = scores_.data() + i * c;
            s[argmax_class(leaf.class_weights)] += theta;
            if (argmax_class(std::span<const double>(s, c)) != d_.label(i)) ++wrong;
        }
        return static_cast<double>(wrong) / static_cast<double>(d_.n_samples());
    }

private:
    const Dataset& d_;
    std::vector<double> scores_;
};

Tree fit_base(const Dataset& d, std::span<const double> w, const BoostConfig& cfg, std::size_t iteration) {
    BaseLearner kind = cfg.base_learner;
    if (kind == BaseLearner::automatic) {
        kind = cfg.algorithm == Algorithm::adaboost ? BaseLearner::stump : BaseLearner::pruned_tree;
    }
    switch (kind) {
        case BaseLearner::stump: return grow_full_tree(d, w, GrowOptions{cfg.impurity, 1});
        case BaseLearner::full_tree: return grow_full_tree(d, w, GrowOptions{cfg.impurity});
        default:
            // tiny training sets get leave-one-out instead of an error
            return best_pruned_tree(d, w, std::min(cfg.resampling_folds, d.n_samples()),
                                    cfg.seed ^ static_cast<std::uint64_t>(iteration),
                                    cfg.impurity, nullptr, cfg.prune_cost);
    }
}

enum class Scheme { cost_sensitive, discrete };

EnsembleModel run_boosting(const Dataset& d, const BoostConfig& cfg, const TrainOptions& opts, Scheme scheme) {
    cfg.validate();
    if (opts.test && (opts.test->n_features() != d.n_features() || opts.test->n_classes() != d.n_classes())) {
        throw ValidationError("test set shape does not match the training set");
    }
    const std::size_t n = d.n_samples();
    const std::size_t n_classes = d.n_classes();
    const double chance = static_cast<double>(n_classes - 1) / static_cast<double>(n_classes);

    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<Estimator> estimators;
    std::vector<IterationRecord> log;
    StagedVotes train_votes(d);
    std::optional<StagedVotes> test_votes;
    if (opts.test) test_votes.emplace(*opts.test);

    std::vector<char> miss(n);
    std::vector<double> depths(n);
    PenaltyVector pen;
    pen.oe.resize(n);

    for (std::size_t k = 1; k <= cfg.n_trees; ++k) {
        Tree tree = fit_base(d, w, cfg, k);

        double eps = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& leaf = tree.node(tree.leaf_index(d.row(i)));
            miss[i] = argmax_class(leaf.class_weights) != d.label(i) ? 1 : 0;
            if (miss[i]) eps += w[i];
            depths[i] = static_cast<double>(leaf.depth);
            pen.oe[i] = inverse_impurity(leaf.sample_count, leaf.impurity, n);
        }
        eps = std::clamp(eps, 0.0, 1.0);

        // a sum of equal weights can land a hair under the boundary
        if (eps >= chance - 1e-12) {
            if (k == 1) {
                throw TrainingError("first estimator has error " + std::to_string(eps) +
                                    ", no better than chance");
            }
            break;
        }

        double theta;
        std::vector<double> next;
        if (scheme == Scheme::cost_sensitive) {
            theta = estimator_weight(eps, n_classes, cfg.learning_rate);
            if (cfg.neutral_penalties) {
                pen.dp.assign(n, 1.0);
                pen.ip.assign(n, 1.0);
            } else {
                pen.dp = depth_penalty(depths, cfg.psi_d, cfg.eta_d);
                pen.ip = impurity_penalty(pen.oe, pen.dp);
            }
            next = update_sample_weights(w, miss, theta, pen.dp, pen.ip, cfg.penalty_update);
        } else {
            // ln(beta) with beta = (1 - eps)(C - 1) / eps, shrunk by the learning rate
            theta = 2.0 * estimator_weight(eps, n_classes, cfg.learning_rate);
            const double factor = std::exp(theta);
            next.assign(w.begin(), w.end());
            for (std::size_t i = 0; i < n; ++i) {
                if (miss[i]) next[i] *= factor;
            }
            const double z = std::accumulate(next.begin(), next.end(), 0.0);
            for (auto& x : next) x /= z;
        }

        if (opts.on_iteration) {
            opts.on_iteration(IterationState{k, tree, eps, theta, w, next,
                                             scheme == Scheme::cost_sensitive ? &pen : nullptr});
        }

        IterationRecord rec;
        rec.iteration = k;
        rec.epsilon = eps;
        rec.theta = theta;
        rec.n_leaves = tree.n_leaves();
        rec.train_error = train_votes.add(tree, theta);
        if (test_votes) rec.test_error = test_votes->add(tree, theta);
        log.push_back(rec);
        estimators.push_back({std::move(tree), theta});
        w = std::move(next);

        if (eps == 0.0) break;
    }
    return EnsembleModel(std::move(estimators), d.class_names(), d.feature_names(), cfg, std::move(log));
}

}  // namespace

EnsembleModel train_cbpt(const Dataset& d, const BoostConfig& cfg, const TrainOptions& opts) {
    if (cfg.algorithm != Algorithm::cbpt) throw ValidationError("train_cbpt requires algorithm = cbpt");
    return run_boosting(d, cfg, opts, Scheme::cost_sensitive);
}

EnsembleModel train_discrete_adaboost(const Dataset& d, const BoostConfig& cfg, const TrainOptions& opts) {
    if (cfg.algorithm == Algorithm::cbpt) {
        throw ValidationError("train_discrete_adaboost requires algorithm = adaboost or adaboost-pt");
    }
    return run_boosting(d, cfg, opts, Scheme::discrete);
}

EnsembleModel train_model(const Dataset& d, const BoostConfig& cfg, const TrainOptions& opts) {
    return cfg.algorithm == Algorithm::cbpt ? train_cbpt(d, cfg, opts) : train_discrete_adaboost(d, cfg, opts);
}

}  // namespace cbpt
