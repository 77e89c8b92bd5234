#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cbpt/boosting.hpp"
#include "cbpt/dataset.hpp"
#include "cbpt/error.hpp"
#include "cbpt/metrics.hpp"
#include "cbpt/model_io.hpp"
#include "cbpt/parallel.hpp"

namespace cbpt::cli {

namespace {

namespace fs = std::filesystem;

/// Failure inside a named stage (load, validate, train, ...).
struct StageFailure : std::runtime_error {
    StageFailure(const std::string& stage, const std::string& what)
        : std::runtime_error(stage + ": " + what) {}
};

struct UsageFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw StageFailure(stage, e.what());
    }
}

std::string num(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_text(const std::string& path, const std::string& text) {
    in_stage("write", [&] { write_file_atomic(path, text); });
}

// Flags shared by every command that trains models.
struct ConfigFlags {
    std::string algorithm = "cbpt";
    std::size_t trees = 500;
    double learning_rate = 1.0;
    double psi_d = 0.5;
    double eta_d = 1.0;
    std::size_t resampling_folds = 5;
    std::string impurity = "gini";
    std::uint64_t seed = 0;
    bool log_product_update = false;
    std::string prune_cost = "weight-share";

    void add_to(CLI::App& app, bool with_algorithm = true) {
        if (with_algorithm) {
            app.add_option("--algorithm", algorithm, "Training algorithm")
                ->check(CLI::IsMember({"cbpt", "adaboost", "adaboost-pt"}))
                ->capture_default_str();
        }
        app.add_option("--trees", trees, "Maximum number of boosting rounds K")->capture_default_str();
        app.add_option("--learning-rate", learning_rate, "Shrinkage applied to every theta")->capture_default_str();
        app.add_option("--psi-d", psi_d, "Depth penalty span")->capture_default_str();
        app.add_option("--eta-d", eta_d, "Depth penalty lower limit")->capture_default_str();
        app.add_option("--resampling-folds", resampling_folds, "Folds used to pick the pruning alpha")
            ->capture_default_str();
        app.add_option("--impurity", impurity, "Node impurity fed to the penalty terms")
            ->check(CLI::IsMember({"gini", "entropy"}))
            ->capture_default_str();
        app.add_option("--seed", seed, "Random seed")->capture_default_str();
        app.add_flag("--log-product-update", log_product_update,
                     "Use w * exp(2 theta log(DP) log(IP)) for misclassified samples");
        app.add_option("--prune-cost", prune_cost, "Leaf cost used while pruning")
            ->check(CLI::IsMember({"weight-share", "leaf-sum"}))
            ->capture_default_str();
    }

    BoostConfig config() const {
        BoostConfig c;
        c.algorithm = algorithm_from_string(algorithm);
        c.n_trees = trees;
        c.learning_rate = learning_rate;
        c.psi_d = psi_d;
        c.eta_d = eta_d;
        c.resampling_folds = resampling_folds;
        c.impurity = impurity_from_string(impurity);
        c.seed = seed;
        c.penalty_update = log_product_update ? PenaltyUpdate::log_product : PenaltyUpdate::multiplicative;
        c.prune_cost = cost_kind_from_string(prune_cost);
        try {
            c.validate();
        } catch (const ValidationError& e) {
            throw UsageFailure(e.what());
        }
        return c;
    }
};

/// Features bound by name to `feature_names` and, when `label_column` is
/// set, labels mapped onto `class_names`. Classes may be missing.
struct AlignedTable {
    std::vector<double> features;
    std::vector<int> labels;
    std::size_t n_rows = 0;
};

AlignedTable load_aligned(const std::string& path, const std::vector<std::string>& feature_names,
                          const std::vector<std::string>& class_names, const std::string& label_column) {
    const CsvTable table = in_stage("load", [&] { return read_csv_table(path); });
    AlignedTable out;
    out.n_rows = table.rows.size();
    out.features = in_stage("validate", [&] { return read_feature_matrix(table, feature_names); });
    if (label_column.empty()) return out;
    const auto it = std::find(table.header.begin(), table.header.end(), label_column);
    if (it == table.header.end()) {
        throw StageFailure("validate", "missing label column '" + label_column + "' in " + path);
    }
    const auto col = static_cast<std::size_t>(it - table.header.begin());
    out.labels.reserve(out.n_rows);
    for (std::size_t r = 0; r < out.n_rows; ++r) {
        const auto& cell = table.rows[r][col];
        const auto c = std::find(class_names.begin(), class_names.end(), cell);
        if (c == class_names.end()) {
            throw StageFailure("validate", "row " + std::to_string(r + 2) + ": class '" + cell +
                                               "' was not seen during training");
        }
        out.labels.push_back(static_cast<int>(c - class_names.begin()));
    }
    return out;
}

Dataset to_dataset(AlignedTable t, const std::vector<std::string>& feature_names,
                   const std::vector<std::string>& class_names) {
    return in_stage("validate", [&] {
        return Dataset(std::move(t.features), std::move(t.labels), feature_names, class_names);
    });
}

std::string metrics_csv(const std::vector<std::pair<std::string, MeanStd>>& rows) {
    std::ostringstream s;
    s << "metric,mean,std\n";
    for (const auto& [name, v] : rows) s << name << ',' << num(v.mean) << ',' << num(v.std) << '\n';
    return s.str();
}

std::string confusion_csv(const std::vector<std::vector<std::size_t>>& confusion,
                          const std::vector<std::string>& class_names) {
    std::ostringstream s;
    for (std::size_t c = 0; c < class_names.size(); ++c) s << (c ? "," : "") << class_names[c];
    s << '\n';
    for (const auto& row : confusion) {
        for (std::size_t c = 0; c < row.size(); ++c) s << (c ? "," : "") << row[c];
        s << '\n';
    }
    return s.str();
}

std::string training_log_csv(const EnsembleModel& m, bool with_test) {
    std::ostringstream s;
    s << "iteration,epsilon,theta,n_leaves,train_error" << (with_test ? ",test_error" : "") << '\n';
    for (const auto& r : m.training_log()) {
        s << r.iteration << ',' << num(r.epsilon) << ',' << num(r.theta) << ',' << r.n_leaves << ','
          << num(r.train_error);
        if (with_test) s << ',' << (r.test_error ? num(*r.test_error) : std::string());
        s << '\n';
    }
    return s.str();
}

std::string curve_csv(const char* header, const std::vector<CurvePoint>& points, bool with_std) {
    std::ostringstream s;
    s << header << '\n';
    for (const auto& p : points) {
        s << num(p.x) << ',' << num(p.mean);
        if (with_std) s << ',' << num(p.std);
        s << '\n';
    }
    return s.str();
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data, label, out, log, test;
    bool verbose = false;
    ConfigFlags cfg;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    const BoostConfig cfg = a.cfg.config();
    const Dataset d = in_stage("load", [&] { return load_csv(a.data, a.label); });
    std::optional<Dataset> test;
    if (!a.test.empty()) {
        test = to_dataset(load_aligned(a.test, d.feature_names(), d.class_names(), a.label), d.feature_names(),
                          d.class_names());
    }
    TrainOptions opts;
    opts.test = test ? &*test : nullptr;
    if (a.verbose) {
        opts.on_iteration = [&err](const IterationState& s) {
            err << "iteration " << s.iteration << " eps " << num(s.epsilon) << " theta " << num(s.theta)
                << " leaves " << s.tree.n_leaves() << '\n';
        };
    }
    const EnsembleModel m = in_stage("train", [&] { return train_model(d, cfg, opts); });
    const std::string text = in_stage("serialize", [&] { return serialize_model(m); });
    write_text(a.out, text);
    write_text(a.log.empty() ? a.out + ".log.csv" : a.log, training_log_csv(m, test.has_value()));
    const auto& last = m.training_log().back();
    out << "trained " << m.size() << " estimators, training error " << num(last.train_error) << '\n';
    return kOk;
}

struct PredictArgs {
    std::string model, data, out;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
    const EnsembleModel m = in_stage("load", [&] { return load_model(a.model); });
    const AlignedTable t = load_aligned(a.data, m.feature_names(), m.class_names(), "");
    std::ostringstream s;
    s << "predicted";
    for (const auto& c : m.class_names()) s << ",share_" << c;
    s << '\n';
    const std::size_t v = m.n_features();
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        const std::span<const double> x(t.features.data() + r * v, v);
        const auto shares = m.vote_shares(x);
        s << m.class_names()[static_cast<std::size_t>(argmax_class(shares))];
        for (double p : shares) s << ',' << num(p);
        s << '\n';
    }
    write_text(a.out, s.str());
    out << "predicted " << t.n_rows << " rows\n";
    return kOk;
}

struct EvaluateArgs {
    std::string model, data, label, out, confusion;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const EnsembleModel m = in_stage("load", [&] { return load_model(a.model); });
    const AlignedTable t = load_aligned(a.data, m.feature_names(), m.class_names(), a.label);
    if (t.n_rows == 0) throw StageFailure("validate", "no rows in " + a.data);
    const std::size_t v = m.n_features(), c = m.n_classes();
    std::vector<int> predicted(t.n_rows);
    std::vector<double> scores(t.n_rows * c);
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        const std::span<const double> x(t.features.data() + r * v, v);
        const auto shares = m.vote_shares(x);
        std::copy(shares.begin(), shares.end(), scores.begin() + static_cast<std::ptrdiff_t>(r * c));
        predicted[r] = argmax_class(shares);
    }
    const EvalReport rep = evaluate_predictions(t.labels, predicted, scores, c);
    std::vector<std::pair<std::string, MeanStd>> rows{{"accuracy", {rep.accuracy, 0.0}},
                                                      {"macro_f1", {rep.macro_f1, 0.0}}};
    if (rep.auc_ovr) rows.push_back({"auc_ovr", {*rep.auc_ovr, 0.0}});
    write_text(a.out, metrics_csv(rows));
    if (!a.confusion.empty()) write_text(a.confusion, confusion_csv(rep.confusion, m.class_names()));
    out << "accuracy " << num(rep.accuracy) << ", macro F1 " << num(rep.macro_f1) << '\n';
    return kOk;
}

struct CvArgs {
    std::string data, label, out, confusion;
    std::size_t folds = 5;
    bool unstratified = false;
    ConfigFlags cfg;
};

int cmd_cv(const CvArgs& a, std::ostream& out) {
    const BoostConfig cfg = a.cfg.config();
    const Dataset d = in_stage("load", [&] { return load_csv(a.data, a.label); });
    CvOptions opts;
    opts.stratified = !a.unstratified;
    const CvReport rep = in_stage("train", [&] { return cross_validate(d, cfg, a.folds, cfg.seed, opts); });
    write_text(a.out, metrics_csv({{"accuracy", rep.accuracy}, {"macro_f1", rep.macro_f1}, {"auc_ovr", rep.auc_ovr}}));
    if (!a.confusion.empty()) {
        std::vector<std::vector<std::size_t>> total(d.n_classes(), std::vector<std::size_t>(d.n_classes(), 0));
        for (const auto& f : rep.folds) {
            for (std::size_t i = 0; i < total.size(); ++i) {
                for (std::size_t j = 0; j < total.size(); ++j) total[i][j] += f.confusion[i][j];
            }
        }
        write_text(a.confusion, confusion_csv(total, d.class_names()));
    }
    out << "accuracy " << num(rep.accuracy.mean) << " +- " << num(rep.accuracy.std) << ", macro F1 "
        << num(rep.macro_f1.mean) << " +- " << num(rep.macro_f1.std) << '\n';
    return kOk;
}

struct CurvesArgs {
    std::string data, label, out;
    bool convergence = false;
    bool learning = false;
    std::vector<double> fractions{0.1, 0.325, 0.55, 0.775, 1.0};
    std::size_t repeats = 3;
    double test_fraction = 0.25;
    ConfigFlags cfg;
};

int cmd_curves(const CurvesArgs& a, std::ostream& out, std::ostream& err) {
    if (a.convergence == a.learning) throw UsageFailure("choose exactly one of --convergence and --learning");
    const BoostConfig cfg = a.cfg.config();
    const Dataset d = in_stage("load", [&] { return load_csv(a.data, a.label); });
    if (a.convergence) {
        const auto [train, test] = in_stage("validate", [&] { return stratified_split(d, a.test_fraction, cfg.seed); });
        const auto points = in_stage("train", [&] { return convergence_curve(train, test, cfg); });
        write_text(a.out, curve_csv("iteration,test_error", points, false));
        out << points.size() << " iterations, final test error " << num(points.back().mean) << '\n';
        return kOk;
    }
    LearningCurveOptions opts;
    opts.test_fraction = a.test_fraction;
    const LearningCurve lc =
        in_stage("train", [&] { return learning_curve(d, cfg, a.fractions, a.repeats, cfg.seed, opts); });
    for (const auto& w : lc.warnings) err << "warning: " << w << '\n';
    write_text(a.out, curve_csv("fraction,mean_accuracy,std_accuracy", lc.points, true));
    out << lc.points.size() << " fractions\n";
    return kOk;
}

struct BenchmarkArgs {
    std::vector<std::string> datasets;
    std::vector<std::string> algorithms{"adaboost", "adaboost-pt", "cbpt"};
    std::size_t folds = 5;
    std::string out;
    ConfigFlags cfg;
};

int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out, std::ostream& err) {
    for (const auto& alg : a.algorithms) {
        try {
            (void)algorithm_from_string(alg);
        } catch (const ValidationError& e) {
            throw UsageFailure(e.what());
        }
    }
    std::ostringstream s;
    s << "dataset,algorithm,n_samples,accuracy_mean,accuracy_std,macro_f1_mean,macro_f1_std,auc_ovr_mean,"
         "auc_ovr_std,estimators_mean\n";
    std::vector<std::string> failures;
    for (const auto& spec : a.datasets) {
        const auto colon = spec.rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size()) {
            throw UsageFailure("--dataset expects <csv>:<label column>, got '" + spec + "'");
        }
        const std::string path = spec.substr(0, colon), label = spec.substr(colon + 1);
        const std::string name = fs::path(path).stem().string();
        std::optional<Dataset> d;
        try {
            d = in_stage("load", [&] { return load_csv(path, label); });
        } catch (const std::exception& e) {
            failures.push_back(name + ": " + e.what());
            continue;
        }
        for (const auto& alg : a.algorithms) {
            ConfigFlags flags = a.cfg;
            flags.algorithm = alg;
            try {
                const BoostConfig cfg = flags.config();
                const CvReport rep =
                    in_stage("train", [&] { return cross_validate(*d, cfg, a.folds, cfg.seed); });
                double estimators = 0.0;
                for (auto k : rep.estimators_per_fold) estimators += static_cast<double>(k);
                estimators /= static_cast<double>(rep.estimators_per_fold.size());
                s << name << ',' << alg << ',' << d->n_samples() << ',' << num(rep.accuracy.mean) << ','
                  << num(rep.accuracy.std) << ',' << num(rep.macro_f1.mean) << ',' << num(rep.macro_f1.std) << ','
                  << num(rep.auc_ovr.mean) << ',' << num(rep.auc_ovr.std) << ',' << num(estimators) << '\n';
                out << name << ' ' << alg << ": accuracy " << num(rep.accuracy.mean) << " +- "
                    << num(rep.accuracy.std) << '\n';
            } catch (const std::exception& e) {
                failures.push_back(name + " " + alg + ": " + e.what());
            }
        }
    }
    write_text(a.out, s.str());
    if (failures.empty()) return kOk;
    err << failures.size() << " benchmark run(s) failed:\n";
    for (const auto& f : failures) err << "  " << f << '\n';
    return kRuntimeFailure;
}

constexpr const char* kDatasetHelp = R"(The benchmark datasets are not bundled with the tool and are never downloaded by it.
Fetch them from the UCI Machine Learning Repository and convert them to CSV with a
header row and a label column:

  glass     https://archive.ics.uci.edu/dataset/42/glass+identification
            glass.data: drop the Id column; label column "Type"
  statlog   https://archive.ics.uci.edu/dataset/146/statlog+landsat+satellite
            sat.trn + sat.tst (space separated): 36 features, label column "Class"
  lsvt      https://archive.ics.uci.edu/dataset/282/lsvt+voice+rehabilitation
            LSVT_voice_rehabilitation.xlsx: 310 features, label column "Class"

tools/convert_uci_datasets.py in the source tree writes data/glass.csv and
data/statlog.csv from the original files.
)";

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cost-sensitive boosting with pruned trees"};
    app.name("cbpt");
    app.require_subcommand(1);
    std::size_t threads = 0;
    bool threads_set = false;
    app.add_option_function<std::size_t>(
        "--threads",
        [&](const std::size_t& n) {
            threads = n;
            threads_set = true;
        },
        "Worker thread cap (0 = one per core; default from CBPT_THREADS)");

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train a model and write it as JSON");
    c_train->add_option("--data", train.data, "Training CSV")->required();
    c_train->add_option("--label", train.label, "Label column")->required();
    c_train->add_option("--out", train.out, "Model file to write")->required();
    c_train->add_option("--log", train.log, "Training log CSV (default <out>.log.csv)");
    c_train->add_option("--test", train.test, "Labelled CSV whose error is logged per iteration");
    c_train->add_flag("--verbose", train.verbose, "Print every iteration to stderr");
    train.cfg.add_to(*c_train);

    PredictArgs predict;
    auto* c_predict = app.add_subcommand("predict", "Predict classes and vote shares");
    c_predict->add_option("--model", predict.model, "Model file")->required();
    c_predict->add_option("--data", predict.data, "CSV with the model's feature columns")->required();
    c_predict->add_option("--out", predict.out, "Predictions CSV to write")->required();

    EvaluateArgs evaluate;
    auto* c_eval = app.add_subcommand("evaluate", "Score a model on a labelled CSV");
    c_eval->add_option("--model", evaluate.model, "Model file")->required();
    c_eval->add_option("--data", evaluate.data, "Labelled CSV")->required();
    c_eval->add_option("--label", evaluate.label, "Label column")->required();
    c_eval->add_option("--out", evaluate.out, "Metrics CSV to write")->required();
    c_eval->add_option("--confusion", evaluate.confusion, "Confusion matrix CSV to write");

    CvArgs cv;
    auto* c_cv = app.add_subcommand("cv", "k-fold cross-validation");
    c_cv->add_option("--data", cv.data, "Labelled CSV")->required();
    c_cv->add_option("--label", cv.label, "Label column")->required();
    c_cv->add_option("--out", cv.out, "Metrics CSV to write")->required();
    c_cv->add_option("--folds", cv.folds, "Number of folds")->capture_default_str();
    c_cv->add_option("--confusion", cv.confusion, "Confusion matrix summed over folds");
    c_cv->add_flag("--unstratified", cv.unstratified, "Assign folds without stratifying by class");
    cv.cfg.add_to(*c_cv);

    CurvesArgs curves;
    auto* c_curves = app.add_subcommand("curves", "Convergence or learning curves");
    c_curves->add_option("--data", curves.data, "Labelled CSV")->required();
    c_curves->add_option("--label", curves.label, "Label column")->required();
    c_curves->add_option("--out", curves.out, "Curve CSV to write")->required();
    c_curves->add_flag("--convergence", curves.convergence, "Test error per boosting iteration");
    c_curves->add_flag("--learning", curves.learning, "Test accuracy per training fraction");
    c_curves->add_option("--fractions", curves.fractions, "Training fractions in (0, 1]")
        ->delimiter(',')
        ->check(CLI::Range(0.0, 1.0));
    c_curves->add_option("--repeats", curves.repeats, "Subsamples per fraction")->capture_default_str();
    c_curves->add_option("--test-fraction", curves.test_fraction, "Held-out share")->capture_default_str();
    curves.cfg.add_to(*c_curves);

    BenchmarkArgs bench;
    auto* c_bench = app.add_subcommand("benchmark", "Cross-validate every dataset and algorithm pair");
    c_bench->add_option("--dataset", bench.datasets, "<csv>:<label column>, repeatable")->required();
    c_bench->add_option("--algorithms", bench.algorithms, "Comma-separated algorithms")
        ->delimiter(',')
        ->capture_default_str();
    c_bench->add_option("--folds", bench.folds, "Number of folds")->capture_default_str();
    c_bench->add_option("--out", bench.out, "Results CSV to write")->required();
    bench.cfg.add_to(*c_bench, false);

    auto* c_datasets = app.add_subcommand("datasets", "Print where to get the benchmark datasets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsage;
    }
    if (threads_set) set_thread_limit(threads);

    try {
        if (c_train->parsed()) return cmd_train(train, out, err);
        if (c_predict->parsed()) return cmd_predict(predict, out);
        if (c_eval->parsed()) return cmd_evaluate(evaluate, out);
        if (c_cv->parsed()) return cmd_cv(cv, out);
        if (c_curves->parsed()) return cmd_curves(curves, out, err);
        if (c_bench->parsed()) return cmd_benchmark(bench, out, err);
        if (c_datasets->parsed()) {
            out << kDatasetHelp;
            return kOk;
        }
    } catch (const UsageFailure& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kUsage;
}

}  // namespace cbpt::cli
