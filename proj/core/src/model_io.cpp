#include "cbpt/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cbpt/error.hpp"

namespace cbpt {

using nlohmann::json;

namespace {

json config_to_json(const BoostConfig& c) {
    return {
        {"algorithm", std::string(to_string(c.algorithm))},
        {"n_trees", c.n_trees},
        {"learning_rate", c.learning_rate},
        {"psi_d", c.psi_d},
        {"eta_d", c.eta_d},
        {"resampling_folds", c.resampling_folds},
        {"impurity", std::string(to_string(c.impurity))},
        {"seed", c.seed},
        {"penalty_update", c.penalty_update == PenaltyUpdate::multiplicative ? "multiplicative" : "log_product"},
        {"base_learner", static_cast<int>(c.base_learner)},
        {"neutral_penalties", c.neutral_penalties},
        {"prune_cost", std::string(to_string(c.prune_cost))},
    };
}

BoostConfig config_from_json(const json& j) {
    BoostConfig c;
    c.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    c.n_trees = j.at("n_trees").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.psi_d = j.at("psi_d").get<double>();
    c.eta_d = j.at("eta_d").get<double>();
    c.resampling_folds = j.at("resampling_folds").get<std::size_t>();
    c.impurity = impurity_from_string(j.at("impurity").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto mode = j.at("penalty_update").get<std::string>();
    if (mode == "multiplicative") {
        c.penalty_update = PenaltyUpdate::multiplicative;
    } else if (mode == "log_product") {
        c.penalty_update = PenaltyUpdate::log_product;
    } else {
        throw FormatError("unknown penalty_update '" + mode + "'");
    }
    const int base = j.value("base_learner", 0);
    if (base < 0 || base > static_cast<int>(BaseLearner::pruned_tree)) throw FormatError("unknown base_learner");
    c.base_learner = static_cast<BaseLearner>(base);
    c.neutral_penalties = j.value("neutral_penalties", false);
    try {
        c.prune_cost = cost_kind_from_string(j.value("prune_cost", std::string("weight-share")));
    } catch (const ValidationError& e) {
        throw FormatError(e.what());
    }
    return c;
}

// JSON has no NaN or infinity; nlohmann would quietly write null.
double finite(double x, const char* what) {
    if (!std::isfinite(x)) throw FormatError(std::string("cannot serialize non-finite ") + what);
    return x;
}

json tree_to_json(const Tree& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes()) {
        for (double w : n.class_weights) finite(w, "class weight");
        json jn = {
            {"id", n.id},
            {"depth", n.depth},
            {"is_leaf", n.is_leaf},
            {"class_weights", n.class_weights},
            {"sample_count", n.sample_count},
            {"impurity", finite(n.impurity, "impurity")},
        };
        if (!n.is_leaf) {
            jn["feature"] = n.feature;
            jn["threshold"] = finite(n.threshold, "threshold");
            jn["left"] = n.left;
            jn["right"] = n.right;
            jn["gain"] = finite(n.gain, "gain");
        }
        nodes.push_back(std::move(jn));
    }
    return nodes;
}

Tree tree_from_json(const json& nodes, std::size_t n_features, std::size_t n_classes, Impurity impurity) {
    std::vector<TreeNode> out;
    out.reserve(nodes.size());
    for (const auto& jn : nodes) {
        TreeNode n;
        n.id = jn.at("id").get<std::size_t>();
        n.depth = jn.at("depth").get<std::size_t>();
        n.is_leaf = jn.at("is_leaf").get<bool>();
        n.class_weights = jn.at("class_weights").get<std::vector<double>>();
        n.sample_count = jn.at("sample_count").get<std::size_t>();
        n.impurity = jn.at("impurity").get<double>();
        if (!n.is_leaf) {
            n.feature = jn.at("feature").get<std::size_t>();
            n.threshold = jn.at("threshold").get<double>();
            n.left = jn.at("left").get<std::size_t>();
            n.right = jn.at("right").get<std::size_t>();
            n.gain = jn.at("gain").get<double>();
        }
        out.push_back(std::move(n));
    }
    return Tree(std::move(out), n_features, n_classes, impurity);
}

}  // namespace

std::string serialize_model(const EnsembleModel& m) {
    json estimators = json::array();
    for (const auto& e : m.estimators()) {
        estimators.push_back({{"theta", finite(e.theta, "theta")}, {"nodes", tree_to_json(e.tree)}});
    }
    json log = json::array();
    for (const auto& r : m.training_log()) {
        log.push_back({
            {"iteration", r.iteration},
            {"epsilon", r.epsilon},
            {"theta", r.theta},
            {"n_leaves", r.n_leaves},
            {"train_error", r.train_error},
            {"test_error", r.test_error ? json(*r.test_error) : json(nullptr)},
        });
    }
    const json doc = {
        {"format", "cbpt-model"},
        {"format_version", kModelFormatVersion},
        {"config", config_to_json(m.config())},
        {"class_names", m.class_names()},
        {"feature_names", m.feature_names()},
        {"estimators", std::move(estimators)},
        {"training_log", std::move(log)},
    };
    return doc.dump(1) + "\n";
}

EnsembleModel deserialize_model(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("model document is not valid JSON: ") + e.what());
    }
    try {
        if (!doc.is_object() || doc.value("format", "") != "cbpt-model") {
            throw FormatError("not a cbpt model document");
        }
        const int version = doc.at("format_version").get<int>();
        if (version != kModelFormatVersion) {
            throw FormatError("model format version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kModelFormatVersion) + ")");
        }
        BoostConfig cfg = config_from_json(doc.at("config"));
        auto class_names = doc.at("class_names").get<std::vector<std::string>>();
        auto feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        std::vector<Estimator> estimators;
        for (const auto& je : doc.at("estimators")) {
            estimators.push_back({tree_from_json(je.at("nodes"), feature_names.size(), class_names.size(), cfg.impurity),
                                  je.at("theta").get<double>()});
        }
        std::vector<IterationRecord> log;
        for (const auto& jr : doc.at("training_log")) {
            IterationRecord r;
            r.iteration = jr.at("iteration").get<std::size_t>();
            r.epsilon = jr.at("epsilon").get<double>();
            r.theta = jr.at("theta").get<double>();
            r.n_leaves = jr.at("n_leaves").get<std::size_t>();
            r.train_error = jr.at("train_error").get<double>();
            if (!jr.at("test_error").is_null()) r.test_error = jr.at("test_error").get<double>();
            log.push_back(r);
        }
        return EnsembleModel(std::move(estimators), std::move(class_names), std::move(feature_names), cfg,
                             std::move(log));
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed model document: ") + e.what());
    } catch (const ValidationError& e) {
        throw FormatError(std::string("inconsistent model document: ") + e.what());
    }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("cannot replace " + path.string());
    }
}

void save_model(const EnsembleModel& m, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_model(m));
}

EnsembleModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound(path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_model(ss.str());
}

}  // namespace cbpt
