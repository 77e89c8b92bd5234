#include <doctest.h>

#include <sstream>

#include "cbpt/dataset.hpp"
#include "cbpt/model_io.hpp"
#include "cli.hpp"
#include "support.hpp"

using namespace cbpt;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "cbpt");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const char* kTiny = "x,y,label\n0,0,a\n0,1,a\n5,0,b\n5,1,b\n";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("train on four samples") {
    test::ScratchDir dir("cli");
    const auto data = dir.write("tiny.csv", kTiny);
    const auto r = run({"train", "--data", data, "--label", "label", "--out", dir.file("m.json"), "--trees", "10"});
    CHECK(r.code == 0);
    const auto m = load_model(dir.file("m.json"));
    CHECK(m.size() == 1);
    CHECK(m.class_names() == std::vector<std::string>{"a", "b"});
    const auto log = test::slurp(dir.file("m.json.log.csv"));
    CHECK(log.rfind("iteration,epsilon,theta,n_leaves,train_error\n", 0) == 0);
    CHECK(lines(log) == 2);
}

TEST_CASE("usage errors exit with 2") {
    test::ScratchDir dir("cli");
    const auto data = dir.write("tiny.csv", kTiny);
    CHECK(run({"train", "--data", data, "--out", dir.file("m.json")}).code == 2);
    CHECK(run({"train", "--data", data, "--label", "label", "--out", dir.file("m.json"), "--psi-d", "-1"}).code == 2);
    CHECK(run({"train", "--data", data, "--label", "label", "--out", dir.file("m.json"), "--algorithm", "svm"}).code ==
          2);
    CHECK(run({}).code == 2);
    CHECK_FALSE(std::filesystem::exists(dir.file("m.json")));
}

TEST_CASE("runtime errors exit with 1 and name the stage") {
    test::ScratchDir dir("cli");
    const auto r = run({"train", "--data", dir.file("none.csv"), "--label", "label", "--out", dir.file("m.json")});
    CHECK(r.code == 1);
    CHECK(r.err.find("load") != std::string::npos);
    const auto bad = dir.write("bad.csv", "x,label\n1,a\nfoo,b\n");
    const auto r2 = run({"train", "--data", bad, "--label", "label", "--out", dir.file("m.json")});
    CHECK(r2.code == 1);
    CHECK(r2.err.find("row 3") != std::string::npos);
}

TEST_CASE("predict binds feature columns by name") {
    test::ScratchDir dir("cli");
    const Dataset d = test::random_dataset(60, 3, 3, 4, 5);
    const auto data = dir.file("d.csv");
    save_csv(d, data, "target");
    REQUIRE(run({"train", "--data", data, "--label", "target", "--out", dir.file("m.json"), "--trees", "6"}).code == 0);

    REQUIRE(run({"predict", "--model", dir.file("m.json"), "--data", data, "--out", dir.file("p1.csv")}).code == 0);
    const auto p1 = test::slurp(dir.file("p1.csv"));
    std::string header = "predicted";
    const auto model = load_model(dir.file("m.json"));
    for (const auto& c : model.class_names()) header += ",share_" + c;
    CHECK(p1.rfind(header + "\n", 0) == 0);
    CHECK(lines(p1) == 61);

    // same rows, columns reversed and label dropped
    std::ostringstream exact;
    exact << "f2,f1,f0\n";
    const auto table = read_csv_table(data);
    for (const auto& row : table.rows) exact << row[2] << ',' << row[1] << ',' << row[0] << '\n';
    const auto permuted = dir.write("perm.csv", exact.str());
    REQUIRE(run({"predict", "--model", dir.file("m.json"), "--data", permuted, "--out", dir.file("p2.csv")}).code == 0);
    CHECK(test::slurp(dir.file("p2.csv")) == p1);

    const auto missing = dir.write("missing.csv", "f0,f2\n1,2\n");
    const auto r = run({"predict", "--model", dir.file("m.json"), "--data", missing, "--out", dir.file("p3.csv")});
    CHECK(r.code == 1);
    CHECK(r.err.find("f1") != std::string::npos);
}

TEST_CASE("predictions on separable training data equal the labels") {
    test::ScratchDir dir("cli");
    const Dataset d = test::separable_dataset(10, 2, 3);
    const auto data = dir.file("s.csv");
    save_csv(d, data, "y");
    REQUIRE(run({"train", "--data", data, "--label", "y", "--out", dir.file("m.json")}).code == 0);
    REQUIRE(run({"predict", "--model", dir.file("m.json"), "--data", data, "--out", dir.file("p.csv")}).code == 0);
    std::istringstream in(test::slurp(dir.file("p.csv")));
    std::string line;
    std::getline(in, line);
    for (std::size_t i = 0; i < d.n_samples(); ++i) {
        REQUIRE(std::getline(in, line));
        CHECK(line.substr(0, line.find(',')) == d.class_names()[static_cast<std::size_t>(d.label(i))]);
    }
}

TEST_CASE("evaluate writes metrics and a confusion matrix") {
    test::ScratchDir dir("cli");
    const Dataset d = test::separable_dataset(10, 2, 3);
    const auto data = dir.file("s.csv");
    save_csv(d, data, "y");
    REQUIRE(run({"train", "--data", data, "--label", "y", "--out", dir.file("m.json")}).code == 0);
    const auto r = run({"evaluate", "--model", dir.file("m.json"), "--data", data, "--label", "y", "--out",
                        dir.file("e.csv"), "--confusion", dir.file("c.csv")});
    REQUIRE(r.code == 0);
    CHECK(test::slurp(dir.file("e.csv")) == "metric,mean,std\naccuracy,1,0\nmacro_f1,1,0\nauc_ovr,1,0\n");
    CHECK(test::slurp(dir.file("c.csv")) == "neg,pos\n10,0\n0,10\n");

    const auto unseen = dir.write("u.csv", "f0,f1,y\n1,2,other\n");
    CHECK(run({"evaluate", "--model", dir.file("m.json"), "--data", unseen, "--label", "y", "--out",
               dir.file("e2.csv")})
              .code == 1);
}

TEST_CASE("cv is byte-identical across runs") {
    test::ScratchDir dir("cli");
    const Dataset d = test::random_dataset(50, 2, 2, 9, 4);
    const auto data = dir.file("d.csv");
    save_csv(d, data, "y");
    const std::vector<std::string> base{"cv", "--data", data, "--label", "y", "--folds", "3", "--trees", "5"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out", dir.file("a.csv")});
    b.insert(b.end(), {"--out", dir.file("b.csv")});
    REQUIRE(run(a).code == 0);
    REQUIRE(run(b).code == 0);
    const auto text = test::slurp(dir.file("a.csv"));
    CHECK(text == test::slurp(dir.file("b.csv")));
    CHECK(text.rfind("metric,mean,std\naccuracy,", 0) == 0);
}

TEST_CASE("convergence curve has one row per estimator") {
    test::ScratchDir dir("cli");
    const Dataset d = test::random_dataset(80, 2, 3, 2, 5);
    const auto data = dir.file("d.csv");
    save_csv(d, data, "y");
    const auto r = run({"curves", "--data", data, "--label", "y", "--out", dir.file("c.csv"), "--convergence",
                        "--trees", "7"});
    REQUIRE(r.code == 0);
    const auto text = test::slurp(dir.file("c.csv"));
    CHECK(text.rfind("iteration,test_error\n", 0) == 0);
    CHECK(lines(text) >= 2);
    CHECK(lines(text) <= 8);
    CHECK(run({"curves", "--data", data, "--label", "y", "--out", dir.file("x.csv")}).code == 2);
}

TEST_CASE("learning curve rows follow the fractions") {
    test::ScratchDir dir("cli");
    const Dataset d = test::separable_dataset(30, 2, 5);
    const auto data = dir.file("d.csv");
    save_csv(d, data, "y");
    const auto r = run({"curves", "--data", data, "--label", "y", "--out", dir.file("l.csv"), "--learning",
                        "--fractions", "0.5,0.25", "--repeats", "2", "--trees", "3"});
    REQUIRE(r.code == 0);
    const auto text = test::slurp(dir.file("l.csv"));
    CHECK(text.rfind("fraction,mean_accuracy,std_accuracy\n0.25,", 0) == 0);
    CHECK(lines(text) == 3);
}

TEST_CASE("benchmark writes one row per dataset and algorithm") {
    test::ScratchDir dir("cli");
    const auto one = dir.file("one.csv");
    const auto two = dir.file("two.csv");
    save_csv(test::separable_dataset(10, 2, 1), one, "y");
    save_csv(test::random_dataset(40, 2, 3, 1, 4), two, "y");
    const auto r = run({"benchmark", "--dataset", one + ":y", "--dataset", two + ":y", "--algorithms",
                        "cbpt,adaboost", "--folds", "2", "--trees", "4", "--out", dir.file("b.csv")});
    REQUIRE(r.code == 0);
    const auto text = test::slurp(dir.file("b.csv"));
    CHECK(text.rfind("dataset,algorithm,n_samples,accuracy_mean,accuracy_std,macro_f1_mean,macro_f1_std,"
                     "auc_ovr_mean,auc_ovr_std,estimators_mean\n",
                     0) == 0);
    CHECK(lines(text) == 5);

    // a broken dataset is reported but does not stop the others
    const auto r2 = run({"benchmark", "--dataset", dir.file("gone.csv") + ":y", "--dataset", one + ":y",
                         "--algorithms", "adaboost", "--folds", "2", "--trees", "2", "--out", dir.file("b2.csv")});
    CHECK(r2.code == 1);
    CHECK(lines(test::slurp(dir.file("b2.csv"))) == 2);
}

TEST_CASE("datasets help") {
    const auto r = run({"datasets"});
    CHECK(r.code == 0);
    CHECK(r.out.find("glass") != std::string::npos);
}

}  // TEST_SUITE
