#include "papilla/classifier.hpp"
#include "papilla/error.hpp"
#include "papilla/evaluation.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace papilla;

namespace {

struct Dataset {
    Eigen::MatrixXd x;
    std::vector<std::string> y;
};

// Two isotropic blobs in 2D, centres 6 sd apart.
Dataset blobs(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Dataset d;
    d.x.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        const bool a = i % 2 == 0;
        d.x(i, 0) = (a ? -3.0 : 3.0) + g(rng);
        d.x(i, 1) = (a ? 1.0 : -1.0) + g(rng);
        d.y.push_back(a ? "a" : "b");
    }
    return d;
}

// Four clusters at (±2, ±2); the label is the sign of x·y.
Dataset xor_set(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.4);
    Dataset d;
    d.x.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        const double sx = (i % 4 < 2) ? 2.0 : -2.0;
        const double sy = (i % 2) ? 2.0 : -2.0;
        d.x(i, 0) = sx + g(rng);
        d.x(i, 1) = sy + g(rng);
        d.y.push_back(sx * sy > 0 ? "same" : "opposite");
    }
    return d;
}

const std::vector<std::string> kXY{"x", "y"};

double score(const ClassifierModel& m, const Dataset& d) { return balanced_accuracy(m.predict(d.x), d.y); }

} // namespace

TEST_CASE("logistic regression") {
    const auto train = blobs(200, 1), test = blobs(200, 2);
    const auto model = train_logistic(train.x, train.y, kXY);
    CHECK(score(model, test) >= 0.95);
    CHECK(score(model, train) >= 0.95);
    CHECK(model.classes == std::vector<std::string>{"a", "b"});
    CHECK(model.weights.rows() == 2);
    CHECK(model.weights.cols() == 3);

    const auto xtrain = xor_set(400, 3), xtest = xor_set(400, 4);
    const double xs = score(train_logistic(xtrain.x, xtrain.y, kXY), xtest);
    CHECK(xs >= 0.4);
    CHECK(xs <= 0.6);
}

TEST_CASE("logistic loss never increases") {
    const auto d = xor_set(200, 5);
    for (double lambda : {0.0, 1.0, 10.0}) {
        LogisticConfig cfg;
        cfg.l2_lambda = lambda;
        cfg.max_iter = 300;
        const auto m = train_logistic(d.x, d.y, kXY, cfg);
        REQUIRE(m.loss_trace.size() >= 2);
        for (std::size_t i = 1; i < m.loss_trace.size(); ++i) CHECK(m.loss_trace[i] <= m.loss_trace[i - 1]);
    }
    const auto b = blobs(100, 6);
    const auto m = train_logistic(b.x, b.y, kXY);
    for (std::size_t i = 1; i < m.loss_trace.size(); ++i) CHECK(m.loss_trace[i] <= m.loss_trace[i - 1]);
    CHECK(m.converged);
}

TEST_CASE("softmax handles three classes") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 0.5);
    Eigen::MatrixXd x(300, 2);
    std::vector<std::string> y;
    const double cx[3]{0, 4, -4}, cy[3]{4, -2, -2};
    for (int i = 0; i < 300; ++i) {
        x(i, 0) = cx[i % 3] + g(rng);
        x(i, 1) = cy[i % 3] + g(rng);
        y.push_back("c" + std::to_string(i % 3));
    }
    const auto m = train_logistic(x, y, kXY);
    CHECK(balanced_accuracy(m.predict(x), y) >= 0.99);
    const auto p = m.decision_function(x);
    CHECK(p.rows() == 300);
    CHECK(p.cols() == 3);
    const auto k = train_rbf(x, y, kXY);
    CHECK(balanced_accuracy(k.predict(x), y) >= 0.99);
}

TEST_CASE("rbf kernel machine") {
    const auto xtrain = xor_set(400, 8), xtest = xor_set(400, 9);
    const auto model = train_rbf(xtrain.x, xtrain.y, kXY);
    CHECK(score(model, xtest) >= 0.95);

    const auto train = blobs(200, 10), test = blobs(200, 11);
    CHECK(score(train_rbf(train.x, train.y, kXY), test) >= 0.95);

    // Default width: 1 / (d · mean variance) of the standardized data, which is 1/2 here.
    CHECK(model.gamma == doctest::Approx(0.5).epsilon(1e-12));

    Eigen::MatrixXd two(2, 2);
    two << 0, 0, 10, 10;
    const std::vector<std::string> labels{"left", "right"};
    const auto tiny = train_rbf(two, labels, kXY);
    CHECK(tiny.predict(two) == labels);

    RbfConfig cfg;
    cfg.seed = 3;
    const auto again1 = train_rbf(xtrain.x, xtrain.y, kXY, cfg);
    const auto again2 = train_rbf(xtrain.x, xtrain.y, kXY, cfg);
    CHECK(again1.dual_coef == again2.dual_coef);
    CHECK(again1.support_vectors == again2.support_vectors);
}

TEST_CASE("training input errors") {
    const auto d = blobs(20, 12);
    const std::vector<std::string> one(20, "a");
    CHECK_THROWS_AS(train_logistic(d.x, one, kXY), DataError);
    CHECK_THROWS_AS(train_rbf(d.x, one, kXY), DataError);
    auto bad = d.x;
    bad(3, 1) = std::nan("");
    CHECK_THROWS_AS(train_logistic(bad, d.y, kXY), DataError);
    CHECK_THROWS_AS(train_rbf(bad, d.y, kXY), DataError);
    CHECK_THROWS_AS(train_logistic(d.x, d.y, {"x"}), DataError);
    const auto m = train_logistic(d.x, d.y, kXY);
    CHECK_THROWS_AS((void)m.predict(Eigen::MatrixXd::Zero(2, 3)), DataError);
    CHECK(parse_model_kind("rbf") == ModelKind::rbf);
    CHECK_THROWS_AS(parse_model_kind("forest"), DataError);
}

TEST_CASE("models round trip through json") {
    const auto d = xor_set(120, 13);
    for (auto kind : {ModelKind::logistic, ModelKind::rbf}) {
        ModelConfig cfg;
        cfg.kind = kind;
        const auto m = train(d.x, d.y, kXY, cfg);
        const auto path = std::filesystem::temp_directory_path() / ("papilla_model_" + to_string(kind) + ".json");
        save_model(path, m);
        const auto back = load_model(path);
        std::filesystem::remove(path);
        CHECK(back.kind == kind);
        CHECK(back.classes == m.classes);
        CHECK(back.feature_names == m.feature_names);
        CHECK(back.decision_function(d.x) == m.decision_function(d.x));
        CHECK(to_json(back).dump() == to_json(m).dump());
    }

    auto j = nlohmann::json::parse(to_json(train_logistic(d.x, d.y, kXY)).dump());
    j["schema_version"] = 99;
    CHECK_THROWS_AS(model_from_json(j), DataError);
    j.erase("schema_version");
    CHECK_THROWS_AS(model_from_json(j), DataError);
}
