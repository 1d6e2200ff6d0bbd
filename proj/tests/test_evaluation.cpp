#include "papilla/error.hpp"
#include "papilla/evaluation.hpp"

#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

using namespace papilla;

namespace {

FeatureTable empty_table(std::vector<std::string> names) {
    FeatureTable t;
    t.feature_names = std::move(names);
    t.features.resize(0, static_cast<Eigen::Index>(t.feature_names.size()));
    return t;
}

void add(FeatureTable& t, const std::string& participant, const std::string& type, const std::string& gender,
         const std::vector<double>& values) {
    t.append_row("r" + std::to_string(t.rows()), participant, type, gender, "adult", values);
}

// Label is the sign of x; a second uninformative column rides along.
FeatureTable threshold_table(std::size_t n, std::uint64_t seed, std::size_t groups = 4) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto t = empty_table({"x", "noise"});
    for (std::size_t i = 0; i < n; ++i) {
        const double x = u(rng);
        add(t, "p" + std::to_string(i % groups), x > 0 ? "up" : "down", "f", {x, u(rng)});
    }
    return t;
}

FeatureTable coin_table(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::bernoulli_distribution coin;
    auto t = empty_table({"a", "b", "c"});
    for (std::size_t i = 0; i < n; ++i) add(t, "p0", coin(rng) ? "heads" : "tails", "f", {g(rng), g(rng), g(rng)});
    return t;
}

// Each participant is encoded one-hot, and its rows draw gender with a
// participant-specific bias of 0.2 or 0.8.
FeatureTable leak_table(std::size_t groups, std::size_t rows_per_group, std::uint64_t seed) {
    std::vector<std::string> names;
    for (std::size_t g = 0; g < groups; ++g) names.push_back("id_" + std::to_string(g));
    auto t = empty_table(names);
    std::mt19937_64 rng(seed);
    for (std::size_t g = 0; g < groups; ++g) {
        std::bernoulli_distribution coin(g % 2 ? 0.8 : 0.2);
        std::vector<double> row(groups, 0.0);
        row[g] = 1.0;
        for (std::size_t i = 0; i < rows_per_group; ++i)
            add(t, "p" + std::to_string(g), "none", coin(rng) ? "f" : "m", row);
    }
    return t;
}

ModelConfig logistic() {
    ModelConfig m;
    m.kind = ModelKind::logistic;
    return m;
}

} // namespace

TEST_CASE("balanced accuracy") {
    using V = std::vector<std::string>;
    CHECK(balanced_accuracy(V{"a", "b", "a"}, V{"a", "b", "a"}) == 1.0);
    CHECK(balanced_accuracy(V{"a", "a", "b", "a"}, V{"a", "a", "b", "b"}) == 0.75);
    CHECK(balanced_accuracy(V(6, "x"), V{"x", "y", "z", "x", "y", "z"}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(balanced_accuracy(V{"q"}, V{"a"}) == 0.0);
    CHECK_THROWS_AS(balanced_accuracy(V{"a"}, V{"a", "b"}), DataError);
    CHECK_THROWS_AS(balanced_accuracy(V{}, V{}), DataError);

    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> pick(0, 3);
    const V names{"a", "b", "c", "d"}, renamed{"w", "x", "y", "z"};
    V p, a, p2, a2;
    for (int i = 0; i < 200; ++i) {
        const int x = pick(rng), y = pick(rng);
        p.push_back(names[x]);
        a.push_back(names[y]);
        p2.push_back(renamed[(x + 1) % 4]);
        a2.push_back(renamed[(y + 1) % 4]);
    }
    CHECK(balanced_accuracy(p2, a2) == balanced_accuracy(p, a));
}

TEST_CASE("random split evaluation") {
    SplitEvalConfig cfg;
    cfg.model = logistic();
    cfg.repeats = 20;
    cfg.seed = 2;
    const auto good = random_split_eval(threshold_table(300, 1), "type", cfg);
    CHECK(good.mean >= 0.99);
    CHECK(good.scores.size() == 20);
    CHECK(std::is_sorted(good.scores.begin(), good.scores.end()));
    CHECK(good.stdev >= 0.0);
    CHECK(good.protocol == "random-split");
    CHECK(good.best_test_rows.size() == 60);
    CHECK(good.best_train_rows.size() == 240);
    CHECK(good.confusion.sum() == 20 * 60);
    for (double s : good.scores) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }

    const auto null = random_split_eval(coin_table(400, 3), "type", cfg);
    CHECK(null.mean >= 0.4);
    CHECK(null.mean <= 0.6);

    cfg.model = ModelConfig{};
    const auto kernel = random_split_eval(threshold_table(300, 1), "type", cfg);
    CHECK(kernel.mean >= 0.95);
}

TEST_CASE("random split evaluation is deterministic") {
    const auto t = threshold_table(100, 4);
    SplitEvalConfig cfg;
    cfg.repeats = 1;
    cfg.seed = 9;
    CHECK(to_json(random_split_eval(t, "type", cfg)).dump() == to_json(random_split_eval(t, "type", cfg)).dump());
    cfg.repeats = 8;
    CHECK(to_json(random_split_eval(t, "type", cfg)).dump() == to_json(random_split_eval(t, "type", cfg)).dump());

    auto single = threshold_table(10, 5);
    single.label_type.assign(10, "up");
    CHECK_THROWS_AS(random_split_eval(single, "type", cfg), DataError);

    // One "rare" row: a training part without it is allowed, one with it
    // missing from training must be redrawn.
    auto rare = threshold_table(40, 6);
    rare.label_type.assign(40, "common");
    rare.label_type[7] = "rare";
    cfg.test_frac = 0.5;
    const auto r = random_split_eval(rare, "type", cfg);
    for (auto row : r.best_test_rows) CHECK(row != 7);
}

TEST_CASE("leave one group out") {
    const auto leak = leak_table(12, 30, 7);
    // Every held-out participant gets one constant prediction, so any fold
    // holding both genders scores exactly one half.
    for (const auto& model : {logistic(), ModelConfig{}}) {
        const auto logo = logo_eval(leak, "gender", "participant", model);
        CHECK(logo.protocol == "logo");
        CHECK(logo.scores.size() == 12);
        CHECK(logo.mean >= 0.4);
        CHECK(logo.mean <= 0.6);

        SplitEvalConfig cfg;
        cfg.model = model;
        cfg.repeats = 20;
        const auto split = random_split_eval(leak, "gender", cfg);
        CHECK(split.mean >= 0.7);
    }

    const auto honest = logo_eval(threshold_table(300, 8, 5), "type", "participant", logistic());
    CHECK(honest.scores.size() == 5);
    CHECK(honest.mean >= 0.99);

    CHECK_THROWS_AS(logo_eval(coin_table(50, 9), "type", "participant", logistic()), DataError);

    // A participant that alone carries a class leaves a fold without it.
    auto lonely = threshold_table(60, 10, 3);
    for (std::size_t i = 0; i < lonely.rows(); ++i)
        if (lonely.participants[i] == "p2") lonely.label_type[i] = "only_here";
    const auto skipped = logo_eval(lonely, "type", "participant", logistic());
    CHECK(skipped.scores.size() == 2);
    CHECK(skipped.warnings.size() == 1);
}

TEST_CASE("permutation importance") {
    // Column "copy" is the label itself; "flat" never varies; "noise" is independent.
    auto make = [](std::size_t n, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::bernoulli_distribution coin;
        std::normal_distribution<double> g;
        auto t = empty_table({"noise", "copy", "flat", "noise2"});
        for (std::size_t i = 0; i < n; ++i) {
            const bool label = coin(rng);
            add(t, "p", label ? "yes" : "no", "f", {g(rng), label ? 1.0 : 0.0, 3.0, g(rng)});
        }
        return t;
    };
    const auto train_table = make(300, 11), test_table = make(200, 12);
    for (const auto& cfg : {logistic(), ModelConfig{}}) {
        const auto model = train(train_table, "type", cfg);
        const auto ranking = permutation_importance(model, test_table, "type", 30, 5);
        REQUIRE(ranking.size() == 4);
        CHECK(ranking[0].feature == "copy");
        CHECK(ranking[0].importance >= 0.3);
        for (const auto& f : ranking) {
            if (f.feature == "flat") {
                CHECK(f.importance == 0.0);
                CHECK(f.stdev == 0.0);
            }
            if (f.feature.rfind("noise", 0) == 0) CHECK(std::abs(f.importance) <= 0.05);
        }
        for (std::uint64_t seed = 0; seed < 10; ++seed)
            CHECK(permutation_importance(model, test_table, "type", 30, seed)[0].feature == "copy");
    }

    const auto model = train(train_table, "type", logistic());
    std::ostringstream csv;
    write_importance_csv(csv, permutation_importance(model, test_table, "type", 5, 1));
    CHECK(csv.str().rfind("rank,feature,importance,stdev\n1,copy,", 0) == 0);
    CHECK_THROWS_AS(permutation_importance(model, test_table.select_features(std::vector<std::string>{"copy"}), "type"),
                    DataError);
}

TEST_CASE("principal components") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g;

    SUBCASE("points on a plane in five dimensions") {
        Eigen::MatrixXd basis(2, 5), coeff(400, 2);
        for (Eigen::Index i = 0; i < basis.size(); ++i) basis.data()[i] = g(rng);
        for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff.data()[i] = g(rng);
        const Eigen::MatrixXd x = coeff * basis;
        const auto p = pca_project(x, 2);
        CHECK(p.explained_variance.sum() == doctest::Approx(1.0).epsilon(1e-9));
        const Eigen::MatrixXd z = fit_standardization(x).apply(x);
        CHECK((z - p.coordinates * p.components.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((p.components.transpose() * p.components - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
        for (Eigen::Index c = 0; c < 2; ++c) {
            Eigen::Index lead = 0;
            p.components.col(c).cwiseAbs().maxCoeff(&lead);
            CHECK(p.components(lead, c) > 0.0);
        }
        CHECK(p.explained_variance(0) >= p.explained_variance(1));
        const auto again = pca_project(x, 2);
        CHECK(again.coordinates == p.coordinates);
    }
    SUBCASE("isotropic gaussian") {
        Eigen::MatrixXd x(5000, 3);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
        const auto p = pca_project(x, 3);
        CHECK(p.explained_variance.maxCoeff() / p.explained_variance.minCoeff() < 1.3);
        CHECK(p.explained_variance.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("repeated point") {
        const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(10, 4, 2.5);
        const auto p = pca_project(x, 2);
        CHECK(p.coordinates == Eigen::MatrixXd::Zero(10, 2));
        CHECK(p.explained_variance == Eigen::VectorXd::Zero(2));
    }
    CHECK_THROWS_AS(pca_project(Eigen::MatrixXd::Ones(10, 3), 4), DataError);
    CHECK_THROWS_AS(pca_project(Eigen::MatrixXd::Ones(1, 3), 2), DataError);
}
