#include "papilla/error.hpp"
#include "papilla/feature_table.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace papilla;

namespace {

FeatureTable table_with(const std::vector<std::string>& names, const Eigen::MatrixXd& values) {
    FeatureTable t;
    t.feature_names = names;
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        std::vector<double> row(values.cols());
        for (Eigen::Index c = 0; c < values.cols(); ++c) row[c] = values(r, c);
        t.append_row("s" + std::to_string(r), "p" + std::to_string(r % 3), r % 2 ? "fungiform" : "filiform",
                     r % 2 ? "f" : "m", r % 4 < 2 ? "young" : "old", row);
    }
    return t;
}

// Sample correlation in long double, written out term by term.
double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    long double ma = 0, mb = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        ma += a(i);
        mb += b(i);
    }
    ma /= a.size();
    mb /= b.size();
    long double sab = 0, saa = 0, sbb = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        sab += (a(i) - ma) * (b(i) - mb);
        saa += (a(i) - ma) * (a(i) - ma);
        sbb += (b(i) - mb) * (b(i) - mb);
    }
    return static_cast<double>(sab / std::sqrt(saa * sbb));
}

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = n(rng);
    return m;
}

} // namespace

TEST_CASE("canonical columns and groups") {
    const auto& names = canonical_feature_names();
    REQUIRE(names.size() == 22);
    CHECK(names[0] == "radius");
    CHECK(names[1] == "height");
    CHECK(feature_group("radius") == FeatureGroup::baseline);
    CHECK(feature_group("positive_mean") == FeatureGroup::curvature);
    CHECK(feature_group("entropy_0") == FeatureGroup::topological);
    CHECK_THROWS_AS(feature_group("colour"), DataError);
    const std::vector<FeatureGroup> curv{FeatureGroup::curvature};
    CHECK(feature_names_in(curv).size() == 8);
    const std::vector<FeatureGroup> all{FeatureGroup::topological, FeatureGroup::baseline, FeatureGroup::curvature};
    CHECK(feature_names_in(all) == names);
}

TEST_CASE("csv round trip is lossless") {
    const auto& names = canonical_feature_names();
    Eigen::MatrixXd values = gaussian(7, static_cast<Eigen::Index>(names.size()), 3);
    values(0, 0) = 1e-300;
    values(1, 1) = 0.1;
    values(2, 2) = -123456.789012345678;
    const auto t = table_with(names, values);

    std::ostringstream out;
    write_feature_csv(out, t);
    std::istringstream in(out.str());
    const auto back = read_feature_csv(in);
    CHECK(back.ids == t.ids);
    CHECK(back.participants == t.participants);
    CHECK(back.label_type == t.label_type);
    CHECK(back.label_gender == t.label_gender);
    CHECK(back.label_age_group == t.label_age_group);
    CHECK(back.feature_names == t.feature_names);
    CHECK(back.features == t.features);

    std::ostringstream again;
    write_feature_csv(again, back);
    CHECK(again.str() == out.str());
    CHECK(out.str().rfind("id,participant,label_type,label_gender,label_age_group,radius,height,", 0) == 0);
}

TEST_CASE("csv reader rejects unknown schemas") {
    auto read = [](const std::string& text, bool custom = false) {
        std::istringstream in(text);
        return read_feature_csv(in, custom);
    };
    CHECK_THROWS_AS(read(""), DataError);
    CHECK_THROWS_AS(read("id,participant,label_type,radius\n"), DataError);
    CHECK_THROWS_AS(read("id,participant,label_type,label_gender,label_age_group,colour\n"), DataError);
    CHECK_THROWS_AS(read("id,participant,label_type,label_gender,label_age_group,height,radius\n"), DataError);
    CHECK_THROWS_AS(read("id,participant,label_type,label_gender,label_age_group,radius\na,p,t,g,y,1,2\n"), DataError);
    CHECK_THROWS_AS(read("id,participant,label_type,label_gender,label_age_group,radius\na,p,t,g,y,abc\n"), DataError);
    CHECK_THROWS_AS(read("id,participant,label_type,label_gender,label_age_group,radius\na,p,t,g,y,nan\n"), DataError);

    try {
        read("id,participant,label_type,label_gender,label_age_group,colour\n");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("schema v1") != std::string::npos);
    }

    const auto custom = read("id,participant,label_type,label_gender,label_age_group,colour\na,p,t,g,y,2.5\n", true);
    CHECK(custom.features(0, 0) == 2.5);
    const auto filtered = read("id,participant,label_type,label_gender,label_age_group,height,entropy_1\na,p,t,g,y,1,2\n");
    CHECK(filtered.cols() == 2);
}

TEST_CASE("table invariants") {
    FeatureTable t;
    t.feature_names = {"radius", "height"};
    const std::vector<double> ok{1.0, 2.0}, short_row{1.0};
    t.append_row("a", "p", "none", "f", "young", ok);
    CHECK_THROWS_AS(t.append_row("b", "p", "none", "f", "young", short_row), DataError);
    t.validate();
    t.feature_names = {"radius", "radius"};
    CHECK_THROWS_AS(t.validate(), DataError);
    t.feature_names = {"radius", "height"};
    t.features(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(t.validate(), DataError);

    CHECK(t.labels("type") == t.label_type);
    CHECK(t.labels("participant") == t.participants);
    CHECK_THROWS_AS((void)t.labels("shoe_size"), DataError);
    CHECK_THROWS_AS((void)t.column("width"), DataError);
}

TEST_CASE("correlation filter") {
    const Eigen::Index n = 1000;
    const Eigen::MatrixXd g = gaussian(n, 4, 17);

    SUBCASE("duplicated column") {
        Eigen::MatrixXd m(n, 3);
        m << g.col(0), g.col(1), g.col(0);
        const auto r = correlation_filter(table_with({"a", "b", "c"}, m));
        CHECK(r.table.feature_names == std::vector<std::string>{"a", "b"});
        CHECK(r.dropped == std::vector<std::string>{"c"});
    }
    SUBCASE("independent columns") {
        Eigen::MatrixXd m(n, 2);
        m << g.col(0), g.col(1);
        REQUIRE(std::abs(correlation(m.col(0), m.col(1))) < 0.65);
        const auto r = correlation_filter(table_with({"a", "b"}, m));
        CHECK(r.table.cols() == 2);
        CHECK(r.dropped.empty());
    }
    SUBCASE("constructed linear mixes") {
        const Eigen::VectorXd x = g.col(0);
        const Eigen::VectorXd strong = 0.7 * x + std::sqrt(1 - 0.49) * g.col(1);
        const Eigen::VectorXd weak = 0.5 * x + std::sqrt(1 - 0.25) * g.col(2);
        REQUIRE(correlation(x, strong) > 0.65);
        REQUIRE(correlation(x, weak) < 0.65);
        REQUIRE(correlation(strong, weak) < 0.65);
        Eigen::MatrixXd m(n, 3);
        m << x, strong, weak;
        const auto r = correlation_filter(table_with({"x", "strong", "weak"}, m));
        CHECK(r.table.feature_names == std::vector<std::string>{"x", "weak"});
        CHECK(r.table.features.col(1) == weak);
        CHECK(pearson(x, strong) == doctest::Approx(correlation(x, strong)).epsilon(1e-12));
    }
    SUBCASE("earliest column wins") {
        Eigen::MatrixXd m(n, 2);
        m << -2.0 * g.col(3), g.col(3);
        const auto r = correlation_filter(table_with({"first", "second"}, m));
        CHECK(r.table.feature_names == std::vector<std::string>{"first"});
    }
    SUBCASE("constant column is kept with a warning") {
        Eigen::MatrixXd m(n, 2);
        m << g.col(0), Eigen::VectorXd::Constant(n, 4.0);
        const auto r = correlation_filter(table_with({"a", "flat"}, m));
        CHECK(r.table.cols() == 2);
        CHECK(r.warnings.size() == 1);
    }
    CHECK_THROWS_AS(correlation_filter(table_with({"a"}, Eigen::MatrixXd::Ones(1, 1))), DataError);
}

TEST_CASE("standardization") {
    SUBCASE("already standard column is unchanged") {
        Eigen::VectorXd v(4);
        v << -1, 1, -1, 1;
        const auto s = fit_standardization(v);
        CHECK((s.apply(v) - v).cwiseAbs().maxCoeff() <= 1e-9);
    }
    SUBCASE("constant column becomes zeros") {
        const Eigen::MatrixXd m = Eigen::MatrixXd::Constant(5, 2, 7.5);
        const auto s = fit_standardization(m);
        CHECK(s.scale == Eigen::VectorXd::Ones(2));
        CHECK(s.apply(m) == Eigen::MatrixXd::Zero(5, 2));
    }
    SUBCASE("only the fit rows are used") {
        // Rows 0-3 are the training part with mean 2 and population sd √1.25;
        // rows 4-5 sit far away and must not move the parameters.
        Eigen::VectorXd v(6);
        v << 0.5, 1.5, 2.5, 3.5, 100.0, 300.0;
        const std::vector<std::size_t> train{0, 1, 2, 3}, test{4, 5};
        const auto s = fit_standardization(v, train);
        CHECK(s.mean(0) == 2.0);
        CHECK(s.scale(0) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
        const auto z = s.apply(v);
        CHECK(z(4) == doctest::Approx(98.0 / std::sqrt(1.25)).epsilon(1e-12));
        CHECK(z(5) == doctest::Approx(298.0 / std::sqrt(1.25)).epsilon(1e-12));

        const auto swapped = fit_standardization(v, test);
        CHECK(swapped.mean(0) == 200.0);
        CHECK(swapped.scale(0) == 100.0);
        CHECK(swapped.apply(v)(4) != z(4));
        CHECK_THROWS_AS(fit_standardization(v, std::vector<std::size_t>{}), DataError);
    }
}
