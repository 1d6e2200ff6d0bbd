#include "papilla/evaluation.hpp"
#include "papilla/error.hpp"
#include "papilla/parallel.hpp"
#include "papilla/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

namespace papilla {

double balanced_accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& actual) {
    if (predicted.size() != actual.size())
        throw DataError("balanced accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                        std::to_string(actual.size()) + " labels");
    if (actual.empty()) throw DataError("balanced accuracy of an empty set");
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_class; // hits, total
    for (std::size_t i = 0; i < actual.size(); ++i) {
        auto& c = per_class[actual[i]];
        ++c.second;
        if (predicted[i] == actual[i]) ++c.first;
    }
    double sum = 0.0;
    for (const auto& [name, c] : per_class) sum += static_cast<double>(c.first) / static_cast<double>(c.second);
    return sum / static_cast<double>(per_class.size());
}

namespace {

struct FoldResult {
    bool used = false;
    double score = 0.0;
    std::vector<std::size_t> train, test;
    std::vector<std::string> predicted;
};

std::vector<std::string> sorted_classes(const std::vector<std::string>& y) {
    const std::set<std::string> s(y.begin(), y.end());
    return {s.begin(), s.end()};
}

bool covers(const std::vector<std::string>& y, const std::vector<std::size_t>& rows, std::size_t n_classes) {
    std::set<std::string> seen;
    for (auto r : rows) seen.insert(y[r]);
    return seen.size() == n_classes;
}

FoldResult run_fold(const FeatureTable& table, const std::vector<std::string>& y, std::vector<std::size_t> train,
                    std::vector<std::size_t> test, ModelConfig model, std::uint64_t seed) {
    FoldResult f;
    f.used = true;
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    Eigen::MatrixXd xtr(static_cast<Eigen::Index>(train.size()), table.features.cols());
    std::vector<std::string> ytr;
    for (std::size_t k = 0; k < train.size(); ++k) {
        xtr.row(static_cast<Eigen::Index>(k)) = table.features.row(static_cast<Eigen::Index>(train[k]));
        ytr.push_back(y[train[k]]);
    }
    Eigen::MatrixXd xte(static_cast<Eigen::Index>(test.size()), table.features.cols());
    std::vector<std::string> yte;
    for (std::size_t k = 0; k < test.size(); ++k) {
        xte.row(static_cast<Eigen::Index>(k)) = table.features.row(static_cast<Eigen::Index>(test[k]));
        yte.push_back(y[test[k]]);
    }
    model.rbf.seed = seed;
    const auto m = papilla::train(xtr, ytr, table.feature_names, model);
    f.predicted = m.predict(xte);
    f.score = balanced_accuracy(f.predicted, yte);
    f.train = std::move(train);
    f.test = std::move(test);
    return f;
}

EvalReport aggregate(std::string protocol, const std::string& label, const std::vector<std::string>& y,
                     const std::vector<FoldResult>& folds) {
    EvalReport r;
    r.protocol = std::move(protocol);
    r.label = label;
    r.classes = sorted_classes(y);
    const auto k = static_cast<Eigen::Index>(r.classes.size());
    r.confusion = Eigen::MatrixXi::Zero(k, k);
    auto class_index = [&](const std::string& c) {
        return static_cast<Eigen::Index>(std::lower_bound(r.classes.begin(), r.classes.end(), c) - r.classes.begin());
    };
    bool have_best = false;
    for (std::size_t i = 0; i < folds.size(); ++i) {
        const auto& f = folds[i];
        if (!f.used) continue;
        r.scores.push_back(f.score);
        for (std::size_t t = 0; t < f.test.size(); ++t) ++r.confusion(class_index(y[f.test[t]]), class_index(f.predicted[t]));
        if (!have_best || f.score > r.best_score) {
            have_best = true;
            r.best_index = i;
            r.best_score = f.score;
            r.best_train_rows = f.train;
            r.best_test_rows = f.test;
        }
    }
    std::sort(r.scores.begin(), r.scores.end());
    const double n = static_cast<double>(r.scores.size());
    r.mean = std::accumulate(r.scores.begin(), r.scores.end(), 0.0) / n;
    double ss = 0.0;
    for (double s : r.scores) ss += (s - r.mean) * (s - r.mean);
    r.stdev = r.scores.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return r;
}

} // namespace

EvalReport random_split_eval(const FeatureTable& table, const std::string& label, const SplitEvalConfig& cfg) {
    table.validate();
    const auto& y = table.labels(label);
    const std::size_t n = y.size();
    if (!(cfg.test_frac > 0.0 && cfg.test_frac < 1.0)) throw DataError("test fraction must lie in (0, 1)");
    if (cfg.repeats == 0) throw DataError("repeats must be at least 1");
    if (n < 2) throw DataError("random split needs at least 2 rows");
    const auto n_classes = sorted_classes(y).size();
    if (n_classes < 2) throw DataError("label '" + label + "' has a single class");
    const std::size_t n_test =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(cfg.test_frac * static_cast<double>(n))), 1, n - 1);

    // Splits are drawn up front so the folds can run in any order.
    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> splits(cfg.repeats);
    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
        auto rng = make_rng(derive_seed(derive_seed(cfg.seed, "split"), rep));
        std::vector<std::size_t> order(n);
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            shuffle(order.begin(), order.end(), rng);
            splits[rep].second.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
            splits[rep].first.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
            ok = covers(y, splits[rep].first, n_classes);
        }
        if (!ok) throw DataError("no split with every class in the training part after 100 attempts");
    }
    std::vector<FoldResult> folds(cfg.repeats);
    parallel_for(cfg.repeats, [&](std::size_t rep) {
        folds[rep] = run_fold(table, y, splits[rep].first, splits[rep].second, cfg.model,
                              derive_seed(derive_seed(cfg.seed, "model"), rep));
    });
    return aggregate("random-split", label, y, folds);
}

EvalReport logo_eval(const FeatureTable& table, const std::string& label, const std::string& group_col,
                     const ModelConfig& model, std::uint64_t seed) {
    table.validate();
    const auto& y = table.labels(label);
    const auto& g = table.labels(group_col);
    const auto groups = sorted_classes(g);
    if (groups.size() < 2) throw DataError("leave-one-group-out needs at least 2 groups in '" + group_col + "'");
    const auto n_classes = sorted_classes(y).size();
    if (n_classes < 2) throw DataError("label '" + label + "' has a single class");

    std::vector<FoldResult> folds(groups.size());
    std::vector<std::string> warnings(groups.size());
    parallel_for(groups.size(), [&](std::size_t k) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < y.size(); ++i) (g[i] == groups[k] ? test : train).push_back(i);
        if (!covers(y, train, n_classes)) {
            warnings[k] = "fold '" + groups[k] + "' skipped: training rows miss a class";
            return;
        }
        folds[k] = run_fold(table, y, std::move(train), std::move(test), model, derive_seed(seed, groups[k]));
    });
    if (std::none_of(folds.begin(), folds.end(), [](const FoldResult& f) { return f.used; }))
        throw DataError("every leave-one-group-out fold was skipped");
    auto report = aggregate("logo", label, y, folds);
    for (auto& w : warnings)
        if (!w.empty()) report.warnings.push_back(std::move(w));
    return report;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["protocol"] = r.protocol;
    j["label"] = r.label;
    j["balanced_accuracy_mean"] = r.mean;
    j["balanced_accuracy_stdev"] = r.stdev;
    j["scores"] = r.scores;
    j["classes"] = r.classes;
    nlohmann::ordered_json conf = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
        std::vector<int> row(static_cast<std::size_t>(r.confusion.cols()));
        for (Eigen::Index c = 0; c < r.confusion.cols(); ++c) row[static_cast<std::size_t>(c)] = r.confusion(i, c);
        conf.push_back(row);
    }
    j["confusion"] = conf;
    j["best"] = {{"index", r.best_index}, {"score", r.best_score}, {"test_rows", r.best_test_rows}};
    j["warnings"] = r.warnings;
    return j;
}

std::vector<FeatureImportance> permutation_importance(const ClassifierModel& model, const FeatureTable& table,
                                                      const std::string& label, std::size_t n_perm,
                                                      std::uint64_t seed) {
    if (table.feature_names != model.feature_names)
        throw DataError("permutation importance: table columns do not match the model features");
    if (n_perm == 0) throw DataError("permutation importance needs at least one permutation");
    const auto& y = table.labels(label);
    const double base = balanced_accuracy(model.predict(table.features), y);
    const auto d = table.feature_names.size();
    std::vector<FeatureImportance> out(d);
    parallel_for(d, [&](std::size_t f) {
        auto rng = make_rng(derive_seed(seed, table.feature_names[f]));
        Eigen::MatrixXd x = table.features;
        const Eigen::VectorXd original = x.col(static_cast<Eigen::Index>(f));
        std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
        std::vector<double> drops;
        for (std::size_t p = 0; p < n_perm; ++p) {
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            shuffle(order.begin(), order.end(), rng);
            for (std::size_t i = 0; i < order.size(); ++i)
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = original(order[i]);
            drops.push_back(base - balanced_accuracy(model.predict(x), y));
        }
        const double mean = std::accumulate(drops.begin(), drops.end(), 0.0) / static_cast<double>(n_perm);
        double ss = 0.0;
        for (double v : drops) ss += (v - mean) * (v - mean);
        out[f] = {table.feature_names[f], mean, n_perm > 1 ? std::sqrt(ss / static_cast<double>(n_perm - 1)) : 0.0};
    });
    std::stable_sort(out.begin(), out.end(),
                     [](const FeatureImportance& a, const FeatureImportance& b) { return a.importance > b.importance; });
    return out;
}

void write_importance_csv(std::ostream& out, const std::vector<FeatureImportance>& ranking) {
    out << "rank,feature,importance,stdev\n";
    out.precision(17);
    for (std::size_t i = 0; i < ranking.size(); ++i)
        out << i + 1 << ',' << ranking[i].feature << ',' << ranking[i].importance << ',' << ranking[i].stdev << '\n';
}

PcaResult pca_project(const Eigen::MatrixXd& x, std::size_t dims) {
    const auto d = static_cast<std::size_t>(x.cols());
    if (dims == 0 || dims > d)
        throw DataError("PCA dimension " + std::to_string(dims) + " outside 1.." + std::to_string(d));
    if (static_cast<std::size_t>(x.rows()) < dims) throw DataError("PCA needs at least as many rows as dimensions");
    if (!x.allFinite()) throw DataError("PCA input contains non-finite values");
    const Eigen::MatrixXd z = fit_standardization(x).apply(x);
    const double denom = x.rows() > 1 ? static_cast<double>(x.rows() - 1) : 1.0;
    const Eigen::MatrixXd cov = (z.transpose() * z) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("PCA eigen-decomposition failed");

    PcaResult r;
    const auto k = static_cast<Eigen::Index>(dims);
    r.components.resize(cov.rows(), k);
    r.explained_variance.resize(k);
    const double total = std::max(0.0, solver.eigenvalues().sum());
    for (Eigen::Index c = 0; c < k; ++c) {
        const Eigen::Index src = cov.rows() - 1 - c; // eigenvalues ascend
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index lead = 0;
        v.cwiseAbs().maxCoeff(&lead);
        if (v(lead) < 0.0) v = -v;
        r.components.col(c) = v;
        const double lambda = std::max(0.0, solver.eigenvalues()(src));
        r.explained_variance(c) = total > 0.0 ? lambda / total : 0.0;
    }
    r.coordinates = z * r.components;
    return r;
}

PcaResult pca_project(const FeatureTable& table, std::size_t dims) { return pca_project(table.features, dims); }

} // namespace papilla
