#include "papilla/classifier.hpp"
#include "papilla/error.hpp"
#include "papilla/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace papilla {

namespace {

struct EncodedLabels {
    std::vector<std::string> classes;
    std::vector<int> index;
};

EncodedLabels encode(const std::vector<std::string>& y) {
    EncodedLabels e;
    const std::set<std::string> unique(y.begin(), y.end());
    e.classes.assign(unique.begin(), unique.end());
    e.index.reserve(y.size());
    for (const auto& label : y)
        e.index.push_back(static_cast<int>(std::lower_bound(e.classes.begin(), e.classes.end(), label) - e.classes.begin()));
    return e;
}

void check_inputs(const Eigen::MatrixXd& x, const std::vector<std::string>& y,
                  const std::vector<std::string>& feature_names) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("feature rows and labels differ in length");
    if (static_cast<std::size_t>(x.cols()) != feature_names.size())
        throw DataError("feature matrix width does not match the feature names");
    if (x.rows() == 0) throw DataError("cannot train on an empty table");
    if (!x.allFinite()) throw DataError("training features contain non-finite values");
    const std::set<std::string> unique(y.begin(), y.end());
    if (unique.size() < 2) throw DataError("training data holds a single class; at least 2 are required");
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& z) {
    Eigen::MatrixXd a(z.rows(), z.cols() + 1);
    a.leftCols(z.cols()) = z;
    a.col(z.cols()).setOnes();
    return a;
}

// Softmax negative log-likelihood plus the ridge term on non-intercept weights.
double logistic_loss(const Eigen::MatrixXd& a, const std::vector<int>& y, const Eigen::MatrixXd& w, double lambda,
                     Eigen::MatrixXd* grad) {
    const Eigen::MatrixXd scores = a * w.transpose(); // n x K
    double loss = 0.0;
    Eigen::MatrixXd residual(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double m = scores.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (scores.row(i).array() - m).exp();
        const double z = e.sum();
        loss += m + std::log(z) - scores(i, y[static_cast<std::size_t>(i)]);
        residual.row(i) = e / z;
        residual(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    }
    const auto d = w.cols() - 1;
    loss += 0.5 * lambda * w.leftCols(d).squaredNorm();
    if (grad) {
        *grad = residual.transpose() * a;
        grad->leftCols(d) += lambda * w.leftCols(d);
    }
    return loss;
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
    const Eigen::VectorXd an = a.rowwise().squaredNorm();
    const Eigen::VectorXd bn = b.rowwise().squaredNorm();
    Eigen::MatrixXd k = -2.0 * a * b.transpose();
    k.colwise() += an;
    k.rowwise() += bn.transpose();
    return (-gamma * k.array().max(0.0)).exp();
}

} // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::logistic ? "logistic" : "rbf"; }

ModelKind parse_model_kind(const std::string& text) {
    if (text == "logistic" || text == "lr") return ModelKind::logistic;
    if (text == "rbf" || text == "svm") return ModelKind::rbf;
    throw DataError("unknown classifier '" + text + "' (expected logistic or rbf)");
}

ClassifierModel train_logistic(const Eigen::MatrixXd& x, const std::vector<std::string>& y,
                               const std::vector<std::string>& feature_names, const LogisticConfig& cfg) {
    check_inputs(x, y, feature_names);
    const auto labels = encode(y);
    ClassifierModel model;
    model.kind = ModelKind::logistic;
    model.classes = labels.classes;
    model.feature_names = feature_names;
    model.standardization = fit_standardization(x);

    const Eigen::MatrixXd a = with_intercept(model.standardization.apply(x));
    const auto k = static_cast<Eigen::Index>(labels.classes.size());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, a.cols());
    Eigen::MatrixXd grad;
    double loss = logistic_loss(a, labels.index, w, cfg.l2_lambda, &grad);
    model.loss_trace.push_back(loss);

    // Step bound from the softmax Hessian: 0.5 |A|_F^2 + lambda.
    double step = 1.0 / (0.5 * a.squaredNorm() + cfg.l2_lambda);
    for (int it = 0; it < cfg.max_iter; ++it) {
        const double gnorm2 = grad.squaredNorm();
        if (std::sqrt(gnorm2) <= cfg.tol * static_cast<double>(x.rows())) {
            model.converged = true;
            break;
        }
        Eigen::MatrixXd next_grad;
        double next_loss = 0.0;
        Eigen::MatrixXd candidate;
        while (true) {
            candidate = w - step * grad;
            next_loss = logistic_loss(a, labels.index, candidate, cfg.l2_lambda, &next_grad);
            if (next_loss <= loss - 0.5 * step * gnorm2 || step < 1e-300) break;
            step *= 0.5;
        }
        if (next_loss > loss) break; // no descent possible at machine precision
        const double change = loss - next_loss;
        w = std::move(candidate);
        grad = std::move(next_grad);
        loss = next_loss;
        model.loss_trace.push_back(loss);
        step *= 2.0;
        if (change <= cfg.tol * std::max(1.0, std::abs(loss))) {
            model.converged = true;
            break;
        }
    }
    model.weights = w;
    return model;
}

ClassifierModel train_rbf(const Eigen::MatrixXd& x, const std::vector<std::string>& y,
                          const std::vector<std::string>& feature_names, const RbfConfig& cfg) {
    check_inputs(x, y, feature_names);
    if (!(cfg.C > 0.0)) throw DataError("RBF C must be positive");
    const auto labels = encode(y);
    ClassifierModel model;
    model.kind = ModelKind::rbf;
    model.classes = labels.classes;
    model.feature_names = feature_names;
    model.standardization = fit_standardization(x);
    const Eigen::MatrixXd z = model.standardization.apply(x);
    const auto n = z.rows();

    if (cfg.gamma) {
        model.gamma = *cfg.gamma;
    } else {
        const double mean_var = ((z.rowwise() - z.colwise().mean()).array().square().colwise().sum() /
                                 static_cast<double>(n)).mean();
        model.gamma = mean_var > 0.0 ? 1.0 / (static_cast<double>(z.cols()) * mean_var) : 1.0;
    }
    if (!(model.gamma > 0.0)) throw DataError("RBF gamma must be positive");

    const Eigen::MatrixXd kernel = (rbf_kernel(z, z, model.gamma).array() + 1.0).matrix();
    const auto n_classes = static_cast<Eigen::Index>(labels.classes.size());
    model.support_vectors = z;
    model.dual_coef = Eigen::MatrixXd::Zero(n_classes, n);
    model.converged = true;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index c = 0; c < n_classes; ++c) {
        Eigen::VectorXd sign(n);
        for (Eigen::Index i = 0; i < n; ++i) sign(i) = labels.index[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd f = Eigen::VectorXd::Zero(n); // Σ_j α_j y_j K(:, j)
        auto rng = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(c)));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        bool done = false;
        for (int epoch = 0; epoch < cfg.max_iter && !done; ++epoch) {
            shuffle(order.begin(), order.end(), rng);
            double worst = 0.0;
            for (auto i : order) {
                const double g = sign(i) * f(i) - 1.0;
                double pg = g;
                if (alpha(i) <= 0.0) pg = std::min(g, 0.0);
                else if (alpha(i) >= cfg.C) pg = std::max(g, 0.0);
                worst = std::max(worst, std::abs(pg));
                if (pg == 0.0) continue;
                const double updated = std::clamp(alpha(i) - g / kernel(i, i), 0.0, cfg.C);
                const double delta = updated - alpha(i);
                if (delta == 0.0) continue;
                alpha(i) = updated;
                f += (delta * sign(i)) * kernel.col(i);
            }
            done = worst < cfg.tol;
        }
        if (!done) model.converged = false;
        model.dual_coef.row(c) = (alpha.array() * sign.array()).transpose();
    }
    return model;
}

ClassifierModel train(const Eigen::MatrixXd& x, const std::vector<std::string>& y,
                      const std::vector<std::string>& feature_names, const ModelConfig& cfg) {
    return cfg.kind == ModelKind::logistic ? train_logistic(x, y, feature_names, cfg.logistic)
                                           : train_rbf(x, y, feature_names, cfg.rbf);
}

ClassifierModel train(const FeatureTable& table, const std::string& label, const ModelConfig& cfg) {
    return train(table.features, table.labels(label), table.feature_names, cfg);
}

Eigen::MatrixXd ClassifierModel::decision_function(const Eigen::MatrixXd& raw) const {
    if (static_cast<std::size_t>(raw.cols()) != feature_names.size())
        throw DataError("input has " + std::to_string(raw.cols()) + " features, model expects " +
                        std::to_string(feature_names.size()));
    const Eigen::MatrixXd z = standardization.apply(raw);
    if (kind == ModelKind::logistic) return with_intercept(z) * weights.transpose();
    const Eigen::MatrixXd k = (rbf_kernel(z, support_vectors, gamma).array() + 1.0).matrix();
    return k * dual_coef.transpose();
}

std::vector<std::string> ClassifierModel::predict(const Eigen::MatrixXd& raw) const {
    const auto scores = decision_function(raw);
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        scores.row(i).maxCoeff(&best);
        out.push_back(classes[static_cast<std::size_t>(best)]);
    }
    return out;
}

std::vector<std::string> ClassifierModel::predict(const FeatureTable& table) const {
    if (table.feature_names != feature_names) throw DataError("feature table columns do not match the model");
    return predict(table.features);
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd json_matrix(const nlohmann::json& j, Eigen::Index cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols) throw DataError("model matrix row has the wrong width");
        for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = j[r][static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vector(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

nlohmann::ordered_json to_json(const ClassifierModel& m) {
    nlohmann::ordered_json j;
    j["schema_version"] = kModelSchemaVersion;
    j["kind"] = to_string(m.kind);
    j["classes"] = m.classes;
    j["feature_names"] = m.feature_names;
    j["standardization"] = {{"mean", vector_json(m.standardization.mean)},
                            {"scale", vector_json(m.standardization.scale)}};
    j["converged"] = m.converged;
    if (m.kind == ModelKind::logistic) {
        j["weights"] = matrix_json(m.weights);
    } else {
        j["gamma"] = m.gamma;
        j["support_vectors"] = matrix_json(m.support_vectors);
        j["dual_coef"] = matrix_json(m.dual_coef);
    }
    return j;
}

ClassifierModel model_from_json(const nlohmann::json& j) {
    ClassifierModel m;
    try {
        const int version = j.at("schema_version").get<int>();
        if (version != kModelSchemaVersion)
            throw DataError("model schema version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kModelSchemaVersion) + ")");
        m.kind = parse_model_kind(j.at("kind").get<std::string>());
        m.classes = j.at("classes").get<std::vector<std::string>>();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.standardization.mean = json_vector(j.at("standardization").at("mean"));
        m.standardization.scale = json_vector(j.at("standardization").at("scale"));
        m.converged = j.value("converged", false);
        const auto d = static_cast<Eigen::Index>(m.feature_names.size());
        if (m.kind == ModelKind::logistic) {
            m.weights = json_matrix(j.at("weights"), d + 1);
        } else {
            m.gamma = j.at("gamma").get<double>();
            m.support_vectors = json_matrix(j.at("support_vectors"), d);
            m.dual_coef = json_matrix(j.at("dual_coef"), m.support_vectors.rows());
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
    if (m.classes.size() < 2) throw DataError("model must have at least 2 classes");
    return m;
}

void save_model(const std::filesystem::path& path, const ClassifierModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json(model).dump(1) << '\n';
}

ClassifierModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return model_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

} // namespace papilla
