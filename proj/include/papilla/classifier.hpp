#pragma once

#include "papilla/feature_table.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace papilla {

enum class ModelKind { logistic, rbf };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct LogisticConfig {
    double l2_lambda = 1.0;
    int max_iter = 1000;
    double tol = 1e-6;
};

struct RbfConfig {
    double C = 1.0;
    /// Kernel width; unset means 1 / (d * mean feature variance) on the standardized training data.
    std::optional<double> gamma;
    int max_iter = 1000; // coordinate-descent epochs
    double tol = 1e-3;
    std::uint64_t seed = 0;
};

struct ModelConfig {
    ModelKind kind = ModelKind::rbf;
    LogisticConfig logistic;
    RbfConfig rbf;
};

struct ClassifierModel {
    ModelKind kind = ModelKind::logistic;
    std::vector<std::string> classes;
    std::vector<std::string> feature_names;
    Standardization standardization;

    // Logistic: one row per class, columns = features followed by the intercept.
    Eigen::MatrixXd weights;

    // Kernel model: decision_k(x) = Σ_i coef(k, i) * (exp(-γ|x - sv_i|²) + 1).
    Eigen::MatrixXd support_vectors; // standardized rows
    Eigen::MatrixXd dual_coef;       // classes x support vectors
    double gamma = 0.0;

    // Training loss per iteration (logistic only).
    std::vector<double> loss_trace;
    bool converged = false;

    /// Per-class scores for raw (unstandardized) feature rows.
    [[nodiscard]] Eigen::MatrixXd decision_function(const Eigen::MatrixXd& raw) const;
    [[nodiscard]] std::vector<std::string> predict(const Eigen::MatrixXd& raw) const;
    [[nodiscard]] std::vector<std::string> predict(const FeatureTable& table) const;
};

/// Multinomial logistic regression: L2-regularised negative log-likelihood
/// minimised by full-batch gradient descent with a backtracking step, so the
/// recorded loss never increases. Throws DataError for a single class or
/// non-finite features.
ClassifierModel train_logistic(const Eigen::MatrixXd& x, const std::vector<std::string>& y,
                               const std::vector<std::string>& feature_names, const LogisticConfig& cfg = {});

/// One-vs-rest kernel machine with hinge loss, solved by dual coordinate descent
/// over a seeded permutation; the bias is folded into the kernel as +1.
ClassifierModel train_rbf(const Eigen::MatrixXd& x, const std::vector<std::string>& y,
                          const std::vector<std::string>& feature_names, const RbfConfig& cfg = {});

ClassifierModel train(const Eigen::MatrixXd& x, const std::vector<std::string>& y,
                      const std::vector<std::string>& feature_names, const ModelConfig& cfg);
ClassifierModel train(const FeatureTable& table, const std::string& label, const ModelConfig& cfg);

inline constexpr int kModelSchemaVersion = 1;
nlohmann::ordered_json to_json(const ClassifierModel& model);
ClassifierModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const ClassifierModel& model);
ClassifierModel load_model(const std::filesystem::path& path);

} // namespace papilla
