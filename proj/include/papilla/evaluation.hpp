#pragma once

#include "papilla/classifier.hpp"
#include "papilla/feature_table.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace papilla {

/// Unweighted mean of per-class recall over the classes present in `actual`.
double balanced_accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& actual);

struct EvalReport {
    std::string protocol; // "random-split" or "logo"
    std::string label;
    double mean = 0.0;
    double stdev = 0.0;          // sample standard deviation over repeats/folds
    std::vector<double> scores;  // sorted ascending
    std::vector<std::string> classes;
    Eigen::MatrixXi confusion;   // rows actual, columns predicted, summed over repeats
    std::vector<std::string> warnings;

    // Highest-scoring repeat or fold (lowest index on ties) and its held-out rows.
    std::size_t best_index = 0;
    double best_score = 0.0;
    std::vector<std::size_t> best_train_rows;
    std::vector<std::size_t> best_test_rows;
};

struct SplitEvalConfig {
    double test_frac = 0.2;
    std::size_t repeats = 50;
    std::uint64_t seed = 0;
    ModelConfig model;
};

/// Repeated uniform random splits. A split whose training part misses a class
/// is redrawn (up to 100 times) before DataError is thrown.
EvalReport random_split_eval(const FeatureTable& table, const std::string& label, const SplitEvalConfig& cfg);

/// One fold per distinct value of `group_col`. Folds whose training rows miss a
/// class are skipped with a warning. Throws DataError for fewer than 2 groups.
EvalReport logo_eval(const FeatureTable& table, const std::string& label, const std::string& group_col,
                     const ModelConfig& model, std::uint64_t seed = 0);

nlohmann::ordered_json to_json(const EvalReport& report);

struct FeatureImportance {
    std::string feature;
    double importance = 0.0; // base score minus mean permuted score
    double stdev = 0.0;
};

/// Drop in balanced accuracy when one column of `table` is shuffled, averaged
/// over n_perm seeded permutations; sorted by importance, descending.
std::vector<FeatureImportance> permutation_importance(const ClassifierModel& model, const FeatureTable& table,
                                                      const std::string& label, std::size_t n_perm = 30,
                                                      std::uint64_t seed = 0);
void write_importance_csv(std::ostream& out, const std::vector<FeatureImportance>& ranking);

struct PcaResult {
    Eigen::MatrixXd coordinates;       // rows x dims
    Eigen::MatrixXd components;        // features x dims, unit columns
    Eigen::VectorXd explained_variance; // fraction of total variance per component
};

/// PCA of the standardized columns. Each component is oriented so that its
/// largest-magnitude loading is positive.
PcaResult pca_project(const Eigen::MatrixXd& x, std::size_t dims = 2);
PcaResult pca_project(const FeatureTable& table, std::size_t dims = 2);

} // namespace papilla
