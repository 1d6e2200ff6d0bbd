#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace papilla {

inline constexpr int kFeatureTableVersion = 1;

enum class FeatureGroup { baseline, curvature, topological };

/// Canonical feature columns: 2 baseline, 8 curvature, 12 topological.
const std::vector<std::string>& canonical_feature_names();
FeatureGroup feature_group(std::string_view name);
std::vector<std::string> feature_names_in(std::span<const FeatureGroup> groups);

/// Per-segment feature rows plus label metadata. The feature matrix has one
/// row per segment and one column per entry of `feature_names`.
struct FeatureTable {
    std::vector<std::string> ids;
    std::vector<std::string> participants;
    std::vector<std::string> label_type;
    std::vector<std::string> label_gender;
    std::vector<std::string> label_age_group;
    std::vector<std::string> feature_names;
    Eigen::MatrixXd features;

    [[nodiscard]] std::size_t rows() const { return ids.size(); }
    [[nodiscard]] std::size_t cols() const { return feature_names.size(); }

    /// Label column by name: type, gender, age_group or participant.
    [[nodiscard]] const std::vector<std::string>& labels(std::string_view name) const;
    [[nodiscard]] std::size_t column(std::string_view name) const;

    void append_row(std::string id, std::string participant, std::string type, std::string gender,
                    std::string age_group, std::span<const double> values);

    /// Keeps the named feature columns, in the order given.
    [[nodiscard]] FeatureTable select_features(std::span<const std::string> names) const;
    [[nodiscard]] FeatureTable select_rows(std::span<const std::size_t> rows) const;

    /// Throws DataError on arity mismatch, duplicate names or non-finite values.
    void validate() const;
};

/// Header: id,participant,label_type,label_gender,label_age_group then the
/// feature columns. Values use 17 significant digits.
void write_feature_csv(std::ostream& out, const FeatureTable& table);
void save_feature_csv(const std::filesystem::path& path, const FeatureTable& table);

/// Accepts canonical feature columns in canonical relative order, so filtered
/// tables round-trip. When `allow_custom_columns` is false, unknown columns are
/// rejected with a schema-version error.
FeatureTable read_feature_csv(std::istream& in, bool allow_custom_columns = false);
FeatureTable load_feature_csv(const std::filesystem::path& path, bool allow_custom_columns = false);

struct CorrelationFilterResult {
    FeatureTable table;
    std::vector<std::string> dropped;
    std::vector<std::string> warnings;
};

/// Walks the columns in order and drops any whose |Pearson r| with an already
/// kept column exceeds `threshold`. Zero-variance columns count as uncorrelated
/// and are kept with a warning.
CorrelationFilterResult correlation_filter(const FeatureTable& table, double threshold = 0.65);

double pearson(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale; // 1 where the fit rows have zero spread

    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

/// Mean and population standard deviation from `fit_rows` only.
Standardization fit_standardization(const Eigen::MatrixXd& x, std::span<const std::size_t> fit_rows);
Standardization fit_standardization(const Eigen::MatrixXd& x);

} // namespace papilla
