#include "papilla/feature_table.hpp"
#include "papilla/error.hpp"
#include "papilla/vectorize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace papilla {

namespace {

const std::vector<std::string> kMetaColumns{"id", "participant", "label_type", "label_gender", "label_age_group"};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void check_field(const std::string& value, const char* what) {
    if (value.find_first_of(",\n\r\"") != std::string::npos)
        throw DataError(std::string("feature table ") + what + " '" + value + "' contains a reserved character");
}

std::string schema_error(const std::string& detail) {
    return "feature table schema v" + std::to_string(kFeatureTableVersion) + ": " + detail;
}

} // namespace

const std::vector<std::string>& canonical_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n{"radius",        "height",         "min_gaussian",      "max_gaussian",
                                   "min_mean",      "max_mean",       "ratio_gaussian",    "ratio_mean",
                                   "positive_gaussian", "positive_mean"};
        for (auto t : TopoFeatures::names()) n.emplace_back(t);
        return n;
    }();
    return names;
}

FeatureGroup feature_group(std::string_view name) {
    const auto& all = canonical_feature_names();
    const auto it = std::find(all.begin(), all.end(), name);
    if (it == all.end()) throw DataError("unknown feature '" + std::string(name) + "'");
    const auto pos = it - all.begin();
    if (pos < 2) return FeatureGroup::baseline;
    if (pos < 10) return FeatureGroup::curvature;
    return FeatureGroup::topological;
}

std::vector<std::string> feature_names_in(std::span<const FeatureGroup> groups) {
    std::vector<std::string> out;
    for (const auto& name : canonical_feature_names())
        if (std::find(groups.begin(), groups.end(), feature_group(name)) != groups.end()) out.push_back(name);
    return out;
}

const std::vector<std::string>& FeatureTable::labels(std::string_view name) const {
    if (name == "type") return label_type;
    if (name == "gender") return label_gender;
    if (name == "age_group" || name == "age") return label_age_group;
    if (name == "participant") return participants;
    throw DataError("unknown label column '" + std::string(name) + "' (expected type, gender, age_group or participant)");
}

std::size_t FeatureTable::column(std::string_view name) const {
    const auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) throw DataError("feature table has no column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - feature_names.begin());
}

void FeatureTable::append_row(std::string id, std::string participant, std::string type, std::string gender,
                              std::string age_group, std::span<const double> values) {
    if (values.size() != feature_names.size())
        throw DataError("row '" + id + "' has " + std::to_string(values.size()) + " values for " +
                        std::to_string(feature_names.size()) + " feature columns");
    const auto r = features.rows();
    features.conservativeResize(r + 1, static_cast<Eigen::Index>(feature_names.size()));
    for (std::size_t c = 0; c < values.size(); ++c) features(r, static_cast<Eigen::Index>(c)) = values[c];
    ids.push_back(std::move(id));
    participants.push_back(std::move(participant));
    label_type.push_back(std::move(type));
    label_gender.push_back(std::move(gender));
    label_age_group.push_back(std::move(age_group));
}

FeatureTable FeatureTable::select_features(std::span<const std::string> names) const {
    FeatureTable out = *this;
    out.feature_names.assign(names.begin(), names.end());
    out.features.resize(features.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t c = 0; c < names.size(); ++c)
        out.features.col(static_cast<Eigen::Index>(c)) = features.col(static_cast<Eigen::Index>(column(names[c])));
    return out;
}

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> rows) const {
    FeatureTable out;
    out.feature_names = feature_names;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto r = rows[k];
        out.features.row(static_cast<Eigen::Index>(k)) = features.row(static_cast<Eigen::Index>(r));
        out.ids.push_back(ids[r]);
        out.participants.push_back(participants[r]);
        out.label_type.push_back(label_type[r]);
        out.label_gender.push_back(label_gender[r]);
        out.label_age_group.push_back(label_age_group[r]);
    }
    return out;
}

void FeatureTable::validate() const {
    const auto n = ids.size();
    if (participants.size() != n || label_type.size() != n || label_gender.size() != n ||
        label_age_group.size() != n || static_cast<std::size_t>(features.rows()) != n)
        throw DataError("feature table rows have inconsistent arity");
    if (static_cast<std::size_t>(features.cols()) != feature_names.size())
        throw DataError("feature table column count does not match its header");
    std::set<std::string> seen;
    for (const auto& name : feature_names)
        if (!seen.insert(name).second) throw DataError("duplicate feature column '" + name + "'");
    if (!features.allFinite()) throw DataError("feature table contains non-finite values");
}

void write_feature_csv(std::ostream& out, const FeatureTable& table) {
    table.validate();
    for (std::size_t c = 0; c < kMetaColumns.size(); ++c) out << (c ? "," : "") << kMetaColumns[c];
    for (const auto& name : table.feature_names) {
        check_field(name, "column");
        out << ',' << name;
    }
    out << '\n';
    char buf[40];
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (const auto* field : {&table.ids[r], &table.participants[r], &table.label_type[r], &table.label_gender[r],
                                  &table.label_age_group[r]})
            check_field(*field, "value");
        out << table.ids[r] << ',' << table.participants[r] << ',' << table.label_type[r] << ','
            << table.label_gender[r] << ',' << table.label_age_group[r];
        for (Eigen::Index c = 0; c < table.features.cols(); ++c) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), table.features(static_cast<Eigen::Index>(r), c),
                                           std::chars_format::general, 17);
            out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
        }
        out << '\n';
    }
}

void save_feature_csv(const std::filesystem::path& path, const FeatureTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_feature_csv(out, table);
}

FeatureTable read_feature_csv(std::istream& in, bool allow_custom_columns) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(schema_error("empty file"));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv(line);
    if (header.size() < kMetaColumns.size() || !std::equal(kMetaColumns.begin(), kMetaColumns.end(), header.begin()))
        throw DataError(schema_error("header must start with id,participant,label_type,label_gender,label_age_group"));

    FeatureTable table;
    table.feature_names.assign(header.begin() + static_cast<std::ptrdiff_t>(kMetaColumns.size()), header.end());
    if (!allow_custom_columns) {
        const auto& canon = canonical_feature_names();
        std::ptrdiff_t last = -1;
        for (const auto& name : table.feature_names) {
            const auto it = std::find(canon.begin(), canon.end(), name);
            if (it == canon.end()) throw DataError(schema_error("unknown column '" + name + "'"));
            if (it - canon.begin() <= last) throw DataError(schema_error("column '" + name + "' out of canonical order"));
            last = it - canon.begin();
        }
    }

    std::vector<double> values(table.feature_names.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw DataError("feature table line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        for (std::size_t c = 0; c < values.size(); ++c) {
            const auto& tok = fields[kMetaColumns.size() + c];
            const auto* end = tok.data() + tok.size();
            auto [ptr, ec] = std::from_chars(tok.data(), end, values[c]);
            if (ec != std::errc{} || ptr != end)
                throw DataError("feature table line " + std::to_string(line_no) + ": cannot parse '" + tok + "'");
        }
        table.append_row(fields[0], fields[1], fields[2], fields[3], fields[4], values);
    }
    table.features.conservativeResize(static_cast<Eigen::Index>(table.rows()),
                                      static_cast<Eigen::Index>(table.feature_names.size()));
    table.validate();
    return table;
}

FeatureTable load_feature_csv(const std::filesystem::path& path, bool allow_custom_columns) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_feature_csv(in, allow_custom_columns);
}

double pearson(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
    const Eigen::VectorXd da = a.array() - a.mean();
    const Eigen::VectorXd db = b.array() - b.mean();
    const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
    if (!(denom > 0.0)) return 0.0;
    return da.dot(db) / denom;
}

CorrelationFilterResult correlation_filter(const FeatureTable& table, double threshold) {
    if (table.rows() < 2) throw DataError("correlation filter needs at least 2 rows");
    CorrelationFilterResult result;
    std::vector<std::string> kept;
    std::vector<Eigen::Index> kept_cols;
    for (std::size_t c = 0; c < table.cols(); ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        const auto x = table.features.col(col);
        if ((x.array() == x(0)).all())
            result.warnings.push_back("column '" + table.feature_names[c] + "' has zero variance; kept");
        bool drop = false;
        for (auto k : kept_cols)
            if (std::abs(pearson(x, table.features.col(k))) > threshold) {
                drop = true;
                break;
            }
        if (drop) {
            result.dropped.push_back(table.feature_names[c]);
            continue;
        }
        kept.push_back(table.feature_names[c]);
        kept_cols.push_back(col);
    }
    result.table = table.select_features(kept);
    return result;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size()) throw DataError("standardization width does not match the feature matrix");
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Standardization fit_standardization(const Eigen::MatrixXd& x, std::span<const std::size_t> fit_rows) {
    if (fit_rows.empty()) throw DataError("standardization needs at least one fit row");
    const auto d = x.cols();
    Standardization s;
    s.mean = Eigen::VectorXd::Zero(d);
    s.scale = Eigen::VectorXd::Ones(d);
    for (auto r : fit_rows) s.mean += x.row(static_cast<Eigen::Index>(r)).transpose();
    s.mean /= static_cast<double>(fit_rows.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
    for (auto r : fit_rows) var += (x.row(static_cast<Eigen::Index>(r)).transpose() - s.mean).array().square().matrix();
    var /= static_cast<double>(fit_rows.size());
    for (Eigen::Index c = 0; c < d; ++c) {
        const double sd = std::sqrt(var(c));
        s.scale(c) = sd > 1e-12 * (1.0 + std::abs(s.mean(c))) ? sd : 1.0;
    }
    return s;
}

Standardization fit_standardization(const Eigen::MatrixXd& x) {
    std::vector<std::size_t> rows(static_cast<std::size_t>(x.rows()));
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    return fit_standardization(x, rows);
}

} // namespace papilla
