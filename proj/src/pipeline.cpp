#include "papilla/pipeline.hpp"
#include "papilla/error.hpp"
#include "papilla/parallel.hpp"
#include "papilla/random.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace papilla {

namespace {

bool wants(const std::vector<std::string>& columns, FeatureGroup group) {
    return std::any_of(columns.begin(), columns.end(),
                       [&](const std::string& c) { return feature_group(c) == group; });
}

std::string attr(const Segment& s, const std::string& key) {
    const auto it = s.group_attrs.find(key);
    return it == s.group_attrs.end() || it->second.empty() ? "unknown" : it->second;
}

} // namespace

std::vector<double> segment_features(const Segment& segment, const FeaturizeConfig& cfg) {
    std::vector<std::pair<std::string, double>> values;
    if (wants(cfg.columns, FeatureGroup::baseline)) {
        const double radius = radius_feature(segment);
        RansacConfig rc = cfg.height_ransac;
        rc.seed = derive_seed(derive_seed(cfg.seed, segment.id), "height");
        values.emplace_back("radius", radius);
        values.emplace_back("height", height_feature(segment, radius, rc));
    }
    if (wants(cfg.columns, FeatureGroup::curvature)) {
        const auto field = compute_curvature(segment.mesh, CurvatureOptions{segment.up});
        const auto f = curvature_features(field, cfg.zero_tol);
        values.insert(values.end(), {{"min_gaussian", f.min_gaussian},
                                     {"max_gaussian", f.max_gaussian},
                                     {"min_mean", f.min_mean},
                                     {"max_mean", f.max_mean},
                                     {"ratio_gaussian", f.ratio_gaussian},
                                     {"ratio_mean", f.ratio_mean},
                                     {"positive_gaussian", f.positive_gaussian},
                                     {"positive_mean", f.positive_mean}});
    }
    if (wants(cfg.columns, FeatureGroup::topological)) {
        DiagramConfig dc = cfg.diagram;
        dc.seed = derive_seed(derive_seed(cfg.seed, segment.id), "subsample");
        const auto topo = topo_features(diagram(segment.mesh.as_cloud(), dc), cfg.topo);
        const auto v = topo.values();
        for (std::size_t i = 0; i < TopoFeatures::kCount; ++i)
            values.emplace_back(std::string(TopoFeatures::names()[i]), v[i]);
    }
    std::vector<double> out;
    out.reserve(cfg.columns.size());
    for (const auto& c : cfg.columns) {
        const auto it = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == c; });
        if (it == values.end()) throw DataError("unknown feature '" + c + "'");
        out.push_back(it->second);
    }
    return out;
}

FeatureTable featurize(const std::vector<Segment>& segments, const FeaturizeConfig& cfg) {
    const auto& canonical = canonical_feature_names();
    std::size_t last = 0;
    for (const auto& c : cfg.columns) {
        const auto pos = static_cast<std::size_t>(std::find(canonical.begin(), canonical.end(), c) - canonical.begin());
        if (pos == canonical.size()) throw DataError("unknown feature '" + c + "'");
        if (pos < last) throw DataError("feature columns must follow the canonical order");
        last = pos + 1;
    }
    std::vector<std::vector<double>> rows(segments.size());
    parallel_for(segments.size(), [&](std::size_t i) {
        try {
            rows[i] = segment_features(segments[i], cfg);
        } catch (const DataError& e) {
            throw DataError("segment " + segments[i].id + ": " + e.what());
        } catch (const NumericError& e) {
            throw NumericError("segment " + segments[i].id + ": " + e.what());
        }
    });
    FeatureTable table;
    table.feature_names = cfg.columns;
    table.features.resize(0, static_cast<Eigen::Index>(cfg.columns.size()));
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        table.append_row(s.id, s.participant.empty() ? "unknown" : s.participant, to_string(s.label),
                         attr(s, "gender"), attr(s, "age_group"), rows[i]);
    }
    return table;
}

std::vector<Detection> map_surface(const TriangleMesh& surface, const ClassifierModel& model, const MapConfig& cfg) {
    auto segments = scan_segments(surface, cfg.extraction, cfg.max_segments);
    FeaturizeConfig fc = cfg.featurize;
    fc.columns = model.feature_names;
    std::vector<Segment> usable;
    for (auto& s : segments)
        if (s.mesh.vertex_count() >= 3) usable.push_back(std::move(s));

    std::vector<std::vector<double>> rows(usable.size());
    std::vector<bool> ok(usable.size(), false);
    parallel_for(usable.size(), [&](std::size_t i) {
        try {
            rows[i] = segment_features(usable[i], fc);
            ok[i] = std::all_of(rows[i].begin(), rows[i].end(), [](double v) { return std::isfinite(v); });
        } catch (const Error&) {
            ok[i] = false; // degenerate cut-outs (e.g. at the sheet border) are not papillae
        }
    });

    std::vector<Detection> out;
    for (std::size_t i = 0; i < usable.size(); ++i) {
        if (!ok[i]) continue;
        const Eigen::Map<const Eigen::RowVectorXd> row(rows[i].data(), static_cast<Eigen::Index>(rows[i].size()));
        const Eigen::MatrixXd scores = model.decision_function(Eigen::MatrixXd(row));
        Eigen::Index best = 0;
        const double score = scores.row(0).maxCoeff(&best);
        const auto& type = model.classes[static_cast<std::size_t>(best)];
        if (type == "none" && !cfg.keep_none) continue;
        out.push_back(Detection{usable[i].id, usable[i].center, type, score});
    }
    return out;
}

nlohmann::ordered_json to_json(const std::vector<Detection>& detections) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& d : detections)
        list.push_back({{"segment", d.segment_id},
                        {"center", {d.center.x(), d.center.y(), d.center.z()}},
                        {"type", d.type},
                        {"score", d.score}});
    nlohmann::ordered_json j;
    j["detections"] = list;
    return j;
}

std::vector<Detection> detections_from_json(const nlohmann::json& j) {
    std::vector<Detection> out;
    try {
        for (const auto& d : j.at("detections")) {
            const auto c = d.at("center").get<std::vector<double>>();
            if (c.size() != 3) throw DataError("detection centre must have 3 coordinates");
            out.push_back(Detection{d.value("segment", std::string{}), Vec3(c[0], c[1], c[2]),
                                    d.at("type").get<std::string>(), d.value("score", 0.0)});
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed map JSON: ") + e.what());
    }
    return out;
}

void write_map_svg(std::ostream& out, const TriangleMesh& surface, const std::vector<Detection>& detections,
                   const std::vector<Placement>& truth) {
    Vec3 lo = Vec3::Constant(0.0), hi = Vec3::Constant(1.0);
    if (surface.vertex_count() > 0) {
        lo = hi = surface.vertices()[0];
        for (const auto& v : surface.vertices()) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
    }
    const double w = std::max(hi.x() - lo.x(), 1.0), h = std::max(hi.y() - lo.y(), 1.0);
    const double scale = 800.0 / std::max(w, h);
    auto color = [](const std::string& type) {
        if (type == "fungiform") return "#1f4fd1";
        if (type == "filiform") return "#e0b000";
        return "#888888";
    };
    out.precision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w * scale << "\" height=\"" << h * scale
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#f4e1dc\"/>\n";
    for (const auto& p : truth)
        out << "<circle cx=\"" << (p.apex.x() - lo.x()) * scale << "\" cy=\"" << (hi.y() - p.apex.y()) * scale
            << "\" r=\"" << p.radius * scale << "\" fill=\"none\" stroke=\"" << color(to_string(p.type))
            << "\" stroke-width=\"1\"/>\n";
    for (const auto& d : detections)
        out << "<circle cx=\"" << (d.center.x() - lo.x()) * scale << "\" cy=\"" << (hi.y() - d.center.y()) * scale
            << "\" r=\"4\" fill=\"" << color(d.type) << "\"/>\n";
    out << "</svg>\n";
}

MatchSummary match_detections(const std::vector<Placement>& truth, const std::vector<Detection>& detections,
                              double tolerance) {
    MatchSummary m;
    m.total = truth.size();
    for (const auto& p : truth) {
        const Detection* nearest = nullptr;
        double best = kInfinity;
        for (const auto& d : detections) {
            const double dist = (d.center - p.apex).norm();
            if (dist < best) {
                best = dist;
                nearest = &d;
            }
        }
        if (!nearest || best > tolerance) continue;
        ++m.located;
        if (nearest->type == to_string(p.type)) ++m.correct;
    }
    return m;
}

} // namespace papilla
