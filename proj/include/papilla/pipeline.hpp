#pragma once

#include "papilla/classifier.hpp"
#include "papilla/curvature.hpp"
#include "papilla/feature_table.hpp"
#include "papilla/persistence.hpp"
#include "papilla/segmentation.hpp"
#include "papilla/synth.hpp"
#include "papilla/vectorize.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace papilla {

struct FeaturizeConfig {
    RansacConfig height_ransac;
    double zero_tol = 1e-8;
    DiagramConfig diagram;
    TopoConfig topo;
    std::uint64_t seed = 0;
    /// Columns to compute, a subset of canonical_feature_names() in canonical order.
    std::vector<std::string> columns = canonical_feature_names();
};

/// Feature values for `cfg.columns`. Only the groups that appear are computed.
/// Per-segment randomness is derived from the segment id, so the result does
/// not depend on batch order or worker count.
std::vector<double> segment_features(const Segment& segment, const FeaturizeConfig& cfg);

/// One row per segment, computed in parallel.
FeatureTable featurize(const std::vector<Segment>& segments, const FeaturizeConfig& cfg);

struct Detection {
    std::string segment_id;
    Vec3 center = Vec3::Zero();
    std::string type;
    double score = 0.0; // decision value of the predicted class
};

struct MapConfig {
    ExtractionConfig extraction;
    std::size_t max_segments = 100000;
    FeaturizeConfig featurize;
    bool keep_none = false;
};

/// Scans the surface, featurizes every segment with the model's columns and
/// classifies it. Segments predicted as "none" are dropped unless keep_none.
std::vector<Detection> map_surface(const TriangleMesh& surface, const ClassifierModel& model, const MapConfig& cfg);

nlohmann::ordered_json to_json(const std::vector<Detection>& detections);
std::vector<Detection> detections_from_json(const nlohmann::json& j);

/// Overhead scatter of detections, optionally with the ground truth as rings.
void write_map_svg(std::ostream& out, const TriangleMesh& surface, const std::vector<Detection>& detections,
                   const std::vector<Placement>& truth = {});

struct MatchSummary {
    std::size_t total = 0;
    std::size_t located = 0; // a detection within the tolerance
    std::size_t correct = 0; // ... whose type also matches
    [[nodiscard]] double rate() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 1.0; }
};

/// For every true placement, checks the nearest detection (3D distance to the apex).
MatchSummary match_detections(const std::vector<Placement>& truth, const std::vector<Detection>& detections,
                              double tolerance = 50.0);

} // namespace papilla
