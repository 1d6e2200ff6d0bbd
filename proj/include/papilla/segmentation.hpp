#pragma once

#include "papilla/geometry.hpp"
#include "papilla/kdtree.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace papilla {

/// Points x with normal.dot(x) == offset. `normal` is unit length.
struct Plane {
    Vec3 normal = Vec3::UnitZ();
    double offset = 0.0;
    std::size_t inlier_count = 0;

    [[nodiscard]] double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

struct RansacConfig {
    int iterations = 200;
    double tolerance = 15.0; // µm
    std::uint64_t seed = 0;
};

/// Best plane over `iterations` random 3-point hypotheses, refined by a
/// least-squares fit to its inliers. The normal is canonicalised so that its
/// largest-magnitude component is positive.
/// Throws NumericError for fewer than 3 points or an all-collinear set.
Plane ransac_plane(std::span<const Vec3> points, const RansacConfig& cfg);

/// Index of the point with the largest unsigned distance to the plane; the
/// lowest index wins ties. Throws DataError on an empty set.
std::size_t local_maximum(std::span<const Vec3> points, const Plane& plane);

enum class Label { fungiform, filiform, none, unlabeled };

std::string to_string(Label label);
Label parse_label(const std::string& text);

struct Segment {
    std::string id;
    TriangleMesh mesh;
    std::uint32_t center_index = 0; // index of M inside `mesh`
    Vec3 center = Vec3::Zero();     // M
    Vec3 seed_point = Vec3::Zero(); // P
    Vec3 up = Vec3::UnitZ();        // base-plane normal, oriented towards M
    double cut_radius = 0.0;
    Label label = Label::unlabeled;
    std::string participant;
    std::map<std::string, std::string> group_attrs;
};

struct ExtractionConfig {
    double radius = 450.0; // r, µm
    double delta = 100.0;  // δ, µm
    RansacConfig ransac;
    /// A scan rejects a new centre closer than this to an accepted one. Defaults to r / 2 when unset.
    std::optional<double> duplicate_radius;

    void validate() const;
};

/// Ball of radius r + δ around the seed point, RANSAC base plane, furthest
/// point M, then every vertex within r of M with the faces they fully span.
Segment extract_segment(const TriangleMesh& surface, const SpatialIndex& index, const Vec3& seed_point,
                        const ExtractionConfig& cfg);
Segment extract_segment(const TriangleMesh& surface, const Vec3& seed_point, const ExtractionConfig& cfg);

/// Repeated extraction from seeded random seed points. Seed points within r of
/// an accepted centre are skipped. An extraction is accepted when M lies within
/// r of its seed point and is not a duplicate of an accepted centre. The peak
/// region of an accepted segment (vertices within r + δ of M reachable from M
/// without climbing) can no longer become M, so a shorter papilla next to a
/// taller one is still found. Stops at max_segments or when no seed point remains.
std::vector<Segment> scan_segments(const TriangleMesh& surface, const ExtractionConfig& cfg,
                                   std::size_t max_segments);

/// Smallest i in {10, 20, ...} whose ball around M holds at least 90% of the
/// segment vertices, capped at the cut radius.
double radius_feature(const Segment& segment);

/// Unsigned distance from M to a RANSAC plane fitted to the vertices within
/// `radius` of M. Throws NumericError if fewer than 3 vertices qualify.
double height_feature(const Segment& segment, double radius, const RansacConfig& cfg = {});

// Segment files: <id>.ply (binary little-endian) plus <id>.json sidecar.
void save_segment(const std::filesystem::path& dir, const Segment& segment);
Segment load_segment(const std::filesystem::path& sidecar);
/// Loads every *.json sidecar in `dir`, sorted by file name.
std::vector<Segment> load_segment_dir(const std::filesystem::path& dir);

} // namespace papilla
