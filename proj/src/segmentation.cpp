#include "papilla/segmentation.hpp"
#include "papilla/error.hpp"
#include "papilla/mesh_io.hpp"
#include "papilla/random.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace papilla {

namespace {

struct Covariance {
    Vec3 centroid = Vec3::Zero();
    Eigen::Matrix3d matrix = Eigen::Matrix3d::Zero();
};

template <class IndexRange>
Covariance covariance(std::span<const Vec3> points, const IndexRange& indices) {
    Covariance c;
    std::size_t n = 0;
    for (auto i : indices) {
        c.centroid += points[i];
        ++n;
    }
    c.centroid /= static_cast<double>(n);
    for (auto i : indices) {
        const Vec3 d = points[i] - c.centroid;
        c.matrix += d * d.transpose();
    }
    c.matrix /= static_cast<double>(n);
    return c;
}

Vec3 canonical(Vec3 normal) {
    Eigen::Index k = 0;
    normal.cwiseAbs().maxCoeff(&k);
    return normal[k] < 0.0 ? Vec3(-normal) : normal;
}

Plane fit_least_squares(std::span<const Vec3> points, const std::vector<std::size_t>& indices) {
    const auto cov = covariance(points, indices);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov.matrix);
    Plane plane;
    plane.normal = canonical(solver.eigenvectors().col(0).normalized());
    plane.offset = plane.normal.dot(cov.centroid);
    return plane;
}

std::vector<std::size_t> inliers_of(std::span<const Vec3> points, const Plane& plane, double tol) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (std::abs(plane.signed_distance(points[i])) <= tol) out.push_back(i);
    return out;
}

} // namespace

Plane ransac_plane(std::span<const Vec3> points, const RansacConfig& cfg) {
    if (points.size() < 3) throw NumericError("plane fit needs at least 3 points, got " + std::to_string(points.size()));

    std::vector<std::size_t> all(points.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    {
        const auto cov = covariance(points, all);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov.matrix);
        const auto ev = solver.eigenvalues(); // ascending
        if (ev[2] <= 0.0 || ev[1] <= 1e-12 * ev[2]) throw NumericError("plane fit on collinear points");
    }

    auto rng = make_rng(cfg.seed);
    const double scale = (points[0] - points[points.size() / 2]).norm() + 1.0;
    std::size_t best_count = 0;
    Plane best;
    bool found = false;
    for (int it = 0; it < cfg.iterations; ++it) {
        const auto a = uniform_index(rng, points.size());
        auto b = uniform_index(rng, points.size() - 1);
        if (b >= a) ++b;
        auto c = uniform_index(rng, points.size() - 2);
        for (auto taken : {std::min(a, b), std::max(a, b)})
            if (c >= taken) ++c;

        Vec3 n = (points[b] - points[a]).cross(points[c] - points[a]);
        const double len = n.norm();
        if (len <= 1e-12 * scale * scale) continue;
        n /= len;
        Plane h{n, n.dot(points[a]), 0};
        std::size_t count = 0;
        for (const auto& p : points)
            if (std::abs(h.signed_distance(p)) <= cfg.tolerance) ++count;
        if (count > best_count) {
            best_count = count;
            best = h;
            found = true;
        }
    }

    auto inliers = found ? inliers_of(points, best, cfg.tolerance) : all;
    Plane refined = inliers.size() >= 3 ? fit_least_squares(points, inliers) : best;
    auto refined_inliers = inliers_of(points, refined, cfg.tolerance);
    // Keep the refit only if it does not lose support.
    if (refined_inliers.size() >= inliers.size() || !found) {
        refined.inlier_count = refined_inliers.size();
        return refined;
    }
    const Vec3 flipped = canonical(best.normal);
    if (flipped.dot(best.normal) < 0.0) best.offset = -best.offset;
    best.normal = flipped;
    best.inlier_count = inliers.size();
    return best;
}

std::size_t local_maximum(std::span<const Vec3> points, const Plane& plane) {
    if (points.empty()) throw DataError("local maximum of an empty point set");
    std::size_t best = 0;
    double best_d = std::abs(plane.signed_distance(points[0]));
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double d = std::abs(plane.signed_distance(points[i]));
        if (d > best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::string to_string(Label label) {
    switch (label) {
    case Label::fungiform: return "fungiform";
    case Label::filiform: return "filiform";
    case Label::none: return "none";
    case Label::unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

Label parse_label(const std::string& text) {
    if (text == "fungiform") return Label::fungiform;
    if (text == "filiform") return Label::filiform;
    if (text == "none") return Label::none;
    if (text == "unlabeled" || text.empty()) return Label::unlabeled;
    throw DataError("unknown segment label '" + text + "'");
}

void ExtractionConfig::validate() const {
    if (!(radius > 0.0)) throw DataError("extraction radius must be positive");
    if (!(delta >= 0.0)) throw DataError("extraction delta must be non-negative");
    if (ransac.iterations < 1) throw DataError("RANSAC needs at least one iteration");
    if (!(ransac.tolerance > 0.0)) throw DataError("RANSAC tolerance must be positive");
}

namespace {

// With `claimed` given, vertices already attributed to an accepted peak still
// shape the base plane but cannot become M.
Segment extract_impl(const TriangleMesh& surface, const SpatialIndex& index, const Vec3& seed_point,
                     const ExtractionConfig& cfg, const std::vector<bool>* claimed) {
    const auto ball = index.radius_query(seed_point, cfg.radius + cfg.delta);
    if (ball.size() < 3)
        throw NumericError("neighbourhood of the seed point holds " + std::to_string(ball.size()) +
                           " vertices; at least 3 are required");

    std::vector<Vec3> pts;
    pts.reserve(ball.size());
    for (auto i : ball) pts.push_back(surface.vertices()[i]);
    const Plane plane = ransac_plane(pts, cfg.ransac);
    std::uint32_t m_global = 0;
    if (!claimed) {
        m_global = ball[local_maximum(pts, plane)];
    } else {
        double best = -1.0;
        for (std::size_t k = 0; k < ball.size(); ++k) {
            if ((*claimed)[ball[k]]) continue;
            const double d = std::abs(plane.signed_distance(pts[k]));
            if (d > best) {
                best = d;
                m_global = ball[k];
            }
        }
        if (best < 0.0) throw NumericError("every vertex near the seed point belongs to an accepted segment");
    }
    const Vec3 center = surface.vertices()[m_global];

    const auto keep = index.radius_query(center, cfg.radius);
    Segment seg;
    seg.mesh = surface.submesh(keep);
    seg.center_index = static_cast<std::uint32_t>(std::lower_bound(keep.begin(), keep.end(), m_global) - keep.begin());
    seg.center = center;
    seg.seed_point = seed_point;
    seg.up = plane.signed_distance(center) >= 0.0 ? plane.normal : Vec3(-plane.normal);
    seg.cut_radius = cfg.radius;
    return seg;
}

// Marks the peak region of an accepted segment: every vertex within `reach` of
// M that a walk from M can reach without ever going up.
void claim_peak(const TriangleMesh& surface, const std::vector<std::vector<std::uint32_t>>& adjacency,
                const Segment& seg, std::uint32_t m, double reach, std::vector<bool>& claimed) {
    auto height = [&](std::uint32_t v) { return seg.up.dot(surface.vertices()[v]); };
    std::vector<std::uint32_t> stack{m};
    claimed[m] = true;
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (auto w : adjacency[v]) {
            if (claimed[w] || height(w) > height(v)) continue;
            if ((surface.vertices()[w] - seg.center).norm() > reach) continue;
            claimed[w] = true;
            stack.push_back(w);
        }
    }
}

} // namespace

Segment extract_segment(const TriangleMesh& surface, const SpatialIndex& index, const Vec3& seed_point,
                        const ExtractionConfig& cfg) {
    cfg.validate();
    return extract_impl(surface, index, seed_point, cfg, nullptr);
}

Segment extract_segment(const TriangleMesh& surface, const Vec3& seed_point, const ExtractionConfig& cfg) {
    const SpatialIndex index(surface.vertices());
    return extract_segment(surface, index, seed_point, cfg);
}

std::vector<Segment> scan_segments(const TriangleMesh& surface, const ExtractionConfig& cfg,
                                   std::size_t max_segments) {
    cfg.validate();
    std::vector<Segment> accepted;
    if (surface.vertex_count() == 0 || max_segments == 0) return accepted;

    const SpatialIndex index(surface.vertices());
    const double dup_radius = cfg.duplicate_radius.value_or(0.5 * cfg.radius);
    std::vector<std::uint32_t> order(surface.vertex_count());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    auto rng = make_rng(derive_seed(cfg.ransac.seed, "scan-order"));
    shuffle(order.begin(), order.end(), rng);

    std::vector<bool> excluded(surface.vertex_count(), false);
    std::vector<bool> claimed(surface.vertex_count(), false);
    std::vector<std::vector<std::uint32_t>> adjacency(surface.vertex_count());
    for (const auto& f : surface.faces())
        for (int k = 0; k < 3; ++k) {
            adjacency[f[k]].push_back(f[(k + 1) % 3]);
            adjacency[f[(k + 1) % 3]].push_back(f[k]);
        }
    auto exclude_ball = [&](const Vec3& c, double radius) {
        for (auto i : index.radius_query(c, radius)) excluded[i] = true;
    };

    std::uint64_t attempt = 0;
    for (auto seed_vertex : order) {
        if (accepted.size() >= max_segments) break;
        if (excluded[seed_vertex]) continue;
        const Vec3 p = surface.vertices()[seed_vertex];
        ExtractionConfig attempt_cfg = cfg;
        attempt_cfg.ransac.seed = derive_seed(cfg.ransac.seed, attempt++);

        std::optional<Segment> seg;
        try {
            seg = extract_impl(surface, index, p, attempt_cfg, &claimed);
        } catch (const NumericError&) {
            seg.reset();
        }
        bool ok = seg && (seg->center - p).norm() <= cfg.radius;
        if (ok) {
            for (const auto& a : accepted)
                if ((a.center - seg->center).norm() < dup_radius) {
                    ok = false;
                    break;
                }
        }
        if (!ok) {
            // No new local maximum reachable from here; retire nearby seed points.
            exclude_ball(p, std::max(cfg.delta, 1e-9));
            excluded[seed_vertex] = true;
            continue;
        }
        const auto number = std::to_string(accepted.size() + 1);
        seg->id = "seg" + std::string(number.size() < 4 ? 4 - number.size() : 0, '0') + number;
        exclude_ball(seg->center, cfg.radius);
        const auto m = index.radius_query(seg->center, 0.0).front();
        claim_peak(surface, adjacency, *seg, m, cfg.radius + cfg.delta, claimed);
        excluded[seed_vertex] = true;
        accepted.push_back(std::move(*seg));
    }
    return accepted;
}

double radius_feature(const Segment& segment) {
    const auto& verts = segment.mesh.vertices();
    if (verts.empty()) throw DataError("radius feature of an empty segment");
    std::vector<double> dist;
    dist.reserve(verts.size());
    for (const auto& v : verts) dist.push_back((v - segment.center).norm());
    // k = ceil(0.9 n) vertices must be inside the ball.
    const std::size_t k = (9 * verts.size() + 9) / 10;
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    const double needed = dist[k - 1];
    // Relative slack absorbs rounding in distances of points placed exactly on a step.
    constexpr double kSlack = 1e-9;
    double i = 10.0;
    while (i * (1.0 + kSlack) < needed) i += 10.0;
    return segment.cut_radius > 0.0 ? std::min(i, segment.cut_radius) : i;
}

double height_feature(const Segment& segment, double radius, const RansacConfig& cfg) {
    std::vector<Vec3> region;
    for (const auto& v : segment.mesh.vertices())
        if ((v - segment.center).norm() <= radius) region.push_back(v);
    if (region.size() < 3)
        throw NumericError("height feature: only " + std::to_string(region.size()) + " vertices within radius");
    const Plane plane = ransac_plane(region, cfg);
    return std::abs(plane.signed_distance(segment.center));
}

namespace {

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3)
        throw DataError("segment sidecar field '" + key + "' must be a 3-element array");
    return {j[key][0].get<double>(), j[key][1].get<double>(), j[key][2].get<double>()};
}

} // namespace

void save_segment(const std::filesystem::path& dir, const Segment& segment) {
    if (segment.id.empty()) throw DataError("segment without id cannot be saved");
    std::filesystem::create_directories(dir);
    save_surface(dir / (segment.id + ".ply"), segment.mesh, PlyEncoding::binary_little_endian);
    nlohmann::ordered_json j;
    j["id"] = segment.id;
    j["participant"] = segment.participant;
    j["label"] = to_string(segment.label);
    j["center"] = vec_json(segment.center);
    j["cut_radius"] = segment.cut_radius;
    j["group_attrs"] = segment.group_attrs;
    j["seed_point"] = vec_json(segment.seed_point);
    j["up"] = vec_json(segment.up);
    j["center_index"] = segment.center_index;
    j["mesh"] = segment.id + ".ply";
    std::ofstream out(dir / (segment.id + ".json"));
    out << j.dump(2) << '\n';
    if (!out) throw DataError("cannot write sidecar for " + segment.id);
}

Segment load_segment(const std::filesystem::path& sidecar) {
    std::ifstream in(sidecar);
    if (!in) throw DataError("cannot open " + sidecar.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(sidecar.string() + ": " + e.what());
    }
    Segment seg;
    try {
        seg.id = j.at("id").get<std::string>();
        seg.participant = j.value("participant", std::string{});
        seg.label = parse_label(j.value("label", std::string{"unlabeled"}));
        seg.center = json_vec(j, "center");
        seg.cut_radius = j.at("cut_radius").get<double>();
        if (j.contains("group_attrs")) seg.group_attrs = j["group_attrs"].get<std::map<std::string, std::string>>();
        seg.seed_point = j.contains("seed_point") ? json_vec(j, "seed_point") : seg.center;
        seg.up = j.contains("up") ? json_vec(j, "up") : Vec3::UnitZ();
        const auto mesh_file = j.value("mesh", seg.id + ".ply");
        seg.mesh = load_surface(sidecar.parent_path() / mesh_file);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(sidecar.string() + ": " + e.what());
    }
    // Locate M in the mesh; the sidecar index is only a hint.
    const auto& verts = seg.mesh.vertices();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < verts.size(); ++i) {
        const double d = (verts[i] - seg.center).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    seg.center_index = static_cast<std::uint32_t>(best);
    return seg;
}

std::vector<Segment> load_segment_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<Segment> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(load_segment(f));
    return out;
}

} // namespace papilla
