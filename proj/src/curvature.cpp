#include "papilla/curvature.hpp"
#include "papilla/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace papilla {

namespace {

double angle_at(const Vec3& apex, const Vec3& a, const Vec3& b) {
    const Vec3 u = a - apex;
    const Vec3 w = b - apex;
    return std::atan2(u.cross(w).norm(), u.dot(w));
}

double cot_at(const Vec3& apex, const Vec3& a, const Vec3& b) {
    const Vec3 u = a - apex;
    const Vec3 w = b - apex;
    return u.dot(w) / u.cross(w).norm();
}

// Face corners rotated so that `v` comes first.
std::array<std::uint32_t, 3> rotate_to(const Face& f, std::size_t v) {
    if (f[0] == v) return {f[0], f[1], f[2]};
    if (f[1] == v) return {f[1], f[2], f[0]};
    return {f[2], f[0], f[1]};
}

double mixed_area_of_corner(const Vec3& p, const Vec3& q, const Vec3& r) {
    const double area = triangle_area(p, q, r);
    const double ap = angle_at(p, q, r);
    const double aq = angle_at(q, r, p);
    const double ar = angle_at(r, p, q);
    constexpr double half_pi = std::numbers::pi / 2.0;
    if (ap > half_pi) return area / 2.0;
    if (aq > half_pi || ar > half_pi) return area / 4.0;
    return ((p - q).squaredNorm() * cot_at(r, p, q) + (p - r).squaredNorm() * cot_at(q, r, p)) / 8.0;
}

void require_interior(const TriangleMesh& mesh, std::size_t v, bool has_faces) {
    if (v >= mesh.vertex_count()) throw DataError("vertex index " + std::to_string(v) + " out of range");
    if (mesh.is_boundary(v)) throw DataError("vertex " + std::to_string(v) + " is on the boundary");
    if (!has_faces) throw DataError("vertex " + std::to_string(v) + " is isolated");
}

double signed_volume(const TriangleMesh& mesh) {
    double vol = 0.0;
    const auto& x = mesh.vertices();
    for (const auto& f : mesh.faces()) vol += x[f[0]].dot(x[f[1]].cross(x[f[2]]));
    return vol / 6.0;
}

bool is_closed(const TriangleMesh& mesh) {
    const auto& b = mesh.boundary_flags();
    return std::none_of(b.begin(), b.end(), [](bool x) { return x; });
}

} // namespace

std::size_t CurvatureField::valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

double angle_deficit(const TriangleMesh& mesh, std::size_t v) {
    double sum = 0.0;
    bool any = false;
    const auto& x = mesh.vertices();
    for (const auto& f : mesh.faces()) {
        if (f[0] != v && f[1] != v && f[2] != v) continue;
        any = true;
        const auto c = rotate_to(f, v);
        sum += angle_at(x[c[0]], x[c[1]], x[c[2]]);
    }
    require_interior(mesh, v, any);
    return 2.0 * std::numbers::pi - sum;
}

double mixed_area(const TriangleMesh& mesh, std::size_t v) {
    double area = 0.0;
    bool any = false;
    const auto& x = mesh.vertices();
    for (const auto& f : mesh.faces()) {
        if (f[0] != v && f[1] != v && f[2] != v) continue;
        any = true;
        const auto c = rotate_to(f, v);
        area += mixed_area_of_corner(x[c[0]], x[c[1]], x[c[2]]);
    }
    require_interior(mesh, v, any);
    return area;
}

CurvatureField compute_curvature(const TriangleMesh& mesh, const CurvatureOptions& options) {
    const auto n = mesh.vertex_count();
    const auto& x = mesh.vertices();
    std::vector<double> angle_sum(n, 0.0), area(n, 0.0);
    std::vector<Vec3> laplace(n, Vec3::Zero()), normal(n, Vec3::Zero());
    std::vector<bool> touched(n, false);

    for (const auto& f : mesh.faces()) {
        const Vec3 face_normal = (x[f[1]] - x[f[0]]).cross(x[f[2]] - x[f[0]]); // length = 2 * area
        for (int k = 0; k < 3; ++k) {
            const auto i = f[k], j = f[(k + 1) % 3], l = f[(k + 2) % 3];
            touched[i] = true;
            angle_sum[i] += angle_at(x[i], x[j], x[l]);
            area[i] += mixed_area_of_corner(x[i], x[j], x[l]);
            normal[i] += face_normal;
            // The angle at l is opposite edge (i, j).
            const double c = cot_at(x[l], x[i], x[j]);
            laplace[i] += c * (x[i] - x[j]);
            laplace[j] += c * (x[j] - x[i]);
        }
    }

    double orientation = 1.0;
    if (options.up) {
        Vec3 total = Vec3::Zero();
        for (const auto& nv : normal) total += nv;
        if (total.dot(*options.up) < 0.0) orientation = -1.0;
    } else if (is_closed(mesh) && signed_volume(mesh) < 0.0) {
        orientation = -1.0;
    }

    CurvatureField field;
    field.gaussian.assign(n, 0.0);
    field.mean.assign(n, 0.0);
    field.mixed_area.assign(n, 0.0);
    field.deficit.assign(n, 0.0);
    field.valid.assign(n, false);
    for (std::size_t v = 0; v < n; ++v) {
        if (!touched[v] || mesh.is_boundary(v) || !(area[v] > 0.0)) continue;
        field.valid[v] = true;
        field.mixed_area[v] = area[v];
        field.deficit[v] = 2.0 * std::numbers::pi - angle_sum[v];
        field.gaussian[v] = field.deficit[v] / area[v];
        const double h = laplace[v].norm() / (4.0 * area[v]);
        field.mean[v] = laplace[v].dot(orientation * normal[v]) < 0.0 ? -h : h;
    }
    if (field.valid_count() == 0) throw DataError("mesh has no interior vertex");
    return field;
}

CurvatureFeatures curvature_features(const CurvatureField& field, double zero_tol) {
    CurvatureFeatures out;
    std::size_t kpos = 0, kneg = 0, hpos = 0, hneg = 0, count = 0;
    for (std::size_t v = 0; v < field.valid.size(); ++v) {
        if (!field.valid[v]) continue;
        const double k = field.gaussian[v];
        const double h = field.mean[v];
        if (count == 0) {
            out.min_gaussian = out.max_gaussian = k;
            out.min_mean = out.max_mean = h;
        }
        ++count;
        out.min_gaussian = std::min(out.min_gaussian, k);
        out.max_gaussian = std::max(out.max_gaussian, k);
        out.min_mean = std::min(out.min_mean, h);
        out.max_mean = std::max(out.max_mean, h);
        kpos += k > zero_tol;
        kneg += k < -zero_tol;
        hpos += h > zero_tol;
        hneg += h < -zero_tol;
    }
    if (count == 0) throw DataError("curvature features need at least one valid vertex");

    auto ratio = [](std::size_t a, std::size_t b) {
        const auto hi = std::max(a, b);
        return hi == 0 ? 0.0 : static_cast<double>(std::min(a, b)) / static_cast<double>(hi);
    };
    auto positive = [](std::size_t pos, std::size_t neg) {
        return pos + neg == 0 ? 0.0 : static_cast<double>(pos) / static_cast<double>(pos + neg);
    };
    out.ratio_gaussian = ratio(kpos, kneg);
    out.ratio_mean = ratio(hpos, hneg);
    out.positive_gaussian = positive(kpos, kneg);
    out.positive_mean = positive(hpos, hneg);
    return out;
}

void write_curvature_csv(std::ostream& out, const CurvatureField& field) {
    out << "vertex_id,K,H,A_mixed,valid\n";
    char buf[160];
    for (std::size_t v = 0; v < field.valid.size(); ++v) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%d\n", v, field.gaussian[v], field.mean[v],
                      field.mixed_area[v], field.valid[v] ? 1 : 0);
        out << buf;
    }
}

} // namespace papilla
