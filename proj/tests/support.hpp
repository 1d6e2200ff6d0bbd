#pragma once

#include "papilla/geometry.hpp"
#include "papilla/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace testing {

using papilla::Face;
using papilla::TriangleMesh;
using papilla::Vec3;

inline constexpr double kPi = 3.14159265358979323846;

// Regular grid on [0, (nx-1) h] x [0, (ny-1) h] with z = f(x, y).
inline TriangleMesh grid_mesh(std::size_t nx, std::size_t ny, double h,
                              const std::function<double(double, double)>& f = [](double, double) { return 0.0; }) {
    std::vector<Vec3> v;
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = static_cast<double>(i) * h, y = static_cast<double>(j) * h;
            v.emplace_back(x, y, f(x, y));
        }
    std::vector<Face> faces;
    auto id = [&](std::size_t i, std::size_t j) { return static_cast<std::uint32_t>(j * nx + i); };
    for (std::size_t j = 0; j + 1 < ny; ++j)
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return TriangleMesh::build(std::move(v), std::move(faces));
}

// Icosahedron refined `levels` times, projected onto a sphere of radius r.
inline TriangleMesh icosphere(int levels, double r) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                           {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                           {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (auto& p : v) p.normalize();
    for (int l = 0; l < levels; ++l) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            if (auto it = mid.find(key); it != mid.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            const auto idx = static_cast<std::uint32_t>(v.size() - 1);
            mid.emplace(key, idx);
            return idx;
        };
        std::vector<Face> next;
        for (const auto& tri : f) {
            const auto ab = midpoint(tri[0], tri[1]), bc = midpoint(tri[1], tri[2]), ca = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        f = std::move(next);
    }
    for (auto& p : v) p *= r;
    return TriangleMesh::build(std::move(v), std::move(f));
}

inline TriangleMesh transformed(const TriangleMesh& m, const Eigen::Matrix3d& rot, const Vec3& shift, double scale = 1.0) {
    std::vector<Vec3> v;
    for (const auto& p : m.vertices()) v.push_back(rot * (scale * p) + shift);
    return TriangleMesh::build(std::move(v), m.faces());
}

inline Eigen::Matrix3d some_rotation() {
    return (Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()) * Eigen::AngleAxisd(-1.1, Vec3::UnitZ()))
        .toRotationMatrix();
}

inline papilla::PointCloud random_cloud(std::size_t n, std::uint64_t seed, double extent = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, extent);
    papilla::PointCloud c;
    for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
    return c;
}

// Persistence oracle: the full Vietoris-Rips 2-skeleton, every simplex sorted by
// (filtration value, dimension, vertex list), and the textbook column reduction
// of the whole boundary matrix over Z/2.
struct OracleDiagram {
    std::vector<std::pair<double, double>> dim0; // finite pairs only
    std::vector<std::pair<double, double>> dim1;
    std::size_t essential0 = 0;
};

inline OracleDiagram naive_persistence(const std::vector<Vec3>& pts) {
    struct Simplex {
        std::vector<std::uint32_t> v;
        double value;
    };
    const auto n = static_cast<std::uint32_t>(pts.size());
    auto d = [&](std::uint32_t a, std::uint32_t b) { return (pts[a] - pts[b]).norm(); };
    std::vector<Simplex> s;
    for (std::uint32_t a = 0; a < n; ++a) s.push_back({{a}, 0.0});
    for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = a + 1; b < n; ++b) s.push_back({{a, b}, d(a, b)});
    for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = a + 1; b < n; ++b)
            for (std::uint32_t c = b + 1; c < n; ++c) s.push_back({{a, b, c}, std::max({d(a, b), d(a, c), d(b, c)})});
    std::stable_sort(s.begin(), s.end(), [](const Simplex& x, const Simplex& y) {
        if (x.value != y.value) return x.value < y.value;
        if (x.v.size() != y.v.size()) return x.v.size() < y.v.size();
        return x.v < y.v;
    });
    std::map<std::vector<std::uint32_t>, std::size_t> position;
    for (std::size_t i = 0; i < s.size(); ++i) position[s[i].v] = i;

    std::vector<std::vector<std::size_t>> col(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].v.size() == 1) continue;
        for (std::size_t drop = 0; drop < s[i].v.size(); ++drop) {
            auto face = s[i].v;
            face.erase(face.begin() + static_cast<std::ptrdiff_t>(drop));
            col[i].push_back(position.at(face));
        }
        std::sort(col[i].begin(), col[i].end());
    }
    auto low = [&](std::size_t i) { return col[i].empty() ? SIZE_MAX : col[i].back(); };
    std::map<std::size_t, std::size_t> owner; // low -> column
    for (std::size_t i = 0; i < s.size(); ++i) {
        while (!col[i].empty() && owner.count(low(i))) {
            const auto& other = col[owner[low(i)]];
            std::vector<std::size_t> sum;
            std::set_symmetric_difference(col[i].begin(), col[i].end(), other.begin(), other.end(),
                                          std::back_inserter(sum));
            col[i] = std::move(sum);
        }
        if (!col[i].empty()) owner[low(i)] = i;
    }
    OracleDiagram out;
    std::vector<bool> paired(s.size(), false);
    for (const auto& [birth, death] : owner) {
        paired[birth] = paired[death] = true;
        const double b = s[birth].value, dv = s[death].value;
        if (dv == b) continue;
        (s[birth].v.size() == 1 ? out.dim0 : out.dim1).emplace_back(b, dv);
    }
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!paired[i] && s[i].v.size() == 1 && col[i].empty()) ++out.essential0;
    std::sort(out.dim0.begin(), out.dim0.end());
    std::sort(out.dim1.begin(), out.dim1.end());
    return out;
}

inline std::vector<std::pair<double, double>> finite_pairs(const std::vector<papilla::Bar>& bars) {
    std::vector<std::pair<double, double>> out;
    for (const auto& b : bars)
        if (b.finite() && b.death > b.birth) out.emplace_back(b.birth, b.death);
    std::sort(out.begin(), out.end());
    return out;
}

// Kruskal over all pairs with a plain union-find.
inline std::vector<double> kruskal_weights(const std::vector<Vec3>& pts) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> e;
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b) e.emplace_back((pts[a] - pts[b]).norm(), a, b);
    std::sort(e.begin(), e.end());
    std::vector<std::size_t> parent(pts.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    std::vector<double> w;
    for (const auto& [len, a, b] : e) {
        const auto ra = find(a), rb = find(b);
        if (ra == rb) continue;
        parent[ra] = rb;
        w.push_back(len);
    }
    return w;
}

} // namespace testing
