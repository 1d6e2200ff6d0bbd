#include "papilla/geometry.hpp"
#include "papilla/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

namespace papilla {

namespace {

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

std::vector<bool> compute_boundary(std::size_t n_vertices, const std::vector<Face>& faces) {
    std::unordered_map<std::uint64_t, std::uint32_t> edge_use;
    edge_use.reserve(faces.size() * 3);
    for (const auto& f : faces)
        for (int k = 0; k < 3; ++k) ++edge_use[edge_key(f[k], f[(k + 1) % 3])];

    std::vector<bool> boundary(n_vertices, false);
    for (const auto& [key, count] : edge_use) {
        if (count != 1) continue;
        boundary[key >> 32] = true;
        boundary[key & 0xffffffffu] = true;
    }
    return boundary;
}

} // namespace

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

TriangleMesh TriangleMesh::build(std::vector<Vec3> vertices, std::vector<Face> faces) {
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        if (!vertices[i].allFinite())
            throw DataError("vertex " + std::to_string(i) + " has a non-finite coordinate");
    }
    const auto n = vertices.size();
    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
        const auto& f = faces[fi];
        for (auto idx : f) {
            if (idx >= n)
                throw DataError("face " + std::to_string(fi) + " references vertex " + std::to_string(idx) +
                                " but the mesh has " + std::to_string(n) + " vertices");
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
            throw DataError("face " + std::to_string(fi) + " is degenerate (repeated vertex index)");
    }

    TriangleMesh mesh;
    mesh.boundary_ = compute_boundary(n, faces);
    mesh.vertices_ = std::move(vertices);
    mesh.faces_ = std::move(faces);
    return mesh;
}

TriangleMesh TriangleMesh::submesh(const std::vector<std::uint32_t>& keep) const {
    constexpr auto kDropped = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> remap(vertices_.size(), kDropped);
    std::vector<Vec3> verts;
    verts.reserve(keep.size());
    for (auto v : keep) {
        remap[v] = static_cast<std::uint32_t>(verts.size());
        verts.push_back(vertices_[v]);
    }
    std::vector<Face> faces;
    for (const auto& f : faces_) {
        if (remap[f[0]] == kDropped || remap[f[1]] == kDropped || remap[f[2]] == kDropped) continue;
        faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});
    }
    return build(std::move(verts), std::move(faces));
}

std::vector<std::vector<std::uint32_t>> TriangleMesh::vertex_faces() const {
    std::vector<std::vector<std::uint32_t>> out(vertices_.size());
    for (std::uint32_t fi = 0; fi < faces_.size(); ++fi)
        for (auto v : faces_[fi]) out[v].push_back(fi);
    return out;
}

double TriangleMesh::total_area() const {
    double area = 0.0;
    for (const auto& f : faces_) area += triangle_area(vertices_[f[0]], vertices_[f[1]], vertices_[f[2]]);
    return area;
}

} // namespace papilla
