#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <vector>

namespace papilla {

/// All coordinates are micrometres. No unit conversion happens anywhere in the library.
using Vec3 = Eigen::Vector3d;
using Face = std::array<std::uint32_t, 3>;

struct PointCloud {
    std::vector<Vec3> points;

    [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
    [[nodiscard]] bool empty() const noexcept { return points.empty(); }
};

/// Indexed triangle mesh. Construct through TriangleMesh::build so that the
/// boundary flags always agree with the face set.
class TriangleMesh {
public:
    TriangleMesh() = default;

    /// Validates indices and degenerate faces, then computes boundary flags.
    /// Throws DataError on invalid input.
    static TriangleMesh build(std::vector<Vec3> vertices, std::vector<Face> faces);

    [[nodiscard]] const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const std::vector<Face>& faces() const noexcept { return faces_; }
    [[nodiscard]] const std::vector<bool>& boundary_flags() const noexcept { return boundary_; }

    [[nodiscard]] std::size_t vertex_count() const noexcept { return vertices_.size(); }
    [[nodiscard]] std::size_t face_count() const noexcept { return faces_.size(); }
    [[nodiscard]] bool is_boundary(std::size_t v) const { return boundary_[v]; }

    [[nodiscard]] PointCloud as_cloud() const { return PointCloud{vertices_}; }

    /// Keeps the listed vertices (in the given order) and every face whose three
    /// vertices are all kept. Boundary flags are recomputed for the sub-mesh.
    [[nodiscard]] TriangleMesh submesh(const std::vector<std::uint32_t>& keep) const;

    /// Incident faces per vertex.
    [[nodiscard]] std::vector<std::vector<std::uint32_t>> vertex_faces() const;

    [[nodiscard]] double total_area() const;

private:
    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    std::vector<bool> boundary_;
};

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

} // namespace papilla
