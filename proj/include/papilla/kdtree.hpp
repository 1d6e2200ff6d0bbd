#pragma once

#include "papilla/geometry.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace papilla {

/// Exact 3D kd-tree. Immutable after construction, so concurrent queries are safe.
class SpatialIndex {
public:
    SpatialIndex() = default;
    explicit SpatialIndex(std::span<const Vec3> points, std::size_t leaf_size = 16);

    /// Indices of all points with |p - center| <= radius, ascending.
    [[nodiscard]] std::vector<std::uint32_t> radius_query(const Vec3& center, double radius) const;

    /// The k nearest points, ordered by distance (ties by index).
    [[nodiscard]] std::vector<std::uint32_t> knn_query(const Vec3& center, std::size_t k) const;

    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] const Vec3& point(std::size_t i) const { return points_[i]; }

private:
    struct Node {
        // Leaf when axis < 0: [begin, end) into order_.
        int axis = -1;
        double split = 0.0;
        std::uint32_t begin = 0, end = 0;
        std::uint32_t left = 0, right = 0;
        Eigen::Vector3d lo, hi;
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end);

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::size_t leaf_size_ = 16;
};

} // namespace papilla
