#include "papilla/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace papilla {

SpatialIndex::SpatialIndex(std::span<const Vec3> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
        build(0, static_cast<std::uint32_t>(points_.size()));
    }
}

std::uint32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo = points_[order_[begin]];
    node.hi = node.lo;
    for (auto i = begin; i < end; ++i) {
        node.lo = node.lo.cwiseMin(points_[order_[i]]);
        node.hi = node.hi.cwiseMax(points_[order_[i]]);
    }
    if (end - begin > leaf_size_) {
        int axis = 0;
        (node.hi - node.lo).maxCoeff(&axis);
        if (node.hi[axis] > node.lo[axis]) {
            const auto mid = begin + (end - begin) / 2;
            std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                             [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
            node.axis = axis;
            node.split = points_[order_[mid]][axis];
            node.left = build(begin, mid);
            node.right = build(mid, end);
        }
    }
    nodes_[id] = node;
    return id;
}

namespace {

double box_distance_sq(const Vec3& p, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
    const Eigen::Vector3d below = (lo - p).cwiseMax(0.0);
    const Eigen::Vector3d above = (p - hi).cwiseMax(0.0);
    return below.squaredNorm() + above.squaredNorm();
}

} // namespace

std::vector<std::uint32_t> SpatialIndex::radius_query(const Vec3& center, double radius) const {
    std::vector<std::uint32_t> out;
    if (nodes_.empty() || radius < 0.0) return out;
    const double r2 = radius * radius;
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
        const auto& node = nodes_[stack.back()];
        stack.pop_back();
        if (box_distance_sq(center, node.lo, node.hi) > r2) continue;
        if (node.axis < 0) {
            for (auto i = node.begin; i < node.end; ++i) {
                const auto idx = order_[i];
                if ((points_[idx] - center).squaredNorm() <= r2) out.push_back(idx);
            }
            continue;
        }
        stack.push_back(node.left);
        stack.push_back(node.right);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::uint32_t> SpatialIndex::knn_query(const Vec3& center, std::size_t k) const {
    using Entry = std::pair<double, std::uint32_t>;
    std::priority_queue<Entry> best; // max-heap on (distance, index)
    if (nodes_.empty() || k == 0) return {};
    using Pending = std::pair<double, std::uint32_t>;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> frontier;
    frontier.emplace(box_distance_sq(center, nodes_[0].lo, nodes_[0].hi), 0);
    while (!frontier.empty()) {
        const auto [d2, id] = frontier.top();
        frontier.pop();
        if (best.size() == k && d2 > best.top().first) break;
        const auto& node = nodes_[id];
        if (node.axis < 0) {
            for (auto i = node.begin; i < node.end; ++i) {
                const Entry e{(points_[order_[i]] - center).squaredNorm(), order_[i]};
                if (best.size() < k) best.push(e);
                else if (e < best.top()) {
                    best.pop();
                    best.push(e);
                }
            }
            continue;
        }
        for (auto child : {node.left, node.right})
            frontier.emplace(box_distance_sq(center, nodes_[child].lo, nodes_[child].hi), child);
    }
    std::vector<std::uint32_t> out(best.size());
    for (auto i = out.size(); i-- > 0;) {
        out[i] = best.top().second;
        best.pop();
    }
    return out;
}

} // namespace papilla
