#include "papilla/sampling.hpp"
#include "papilla/error.hpp"
#include "papilla/random.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace papilla {

namespace {

std::vector<std::size_t> uniform_indices(std::size_t total, std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first n slots end up as a uniform n-subset.
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = i + uniform_index(rng, total - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return idx;
}

std::vector<std::size_t> farthest_indices(const std::vector<Vec3>& pts, std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx;
    idx.reserve(n);
    std::vector<double> dist(pts.size(), std::numeric_limits<double>::infinity());
    std::size_t current = uniform_index(rng, pts.size());
    for (std::size_t k = 0; k < n; ++k) {
        idx.push_back(current);
        std::size_t next = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            dist[i] = std::min(dist[i], (pts[i] - pts[current]).squaredNorm());
            if (dist[i] > best) {
                best = dist[i];
                next = i;
            }
        }
        current = next;
    }
    return idx;
}

} // namespace

PointCloud subsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed, SubsampleMethod method) {
    if (n == 0) throw DataError("subsample size must be at least 1");
    if (cloud.size() <= n) return cloud;
    auto rng = make_rng(seed);
    auto idx = method == SubsampleMethod::uniform ? uniform_indices(cloud.size(), n, rng)
                                                  : farthest_indices(cloud.points, n, rng);
    std::sort(idx.begin(), idx.end());
    PointCloud out;
    out.points.reserve(n);
    for (auto i : idx) out.points.push_back(cloud.points[i]);
    return out;
}

} // namespace papilla
