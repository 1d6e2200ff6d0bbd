#pragma once

#include "papilla/geometry.hpp"

#include <cstdint>

namespace papilla {

enum class SubsampleMethod { uniform, farthest_point };

/// Returns the cloud unchanged when it has at most n points. Otherwise draws n
/// distinct points (uniformly without replacement by default), kept in their
/// original relative order. Deterministic for a fixed seed. Throws DataError for n == 0.
PointCloud subsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed,
                     SubsampleMethod method = SubsampleMethod::uniform);

} // namespace papilla
