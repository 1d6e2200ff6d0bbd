#pragma once

#include "papilla/geometry.hpp"
#include "papilla/sampling.hpp"

#include <json.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace papilla {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Bar {
    double birth = 0.0;
    double death = kInfinity;
    /// True when the real death lies beyond the filtration threshold and `death`
    /// was truncated to it (or set to infinity).
    bool censored = false;

    [[nodiscard]] double persistence() const { return death - birth; }
    [[nodiscard]] bool finite() const { return death < kInfinity; }
    friend bool operator==(const Bar&, const Bar&) = default;
};

struct PersistenceDiagram {
    std::vector<Bar> dim0;
    std::vector<Bar> dim1;
    double t_max = kInfinity;
};

struct RipsEdge {
    std::uint32_t i = 0, j = 0; // i < j
    double length = 0.0;
};

/// Rips 1-skeleton up to t_max plus the dense distance matrix used to
/// enumerate triangles on demand.
struct RipsFiltration {
    std::size_t n = 0;
    double t_max = kInfinity;
    std::vector<RipsEdge> edges; // sorted by (length, i, j)
    std::vector<double> distance; // n * n, row-major

    [[nodiscard]] double dist(std::size_t a, std::size_t b) const { return distance[a * n + b]; }
};

/// Throws DataError for fewer than 2 points or t_max <= 0.
RipsFiltration build_filtration(const PointCloud& points, double t_max);

/// H0 of the filtration: deaths are minimum-spanning-forest edge lengths.
/// Components still separate at t_max keep one (0, inf) bar; any further
/// survivors are truncated at t_max and marked censored.
std::vector<Bar> compute_h0(const RipsFiltration& filt);

/// H0 of the full Rips filtration (t_max = infinity). A single point gives (0, inf).
std::vector<Bar> compute_h0(const PointCloud& points);

struct H1Options {
    /// Upper bound on edges plus triangles held in memory at once during reduction.
    std::size_t simplex_cap = 50'000'000;
};

/// H1 over Z/2 by reducing the coboundary matrix of the Rips 2-skeleton
/// (triangle value = longest side). Columns of edges that kill an H0 class are
/// cleared up front, triangles are generated from the distance matrix rather
/// than stored, and columns whose first cofacet shares their diameter and is
/// still free are paired without building the column.
///
/// The reduction runs on a single thread: every column depends on the pivots
/// of all columns processed before it. Separate diagrams may be computed
/// concurrently. Throws NumericError when the simplex cap is exceeded.
std::vector<Bar> compute_h1(const RipsFiltration& filt, const H1Options& options = {});

struct DiagramConfig {
    std::size_t n_subsample = 1000;
    std::uint64_t seed = 0;
    SubsampleMethod method = SubsampleMethod::uniform;
    /// Defaults to the diameter of the (subsampled) cloud so no H1 bar is censored.
    std::optional<double> t_max;
    H1Options h1;
};

/// Subsample, then H0 + H1 with zero-length bars removed.
PersistenceDiagram diagram(const PointCloud& points, const DiagramConfig& cfg = {});

double diameter(const PointCloud& points);

/// {dim0: [[b, d], ...], dim1: [...], t_max, censored: {dim0: [...], dim1: [...]}}
/// with the string "inf" standing for an infinite value.
nlohmann::ordered_json to_json(const PersistenceDiagram& diagram);
PersistenceDiagram diagram_from_json(const nlohmann::json& j);

} // namespace papilla
