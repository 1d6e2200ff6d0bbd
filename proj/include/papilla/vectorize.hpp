#pragma once

#include "papilla/persistence.hpp"

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace papilla {

// All summaries take the bars of one homology dimension and ignore bars with an
// infinite death.

/// -Σ p ln p with p = length / total length. Zero for an empty or zero-length set.
double persistent_entropy(std::span<const Bar> bars);

/// Number of finite bars shorter than `threshold`.
std::size_t short_bars(std::span<const Bar> bars, double threshold);

/// (√2/2) (Σ length^p)^(1/p).
double wasserstein_amplitude(std::span<const Bar> bars, double p = 2.0);

/// (√2/2) max length.
double bottleneck_amplitude(std::span<const Bar> bars);

/// L2 norm of the first landscape λ₁, sampled at `grid_points` evenly spaced
/// values over [min birth, max death]: sqrt(Σ λ₁(t)² Δt). Scales as c^{3/2}
/// when the diagram is scaled by c.
double landscape_amplitude(std::span<const Bar> bars, std::size_t grid_points = 100);

struct ImageConfig {
    std::size_t bins = 100;
    double sigma_scale = 0.1; // kernel width relative to the largest persistence
    double padding = 0.05;    // relative padding of the grid extents
};

/// L2 norm of a persistence image: bars become (birth, persistence) points
/// weighted by persistence and smoothed with an unnormalised Gaussian on a
/// bins x bins raster spanning the padded point extents.
double image_amplitude(std::span<const Bar> bars, const ImageConfig& cfg = {});

struct TopoConfig {
    std::array<double, 2> short_bar_threshold{10.0, 10.0}; // µm, per dimension
    double wasserstein_p = 2.0;
    std::size_t landscape_grid = 100;
    ImageConfig image;
};

struct TopoFeatures {
    double entropy_0 = 0.0, entropy_1 = 0.0;
    double short_bars_0 = 0.0, short_bars_1 = 0.0;
    double amp_wasserstein_0 = 0.0, amp_wasserstein_1 = 0.0;
    double amp_bottleneck_0 = 0.0, amp_bottleneck_1 = 0.0;
    double amp_landscape_0 = 0.0, amp_landscape_1 = 0.0;
    double amp_image_0 = 0.0, amp_image_1 = 0.0;

    static constexpr std::size_t kCount = 12;
    /// Values in the order of `names()`.
    [[nodiscard]] std::array<double, kCount> values() const;
    static const std::array<std::string_view, kCount>& names();
};

TopoFeatures topo_features(const PersistenceDiagram& diagram, const TopoConfig& cfg = {});

} // namespace papilla
