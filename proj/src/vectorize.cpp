#include "papilla/vectorize.hpp"
#include "papilla/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace papilla {

namespace {

std::vector<double> finite_lengths(std::span<const Bar> bars) {
    std::vector<double> out;
    out.reserve(bars.size());
    for (const auto& b : bars)
        if (b.finite()) out.push_back(b.persistence());
    return out;
}

std::vector<Bar> finite_bars(std::span<const Bar> bars) {
    std::vector<Bar> out;
    for (const auto& b : bars)
        if (b.finite()) out.push_back(b);
    return out;
}

constexpr double kHalfSqrt2 = std::numbers::sqrt2 / 2.0;

} // namespace

double persistent_entropy(std::span<const Bar> bars) {
    const auto lengths = finite_lengths(bars);
    double total = 0.0;
    for (double l : lengths) total += l;
    if (!(total > 0.0)) return 0.0;
    double h = 0.0;
    for (double l : lengths) {
        if (l <= 0.0) continue;
        const double p = l / total;
        h -= p * std::log(p);
    }
    return h;
}

std::size_t short_bars(std::span<const Bar> bars, double threshold) {
    if (!(threshold > 0.0)) throw DataError("short-bar threshold must be positive");
    std::size_t count = 0;
    for (double l : finite_lengths(bars)) count += l < threshold;
    return count;
}

double wasserstein_amplitude(std::span<const Bar> bars, double p) {
    if (!(p >= 1.0)) throw DataError("Wasserstein order must be at least 1");
    const auto lengths = finite_lengths(bars);
    if (lengths.empty()) return 0.0;
    // Normalise by the largest length to keep l^p representable for large p.
    const double top = *std::max_element(lengths.begin(), lengths.end());
    if (!(top > 0.0)) return 0.0;
    double sum = 0.0;
    for (double l : lengths) sum += std::pow(l / top, p);
    return kHalfSqrt2 * top * std::pow(sum, 1.0 / p);
}

double bottleneck_amplitude(std::span<const Bar> bars) {
    double top = 0.0;
    for (double l : finite_lengths(bars)) top = std::max(top, l);
    return kHalfSqrt2 * top;
}

double landscape_amplitude(std::span<const Bar> bars, std::size_t grid_points) {
    if (grid_points < 2) throw DataError("landscape grid needs at least 2 points");
    const auto fin = finite_bars(bars);
    if (fin.empty()) return 0.0;
    double lo = fin.front().birth, hi = fin.front().death;
    for (const auto& b : fin) {
        lo = std::min(lo, b.birth);
        hi = std::max(hi, b.death);
    }
    if (!(hi > lo)) return 0.0;
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    double sum = 0.0;
    for (std::size_t g = 0; g < grid_points; ++g) {
        const double t = lo + step * static_cast<double>(g);
        double lambda = 0.0;
        for (const auto& b : fin) lambda = std::max(lambda, std::min(t - b.birth, b.death - t));
        sum += lambda * lambda;
    }
    return std::sqrt(sum * step);
}

double image_amplitude(std::span<const Bar> bars, const ImageConfig& cfg) {
    if (cfg.bins < 1) throw DataError("persistence image needs at least one bin");
    const auto fin = finite_bars(bars);
    if (fin.empty()) return 0.0;

    double bmin = kInfinity, bmax = -kInfinity, pmin = kInfinity, pmax = -kInfinity;
    for (const auto& b : fin) {
        bmin = std::min(bmin, b.birth);
        bmax = std::max(bmax, b.birth);
        pmin = std::min(pmin, b.persistence());
        pmax = std::max(pmax, b.persistence());
    }
    if (!(pmax > 0.0)) return 0.0;
    const double sigma = cfg.sigma_scale * pmax;

    // A degenerate extent (all values equal) is widened to the largest persistence.
    auto axis = [&](double lo, double hi) {
        if (hi - lo <= 0.0) {
            lo -= 0.5 * pmax;
            hi += 0.5 * pmax;
        }
        const double pad = cfg.padding * (hi - lo);
        return std::pair{lo - pad, hi + pad};
    };
    const auto [x0, x1] = axis(bmin, bmax);
    const auto [y0, y1] = axis(pmin, pmax);
    const double dx = (x1 - x0) / static_cast<double>(cfg.bins);
    const double dy = (y1 - y0) / static_cast<double>(cfg.bins);

    // The Gaussian is separable, so each bar contributes an outer product of two 1D profiles.
    const double inv = 1.0 / (2.0 * sigma * sigma);
    std::vector<double> image(cfg.bins * cfg.bins, 0.0);
    std::vector<double> gx(cfg.bins), gy(cfg.bins);
    for (const auto& b : fin) {
        const double w = b.persistence();
        for (std::size_t k = 0; k < cfg.bins; ++k) {
            const double cx = x0 + (static_cast<double>(k) + 0.5) * dx - b.birth;
            const double cy = y0 + (static_cast<double>(k) + 0.5) * dy - b.persistence();
            gx[k] = std::exp(-cx * cx * inv);
            gy[k] = std::exp(-cy * cy * inv);
        }
        for (std::size_t r = 0; r < cfg.bins; ++r)
            for (std::size_t c = 0; c < cfg.bins; ++c) image[r * cfg.bins + c] += w * gy[r] * gx[c];
    }
    double norm = 0.0;
    for (double v : image) norm += v * v;
    return std::sqrt(norm);
}

std::array<double, TopoFeatures::kCount> TopoFeatures::values() const {
    return {entropy_0,         entropy_1,         short_bars_0,    short_bars_1,    amp_wasserstein_0, amp_wasserstein_1,
            amp_bottleneck_0,  amp_bottleneck_1,  amp_landscape_0, amp_landscape_1, amp_image_0,       amp_image_1};
}

const std::array<std::string_view, TopoFeatures::kCount>& TopoFeatures::names() {
    static const std::array<std::string_view, kCount> n{
        "entropy_0",         "entropy_1",         "short_bars_0",    "short_bars_1",
        "amp_wasserstein_0", "amp_wasserstein_1", "amp_bottleneck_0", "amp_bottleneck_1",
        "amp_landscape_0",   "amp_landscape_1",   "amp_image_0",      "amp_image_1"};
    return n;
}

TopoFeatures topo_features(const PersistenceDiagram& diagram, const TopoConfig& cfg) {
    TopoFeatures f;
    const std::span<const Bar> d0 = diagram.dim0;
    const std::span<const Bar> d1 = diagram.dim1;
    f.entropy_0 = persistent_entropy(d0);
    f.entropy_1 = persistent_entropy(d1);
    f.short_bars_0 = static_cast<double>(short_bars(d0, cfg.short_bar_threshold[0]));
    f.short_bars_1 = static_cast<double>(short_bars(d1, cfg.short_bar_threshold[1]));
    f.amp_wasserstein_0 = wasserstein_amplitude(d0, cfg.wasserstein_p);
    f.amp_wasserstein_1 = wasserstein_amplitude(d1, cfg.wasserstein_p);
    f.amp_bottleneck_0 = bottleneck_amplitude(d0);
    f.amp_bottleneck_1 = bottleneck_amplitude(d1);
    f.amp_landscape_0 = landscape_amplitude(d0, cfg.landscape_grid);
    f.amp_landscape_1 = landscape_amplitude(d1, cfg.landscape_grid);
    f.amp_image_0 = image_amplitude(d0, cfg.image);
    f.amp_image_1 = image_amplitude(d1, cfg.image);
    return f;
}

} // namespace papilla
