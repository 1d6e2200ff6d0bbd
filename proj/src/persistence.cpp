#include "papilla/persistence.hpp"
#include "papilla/error.hpp"
#include "papilla/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <unordered_map>

namespace papilla {

namespace {

// Filtration order shared by H0 and H1: diameter ascending, then colexicographic
// simplex index descending. Clearing is only valid if both dimensions agree on it.
struct Entry {
    double diam;
    std::uint64_t index;
};

constexpr bool earlier(const Entry& a, const Entry& b) {
    return a.diam < b.diam || (a.diam == b.diam && a.index > b.index);
}

struct LaterFirst {
    bool operator()(const Entry& a, const Entry& b) const { return earlier(b, a); }
};

using CofacetHeap = std::priority_queue<Entry, std::vector<Entry>, LaterFirst>;

class Binomials {
public:
    explicit Binomials(std::size_t n) : c2_(n + 1), c3_(n + 1) {
        for (std::uint64_t x = 0; x <= n; ++x) {
            c2_[x] = x < 2 ? 0 : x * (x - 1) / 2;
            c3_[x] = x < 3 ? 0 : x * (x - 1) * (x - 2) / 6;
        }
    }
    [[nodiscard]] std::uint64_t edge(std::uint64_t i, std::uint64_t j) const { return c2_[j] + i; }
    // Colex index of the triangle {i, j, k} with i < j and k distinct from both.
    [[nodiscard]] std::uint64_t triangle(std::uint64_t i, std::uint64_t j, std::uint64_t k) const {
        if (k > j) return c3_[k] + c2_[j] + i;
        if (k > i) return c3_[j] + c2_[k] + i;
        return c3_[j] + c2_[i] + k;
    }

private:
    std::vector<std::uint64_t> c2_, c3_;
};

struct OrderedEdge {
    std::uint32_t i, j;
    double diam;
    std::uint64_t index;
};

std::vector<OrderedEdge> filtration_order(const RipsFiltration& filt, const Binomials& binom) {
    std::vector<OrderedEdge> edges;
    edges.reserve(filt.edges.size());
    for (const auto& e : filt.edges) edges.push_back({e.i, e.j, e.length, binom.edge(e.i, e.j)});
    std::sort(edges.begin(), edges.end(), [](const OrderedEdge& a, const OrderedEdge& b) {
        return earlier({a.diam, a.index}, {b.diam, b.index});
    });
    return edges;
}

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0u); }
    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    bool unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint8_t> rank_;
};

// Runs Kruskal in filtration order. Returns the H0 bars and marks the edges that
// killed a component; those columns are zero in the H1 coboundary reduction.
std::vector<Bar> zero_dim_pairs(const RipsFiltration& filt, const std::vector<OrderedEdge>& edges,
                                std::vector<bool>* death_edges) {
    UnionFind uf(filt.n);
    std::vector<Bar> bars;
    bars.reserve(filt.n);
    if (death_edges) death_edges->assign(edges.size(), false);
    for (std::size_t c = 0; c < edges.size(); ++c) {
        if (!uf.unite(edges[c].i, edges[c].j)) continue;
        bars.push_back({0.0, edges[c].diam, false});
        if (death_edges) (*death_edges)[c] = true;
    }
    const std::size_t survivors = filt.n - bars.size();
    for (std::size_t s = 0; s < survivors; ++s) {
        if (s == 0 || !(filt.t_max < kInfinity)) bars.push_back({0.0, kInfinity, s > 0});
        else bars.push_back({0.0, filt.t_max, true});
    }
    return bars;
}

} // namespace

RipsFiltration build_filtration(const PointCloud& points, double t_max) {
    if (points.size() < 2) throw DataError("Rips filtration needs at least 2 points");
    if (!(t_max > 0.0)) throw DataError("filtration threshold must be positive");
    RipsFiltration filt;
    filt.n = points.size();
    filt.t_max = t_max;
    filt.distance.assign(filt.n * filt.n, 0.0);
    for (std::size_t a = 0; a < filt.n; ++a)
        for (std::size_t b = a + 1; b < filt.n; ++b) {
            const double d = (points.points[a] - points.points[b]).norm();
            filt.distance[a * filt.n + b] = d;
            filt.distance[b * filt.n + a] = d;
            if (d <= t_max)
                filt.edges.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), d});
        }
    std::sort(filt.edges.begin(), filt.edges.end(), [](const RipsEdge& x, const RipsEdge& y) {
        if (x.length != y.length) return x.length < y.length;
        if (x.i != y.i) return x.i < y.i;
        return x.j < y.j;
    });
    return filt;
}

std::vector<Bar> compute_h0(const RipsFiltration& filt) {
    const Binomials binom(filt.n);
    return zero_dim_pairs(filt, filtration_order(filt, binom), nullptr);
}

std::vector<Bar> compute_h0(const PointCloud& points) {
    if (points.empty()) throw DataError("H0 of an empty point set");
    if (points.size() == 1) return {Bar{0.0, kInfinity, false}};
    return compute_h0(build_filtration(points, kInfinity));
}

std::vector<Bar> compute_h1(const RipsFiltration& filt, const H1Options& options) {
    const std::size_t n = filt.n;
    const Binomials binom(n);
    const auto edges = filtration_order(filt, binom);
    std::vector<bool> cleared;
    zero_dim_pairs(filt, edges, &cleared);

    if (edges.size() > options.simplex_cap)
        throw NumericError("Rips complex exceeds the simplex cap: " + std::to_string(edges.size()) + " edges");

    const double t_max = filt.t_max;
    std::unordered_map<std::uint64_t, std::uint32_t> pivot_of; // triangle -> column
    pivot_of.reserve(edges.size());
    std::vector<std::vector<std::uint32_t>> reduction(edges.size());
    std::size_t stored_entries = 0;
    std::vector<Bar> bars;

    auto push_coboundary = [&](CofacetHeap& heap, std::uint32_t column) {
        const auto& e = edges[column];
        const double* row_i = &filt.distance[e.i * n];
        const double* row_j = &filt.distance[e.j * n];
        for (std::uint32_t k = 0; k < n; ++k) {
            if (k == e.i || k == e.j) continue;
            const double diam = std::max({e.diam, row_i[k], row_j[k]});
            if (diam <= t_max) heap.push({diam, binom.triangle(e.i, e.j, k)});
        }
    };

    // Pops the earliest entry with odd multiplicity (Z/2 cancellation).
    auto pop_pivot = [](CofacetHeap& heap) -> std::optional<Entry> {
        while (!heap.empty()) {
            const Entry top = heap.top();
            heap.pop();
            bool odd = true;
            while (!heap.empty() && heap.top().index == top.index) {
                heap.pop();
                odd = !odd;
            }
            if (odd) return top;
        }
        return std::nullopt;
    };

    CofacetHeap heap;
    std::vector<std::uint32_t> working;
    for (std::size_t c = edges.size(); c-- > 0;) {
        if (cleared[c]) continue;
        const auto column = static_cast<std::uint32_t>(c);
        const auto& e = edges[c];

        // Earliest cofacet with the same diameter: the largest colex index, so
        // the first hit when k runs downwards.
        const double* row_i = &filt.distance[e.i * n];
        const double* row_j = &filt.distance[e.j * n];
        std::optional<std::uint64_t> zero_cofacet;
        for (std::size_t k = n; k-- > 0;) {
            if (k == e.i || k == e.j) continue;
            if (row_i[k] <= e.diam && row_j[k] <= e.diam) {
                zero_cofacet = binom.triangle(e.i, e.j, k);
                break;
            }
        }
        if (zero_cofacet && !pivot_of.contains(*zero_cofacet)) {
            pivot_of.emplace(*zero_cofacet, column);
            continue;
        }

        heap = CofacetHeap();
        working.clear();
        push_coboundary(heap, column);
        std::optional<Entry> pivot;
        while (true) {
            pivot = pop_pivot(heap);
            if (!pivot) break;
            heap.push(*pivot);
            const auto it = pivot_of.find(pivot->index);
            if (it == pivot_of.end()) break;
            const auto other = it->second;
            working.push_back(other);
            push_coboundary(heap, other);
            for (auto extra : reduction[other]) {
                working.push_back(extra);
                push_coboundary(heap, extra);
            }
            if (edges.size() + heap.size() + stored_entries > options.simplex_cap)
                throw NumericError("Rips reduction exceeds the simplex cap of " + std::to_string(options.simplex_cap));
        }

        if (!pivot) {
            bars.push_back({e.diam, t_max, true});
            continue;
        }
        if (pivot->diam > e.diam) bars.push_back({e.diam, pivot->diam, false});
        pivot_of.emplace(pivot->index, column);

        // Keep the Z/2 sum of added columns so this column can be replayed later.
        std::sort(working.begin(), working.end());
        auto& record = reduction[c];
        for (std::size_t a = 0; a < working.size();) {
            std::size_t b = a;
            while (b < working.size() && working[b] == working[a]) ++b;
            if ((b - a) % 2 == 1) record.push_back(working[a]);
            a = b;
        }
        stored_entries += record.size();
    }
    return bars;
}

double diameter(const PointCloud& points) {
    double best = 0.0;
    for (std::size_t a = 0; a < points.size(); ++a)
        for (std::size_t b = a + 1; b < points.size(); ++b)
            best = std::max(best, (points.points[a] - points.points[b]).squaredNorm());
    return std::sqrt(best);
}

PersistenceDiagram diagram(const PointCloud& points, const DiagramConfig& cfg) {
    if (points.empty()) throw DataError("persistence diagram of an empty cloud");
    const auto cloud = subsample(points, cfg.n_subsample, cfg.seed, cfg.method);
    PersistenceDiagram out;
    if (cloud.size() == 1) {
        out.dim0.push_back({0.0, kInfinity, false});
        out.t_max = cfg.t_max.value_or(0.0);
        return out;
    }
    double t_max = cfg.t_max.value_or(diameter(cloud));
    if (!(t_max > 0.0)) {
        // All points coincide: one component, nothing else.
        out.dim0.push_back({0.0, kInfinity, false});
        out.t_max = 0.0;
        return out;
    }
    const auto filt = build_filtration(cloud, t_max);
    out.t_max = t_max;
    for (const auto& bar : compute_h0(filt))
        if (bar.death > bar.birth) out.dim0.push_back(bar);
    for (const auto& bar : compute_h1(filt, cfg.h1))
        if (bar.death > bar.birth) out.dim1.push_back(bar);
    return out;
}

namespace {

nlohmann::json value_json(double v) { return v < kInfinity ? nlohmann::json(v) : nlohmann::json("inf"); }

double json_value(const nlohmann::json& v) {
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return kInfinity;
        throw DataError("diagram value '" + v.get<std::string>() + "' is not a number");
    }
    return v.get<double>();
}

} // namespace

nlohmann::ordered_json to_json(const PersistenceDiagram& d) {
    nlohmann::ordered_json j;
    auto pairs = [](const std::vector<Bar>& bars) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& b : bars) arr.push_back({value_json(b.birth), value_json(b.death)});
        return arr;
    };
    auto flags = [](const std::vector<Bar>& bars) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& b : bars) arr.push_back(b.censored);
        return arr;
    };
    j["dim0"] = pairs(d.dim0);
    j["dim1"] = pairs(d.dim1);
    j["t_max"] = value_json(d.t_max);
    j["censored"] = {{"dim0", flags(d.dim0)}, {"dim1", flags(d.dim1)}};
    return j;
}

PersistenceDiagram diagram_from_json(const nlohmann::json& j) {
    PersistenceDiagram d;
    try {
        auto read = [&](const char* key, std::vector<Bar>& out) {
            const auto& pairs = j.at(key);
            const auto& flags = j.at("censored").at(key);
            if (flags.size() != pairs.size()) throw DataError(std::string("censored flags do not match ") + key);
            for (std::size_t k = 0; k < pairs.size(); ++k)
                out.push_back({json_value(pairs[k].at(0)), json_value(pairs[k].at(1)), flags[k].get<bool>()});
        };
        read("dim0", d.dim0);
        read("dim1", d.dim1);
        d.t_max = json_value(j.at("t_max"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed diagram JSON: ") + e.what());
    }
    return d;
}

} // namespace papilla
