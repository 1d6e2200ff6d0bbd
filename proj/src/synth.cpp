#include "papilla/synth.hpp"
#include "papilla/error.hpp"
#include "papilla/kdtree.hpp"
#include "papilla/parallel.hpp"
#include "papilla/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace papilla {

void SynthConfig::validate() const {
    if (!(fungiform_diameter > 0.0 && filiform_diameter > 0.0)) throw DataError("papilla diameters must be positive");
    if (!(fungiform_height > 0.0 && filiform_height > 0.0)) throw DataError("papilla heights must be positive");
    if (!(dome_exponent >= 1.0)) throw DataError("dome exponent must be at least 1");
    if (!(dome_sag >= 0.0 && dome_sag < 1.0)) throw DataError("dome sag must lie in [0, 1)");
    if (spike_count < 3) throw DataError("spike_count must be at least 3");
    if (!(spike_height > 0.0 && spike_height < 1.0)) throw DataError("spike_height must lie in (0, 1)");
    if (!(filiform_density >= 0.0 && fungiform_density >= 0.0)) throw DataError("densities must be non-negative");
    if (!(noise_amplitude >= 0.0)) throw DataError("noise amplitude must be non-negative");
    if (noise_amplitude >= std::min(fungiform_height, filiform_height))
        throw DataError("noise amplitude must stay below the papilla heights");
    if (!(none_relief >= noise_amplitude && none_relief <= filiform_height / 8.0))
        throw DataError("none_relief must lie between noise_amplitude and 1/8 of the filiform height");
    if (!(resolution > 0.0)) throw DataError("resolution must be positive");
    if (!(patch_half_size > 0.0)) throw DataError("patch size must be positive");
    if (!(participant_jitter >= 0.0 && participant_jitter < 1.0 && instance_jitter >= 0.0 && instance_jitter < 1.0))
        throw DataError("jitter fractions must lie in [0, 1)");
    if (!(placement_gap >= 0.0)) throw DataError("placement gap must be non-negative");
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Smooth undulation: a few long plane waves, normalised to peak amplitude.
struct Undulation {
    struct Wave {
        double kx, ky, phase, weight;
    };
    std::vector<Wave> waves;
    double scale = 0.0;

    Undulation(double amplitude, std::uint64_t seed) {
        if (amplitude <= 0.0) return;
        auto rng = make_rng(derive_seed(seed, "undulation"));
        double total = 0.0;
        for (int k = 0; k < 6; ++k) {
            const double wavelength = uniform(rng, 400.0, 1500.0);
            const double dir = uniform(rng, 0.0, kTwoPi);
            const double kk = kTwoPi / wavelength;
            Wave w{kk * std::cos(dir), kk * std::sin(dir), uniform(rng, 0.0, kTwoPi), uniform(rng, 0.5, 1.0)};
            total += w.weight;
            waves.push_back(w);
        }
        scale = amplitude / total;
    }

    [[nodiscard]] double operator()(double x, double y) const {
        double z = 0.0;
        for (const auto& w : waves) z += w.weight * std::sin(w.kx * x + w.ky * y + w.phase);
        return scale * z;
    }
};

struct Shape {
    Placement p;
    int spikes = 6;
    double spike_height = 0.7;
    double dome_exponent = 16.0;
    double dome_sag = 0.3;
    std::vector<double> rho_table, area_table; // surface area inside radius ρ, for the warp

    [[nodiscard]] double radial(double rho) const {
        const double R = p.radius, h = p.height;
        if (rho >= R) return 0.0;
        if (p.type == Label::fungiform)
            return h * (1.0 - dome_sag * (rho / R) * (rho / R)) * (1.0 - std::pow(rho / R, dome_exponent));
        const double mound = 0.35 * h * (1.0 - (rho / R) * (rho / R));
        const double cone = h * (1.0 - rho / (0.4 * R));
        return std::max(mound, cone);
    }

    // Height above the base at local offset (dx, dy) from the centre.
    [[nodiscard]] double height(double dx, double dy) const {
        const double rho = std::hypot(dx, dy);
        double z = radial(rho);
        if (p.type != Label::filiform || rho >= p.radius) return z;
        const double R = p.radius;
        const double rs = 0.22 * R, ring = 0.62 * R, tilt = 0.12 * R, hs = spike_height * p.height;
        for (int k = 0; k < spikes; ++k) {
            const double theta = p.rotation + kTwoPi * k / spikes;
            const double ux = std::cos(theta), uy = std::sin(theta);
            const double wx = dx - ring * ux, wy = dy - ring * uy;
            const double ww = wx * wx + wy * wy;
            if (ww >= rs * rs) continue;
            // Oblique cone: section at level λ is a disc of radius rs(1-λ)
            // centred at λ * tilt * u. Solve |w - λv|² = rs²(1-λ)² for λ in [0, 1].
            const double vx = tilt * ux, vy = tilt * uy;
            const double a = vx * vx + vy * vy - rs * rs;
            const double b = wx * vx + wy * vy - rs * rs;
            const double c = ww - rs * rs;
            const double disc = std::max(0.0, b * b - a * c);
            double lambda = 1.0;
            for (double root : {(b + std::sqrt(disc)) / a, (b - std::sqrt(disc)) / a})
                if (root >= 0.0 && root <= 1.0) lambda = std::min(lambda, root);
            z = std::max(z, lambda * hs);
        }
        return z;
    }

    void build_warp() {
        constexpr int n = 2048;
        rho_table.resize(n + 1);
        area_table.resize(n + 1);
        double prev_z = radial(0.0);
        for (int k = 0; k <= n; ++k) {
            const double rho = p.radius * k / n;
            rho_table[static_cast<std::size_t>(k)] = rho;
            if (k == 0) {
                area_table[0] = 0.0;
                continue;
            }
            const double z = radial(std::min(rho, p.radius * (1.0 - 1e-12)));
            const double mid = rho - 0.5 * p.radius / n;
            area_table[static_cast<std::size_t>(k)] = area_table[static_cast<std::size_t>(k - 1)] +
                                                      kTwoPi * mid * std::hypot(p.radius / n, z - prev_z);
            prev_z = z;
        }
    }

    // Maps a planar distance u < R to the radius that encloses the same
    // fraction of surface area, so grid vertices spread evenly over the slopes.
    [[nodiscard]] double warp(double u) const {
        const double target = (u / p.radius) * (u / p.radius) * area_table.back();
        const auto it = std::lower_bound(area_table.begin(), area_table.end(), target);
        if (it == area_table.begin()) return 0.0;
        if (it == area_table.end()) return p.radius;
        const auto k = static_cast<std::size_t>(it - area_table.begin());
        const double t = (target - area_table[k - 1]) / (area_table[k] - area_table[k - 1]);
        return rho_table[k - 1] + t * (rho_table[k] - rho_table[k - 1]);
    }
};

Shape make_shape(const Placement& p, const SynthConfig& cfg) {
    Shape s;
    s.p = p;
    s.spikes = cfg.spike_count;
    s.spike_height = cfg.spike_height;
    s.dome_exponent = cfg.dome_exponent;
    s.dome_sag = cfg.dome_sag;
    s.build_warp();
    return s;
}

// Grid [x0, x0 + (nx-1) res] x [y0, y0 + (ny-1) res] with shapes composed on
// the undulating base. Footprints must not overlap.
TriangleMesh build_surface(double x0, double y0, std::size_t nx, std::size_t ny, double res,
                           const std::vector<Shape>& shapes, const Undulation& base) {
    double max_r = 0.0;
    for (const auto& s : shapes) max_r = std::max(max_r, s.p.radius);
    const double cell = std::max(2.0 * max_r, res);
    const auto cx = static_cast<std::size_t>(std::ceil(static_cast<double>(nx) * res / cell)) + 1;
    const auto cy = static_cast<std::size_t>(std::ceil(static_cast<double>(ny) * res / cell)) + 1;
    std::vector<std::vector<std::size_t>> buckets(cx * cy);
    auto bucket_of = [&](double x, double y) {
        const auto bx = static_cast<std::size_t>(std::clamp((x - x0) / cell, 0.0, static_cast<double>(cx - 1)));
        const auto by = static_cast<std::size_t>(std::clamp((y - y0) / cell, 0.0, static_cast<double>(cy - 1)));
        return std::pair{bx, by};
    };
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto [bx, by] = bucket_of(shapes[i].p.apex.x(), shapes[i].p.apex.y());
        buckets[by * cx + bx].push_back(i);
    }

    std::vector<Vec3> vertices(nx * ny);
    parallel_for(ny, [&](std::size_t j) {
        for (std::size_t i = 0; i < nx; ++i) {
            double x = x0 + static_cast<double>(i) * res;
            double y = y0 + static_cast<double>(j) * res;
            const Shape* owner = nullptr;
            const auto [bx, by] = bucket_of(x, y);
            for (std::size_t yy = by > 0 ? by - 1 : 0; yy <= std::min(cy - 1, by + 1) && !owner; ++yy)
                for (std::size_t xx = bx > 0 ? bx - 1 : 0; xx <= std::min(cx - 1, bx + 1) && !owner; ++xx)
                    for (auto s : buckets[yy * cx + xx])
                        if (std::hypot(x - shapes[s].p.apex.x(), y - shapes[s].p.apex.y()) < shapes[s].p.radius) {
                            owner = &shapes[s];
                            break;
                        }
            double z = 0.0;
            if (owner) {
                const double dx = x - owner->p.apex.x(), dy = y - owner->p.apex.y();
                const double u = std::hypot(dx, dy);
                if (u > 0.0) {
                    const double f = owner->warp(u) / u;
                    x = owner->p.apex.x() + f * dx;
                    y = owner->p.apex.y() + f * dy;
                }
                const double shape = owner->height(x - owner->p.apex.x(), y - owner->p.apex.y());
                // The undulation fades towards the apex so the apex stays the peak.
                z = shape + base(x, y) * (1.0 - shape / owner->p.height);
            } else {
                z = base(x, y);
            }
            vertices[j * nx + i] = Vec3(x, y, z);
        }
    });

    std::vector<Face> faces;
    faces.reserve(2 * (nx - 1) * (ny - 1));
    for (std::size_t j = 0; j + 1 < ny; ++j)
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const auto a = static_cast<std::uint32_t>(j * nx + i), b = a + 1;
            const auto c = static_cast<std::uint32_t>(a + nx), d = c + 1;
            if ((i + j) % 2 == 0) {
                faces.push_back({a, b, d});
                faces.push_back({a, d, c});
            } else {
                faces.push_back({a, b, c});
                faces.push_back({b, d, c});
            }
        }
    return TriangleMesh::build(std::move(vertices), std::move(faces));
}

std::size_t grid_count(double extent, double res) {
    return static_cast<std::size_t>(std::floor(extent / res + 1e-9)) + 1;
}

TriangleMesh single_instance(const SynthConfig& cfg, std::uint64_t seed, Label type) {
    cfg.validate();
    const auto half = static_cast<double>(grid_count(cfg.patch_half_size, cfg.resolution) - 1) * cfg.resolution;
    const auto n = 2 * grid_count(cfg.patch_half_size, cfg.resolution) - 1;
    std::vector<Shape> shapes;
    if (type != Label::none) {
        Placement p;
        p.type = type;
        p.radius = (type == Label::fungiform ? cfg.fungiform_diameter : cfg.filiform_diameter) / 2.0;
        p.height = type == Label::fungiform ? cfg.fungiform_height : cfg.filiform_height;
        p.apex = Vec3(0.0, 0.0, p.height);
        shapes.push_back(make_shape(p, cfg));
    }
    return build_surface(-half, -half, n, n, cfg.resolution, shapes, Undulation(cfg.noise_amplitude, seed));
}

double jitter(Rng& rng, double fraction) { return 1.0 + uniform(rng, -fraction, fraction); }

bool fits(const std::vector<Placement>& placed, double x, double y, double r, double gap) {
    for (const auto& q : placed)
        if (std::hypot(x - q.apex.x(), y - q.apex.y()) < r + q.radius + gap) return false;
    return true;
}

// Dart throwing of `count` instances with centres in [lo, hi] (per axis, shrunk by the radius).
// Corpus seed points fall within this distance of the target.
constexpr double kSeedSpread = 150.0;

void throw_darts(std::vector<Placement>& placed, Label type, std::size_t count, double radius, double height,
                 const SynthConfig& cfg, Vec3 lo, Vec3 hi, Rng& rng, bool must_fill) {
    std::size_t placed_here = 0;
    const std::size_t max_attempts = 2000 * std::max<std::size_t>(count, 1);
    for (std::size_t attempt = 0; attempt < max_attempts && placed_here < count; ++attempt) {
        const double r = radius * jitter(rng, cfg.instance_jitter);
        const double h = height * jitter(rng, cfg.instance_jitter);
        const double rot = uniform(rng, 0.0, kTwoPi);
        const double xmin = lo.x() + r + cfg.placement_gap, xmax = hi.x() - r - cfg.placement_gap;
        const double ymin = lo.y() + r + cfg.placement_gap, ymax = hi.y() - r - cfg.placement_gap;
        if (xmin > xmax || ymin > ymax) break;
        const double x = uniform(rng, xmin, xmax), y = uniform(rng, ymin, ymax);
        if (!fits(placed, x, y, r, cfg.placement_gap)) continue;
        placed.push_back(Placement{type, Vec3(x, y, h), r, h, rot});
        ++placed_here;
    }
    if (must_fill && placed_here < count)
        throw DataError("density infeasible: placed " + std::to_string(placed_here) + " of " + std::to_string(count) +
                        " " + to_string(type) + " papillae");
}

std::vector<Shape> shapes_for(const std::vector<Placement>& placements, const SynthConfig& cfg) {
    std::vector<Shape> shapes;
    shapes.reserve(placements.size());
    for (const auto& p : placements) shapes.push_back(make_shape(p, cfg));
    return shapes;
}

std::size_t expected_count(double density, double area_um2) {
    return static_cast<std::size_t>(std::llround(density * area_um2 / 1e8));
}

} // namespace

TriangleMesh gen_fungiform(const SynthConfig& cfg, std::uint64_t seed) {
    return single_instance(cfg, seed, Label::fungiform);
}

TriangleMesh gen_filiform(const SynthConfig& cfg, std::uint64_t seed) {
    return single_instance(cfg, seed, Label::filiform);
}

TriangleMesh gen_none(const SynthConfig& cfg, std::uint64_t seed) { return single_instance(cfg, seed, Label::none); }

SyntheticSurface gen_sheet(const SynthConfig& cfg, double width, double height, std::uint64_t seed) {
    cfg.validate();
    if (!(width >= cfg.filiform_diameter && height >= cfg.filiform_diameter))
        throw DataError("sheet must be at least one filiform footprint in each direction");
    auto rng = make_rng(derive_seed(seed, "sheet-placement"));
    std::vector<Placement> placed;
    const double area = width * height;
    const Vec3 lo(0, 0, 0), hi(width, height, 0);
    throw_darts(placed, Label::fungiform, expected_count(cfg.fungiform_density, area), cfg.fungiform_diameter / 2,
                cfg.fungiform_height, cfg, lo, hi, rng, true);
    throw_darts(placed, Label::filiform, expected_count(cfg.filiform_density, area), cfg.filiform_diameter / 2,
                cfg.filiform_height, cfg, lo, hi, rng, true);
    SyntheticSurface out;
    out.mesh = build_surface(0.0, 0.0, grid_count(width, cfg.resolution), grid_count(height, cfg.resolution),
                             cfg.resolution, shapes_for(placed, cfg), Undulation(cfg.noise_amplitude, seed));
    out.placements = std::move(placed);
    return out;
}

std::vector<Participant> make_participants(std::size_t count, const SynthConfig& cfg) {
    std::vector<Participant> out;
    for (std::size_t i = 0; i < count; ++i) {
        auto rng = make_rng(derive_seed(derive_seed(cfg.seed, "participant"), i));
        Participant p;
        std::ostringstream id;
        id << 'P' << (i + 1 < 10 ? "0" : "") << i + 1;
        p.id = id.str();
        p.gender = i % 2 == 0 ? "female" : "male";
        p.age_group = (i / 2) % 2 == 0 ? "younger" : "older";
        p.fungiform_scale = jitter(rng, cfg.participant_jitter);
        p.filiform_scale = jitter(rng, cfg.participant_jitter);
        out.push_back(p);
    }
    return out;
}

std::vector<CorpusEntry> gen_corpus(std::size_t n_per_class, std::size_t participants, const SynthConfig& cfg,
                                    const ExtractionConfig& extraction) {
    cfg.validate();
    extraction.validate();
    if (n_per_class == 0) throw DataError("n_per_class must be at least 1");
    if (participants == 0) throw DataError("participants must be at least 1");
    const auto people = make_participants(participants, cfg);
    const std::array<Label, 3> classes{Label::fungiform, Label::filiform, Label::none};

    std::vector<CorpusEntry> corpus(3 * n_per_class);
    parallel_for(corpus.size(), [&](std::size_t k) {
        const Label type = classes[k / n_per_class];
        const std::size_t index = k % n_per_class;
        const auto& person = people[index % participants];
        const auto seed = derive_seed(cfg.seed, to_string(type) + "/" + std::to_string(index));
        auto rng = make_rng(seed);

        SynthConfig local = cfg;
        local.fungiform_diameter *= person.fungiform_scale;
        local.fungiform_height *= person.fungiform_scale;
        local.filiform_diameter *= person.filiform_scale;
        local.filiform_height *= person.filiform_scale;

        const double half = static_cast<double>(grid_count(cfg.patch_half_size, cfg.resolution) - 1) * cfg.resolution;
        const auto n = 2 * grid_count(cfg.patch_half_size, cfg.resolution) - 1;
        Vec3 target = Vec3::Zero();
        Placement instance;
        if (type != Label::none) {
            const bool fung = type == Label::fungiform;
            instance.type = type;
            instance.radius =
                (fung ? local.fungiform_diameter : local.filiform_diameter) / 2 * jitter(rng, cfg.instance_jitter);
            instance.height = (fung ? local.fungiform_height : local.filiform_height) * jitter(rng, cfg.instance_jitter);
            instance.rotation = uniform(rng, 0.0, kTwoPi);
            const double ox = uniform(rng, -0.5, 0.5) * cfg.resolution, oy = uniform(rng, -0.5, 0.5) * cfg.resolution;
            instance.apex = Vec3(ox, oy, instance.height);
            (fung ? local.fungiform_diameter : local.filiform_diameter) = 2 * instance.radius;
            (fung ? local.fungiform_height : local.filiform_height) = instance.height;
            target = instance.apex;
        }
        ExtractionConfig ecfg = extraction;
        ecfg.ransac.seed = derive_seed(seed, "ransac");
        const double relief =
            type == Label::none ? uniform(rng, cfg.noise_amplitude, cfg.none_relief) : cfg.noise_amplitude;
        if (type == Label::none) local.noise_amplitude = relief;

        // Neighbours come from the same placement process as a sheet. A layout
        // where a taller neighbour captures the extraction is redrawn.
        Segment segment;
        for (int attempt = 0;; ++attempt) {
            std::vector<Placement> placed;
            const Vec3 lo(-half, -half, 0), hi(half, half, 0);
            const double area = 4 * half * half;
            if (type != Label::none) {
                placed.push_back(instance);
                throw_darts(placed, Label::fungiform, expected_count(cfg.fungiform_density, area),
                            cfg.fungiform_diameter / 2 * person.fungiform_scale,
                            cfg.fungiform_height * person.fungiform_scale, cfg, lo, hi, rng, false);
                throw_darts(placed, Label::filiform, expected_count(cfg.filiform_density, area),
                            cfg.filiform_diameter / 2 * person.filiform_scale,
                            cfg.filiform_height * person.filiform_scale, cfg, lo, hi, rng, false);
                // Taller neighbours near the target would capture the extraction.
                const double reach = ecfg.radius + ecfg.delta + 200.0;
                placed.erase(std::remove_if(placed.begin() + 1, placed.end(),
                                            [&](const Placement& q) {
                                                return q.height >= 0.98 * instance.height &&
                                                       std::hypot(q.apex.x() - target.x(),
                                                                  q.apex.y() - target.y()) < reach;
                                            }),
                             placed.end());
            }
            const auto mesh = build_surface(-half, -half, n, n, cfg.resolution, shapes_for(placed, cfg),
                                            Undulation(relief, seed));
            const double angle = uniform(rng, 0.0, kTwoPi);
            const double dist = kSeedSpread * std::sqrt(uniform01(rng));
            const Vec3 seed_point(target.x() + dist * std::cos(angle), target.y() + dist * std::sin(angle), 0.0);
            segment = extract_segment(mesh, seed_point, ecfg);
            if (type == Label::none || (segment.center - target).norm() <= 50.0) break;
            if (attempt == 20)
                throw NumericError("corpus entry " + std::to_string(k) + ": extraction never found its papilla");
        }

        CorpusEntry& e = corpus[k];
        e.segment = std::move(segment);
        std::ostringstream id;
        id << to_string(type) << '_';
        id.width(4);
        id.fill('0');
        id << index + 1;
        e.segment.id = id.str();
        e.segment.label = type;
        e.segment.participant = person.id;
        e.segment.group_attrs = {{"gender", person.gender}, {"age_group", person.age_group}};
        e.true_center = type == Label::none ? e.segment.center : target;
        e.params = local;
    });
    return corpus;
}

namespace {

nlohmann::ordered_json params_json(const SynthConfig& c) {
    return {{"fungiform_diameter", c.fungiform_diameter}, {"fungiform_height", c.fungiform_height},
            {"dome_exponent", c.dome_exponent},           {"dome_sag", c.dome_sag},           {"filiform_diameter", c.filiform_diameter},
            {"filiform_height", c.filiform_height},       {"spike_count", c.spike_count},
            {"spike_height", c.spike_height},             {"noise_amplitude", c.noise_amplitude},
            {"none_relief", c.none_relief},
            {"resolution", c.resolution}};
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

} // namespace

void write_manifest(std::ostream& out, const std::vector<CorpusEntry>& corpus) {
    out << "id,class,participant,true_center_x,true_center_y,true_center_z,parameters\n";
    out.precision(17);
    for (const auto& e : corpus)
        out << e.segment.id << ',' << to_string(e.segment.label) << ',' << e.segment.participant << ','
            << e.true_center.x() << ',' << e.true_center.y() << ',' << e.true_center.z() << ','
            << csv_quote(params_json(e.params).dump()) << '\n';
}

void save_corpus(const std::filesystem::path& dir, const std::vector<CorpusEntry>& corpus) {
    const auto seg_dir = dir / "segments";
    std::filesystem::create_directories(seg_dir);
    for (const auto& e : corpus) save_segment(seg_dir, e.segment);
    std::ofstream out(dir / "manifest.csv", std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / "manifest.csv").string());
    write_manifest(out, corpus);
}

void write_placements(std::ostream& out, const std::vector<Placement>& placements) {
    out << "type,x,y,z,radius,height\n";
    out.precision(17);
    for (const auto& p : placements)
        out << to_string(p.type) << ',' << p.apex.x() << ',' << p.apex.y() << ',' << p.apex.z() << ',' << p.radius
            << ',' << p.height << '\n';
}

std::vector<Placement> read_placements(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("type,x,y,z", 0) != 0) throw DataError("placement CSV lacks its header");
    std::vector<Placement> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string type;
        std::string field;
        std::vector<double> v;
        std::getline(ss, type, ',');
        while (std::getline(ss, field, ',')) {
            try {
                v.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw DataError("placement CSV line " + std::to_string(line_no) + ": bad number '" + field + "'");
            }
        }
        if (v.size() != 5) throw DataError("placement CSV line " + std::to_string(line_no) + ": expected 6 fields");
        out.push_back(Placement{parse_label(type), Vec3(v[0], v[1], v[2]), v[3], v[4], 0.0});
    }
    return out;
}

} // namespace papilla
