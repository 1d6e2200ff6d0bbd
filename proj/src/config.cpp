#include "papilla/config.hpp"
#include "papilla/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace papilla {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::string fmt_int(T v) {
    return std::to_string(v);
}

double to_double(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw DataError("'" + s + "' is not a number");
    return v;
}

template <class T>
T to_int(const std::string& s) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw DataError("'" + s + "' is not a valid integer");
    return v;
}

bool to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw DataError("'" + s + "' is not a boolean");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Entry {
    const char* section;
    const char* key;
    std::function<std::string(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, const std::string&)> set;
};

#define PAPILLA_DOUBLE(sec, name, field)                                                                  \
    Entry {                                                                                               \
        sec, name, [](const PipelineConfig& c) { return fmt(c.field); },                                  \
            [](PipelineConfig& c, const std::string& v) { c.field = to_double(v); }                       \
    }
#define PAPILLA_INT(sec, name, field, type)                                                               \
    Entry {                                                                                               \
        sec, name, [](const PipelineConfig& c) { return fmt_int(c.field); },                              \
            [](PipelineConfig& c, const std::string& v) { c.field = to_int<type>(v); }                    \
    }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> list{
        PAPILLA_INT("general", "seed", seed, std::uint64_t),
        PAPILLA_INT("general", "threads", threads, std::size_t),

        PAPILLA_DOUBLE("synth", "fungiform_diameter", synth.fungiform_diameter),
        PAPILLA_DOUBLE("synth", "fungiform_height", synth.fungiform_height),
        PAPILLA_DOUBLE("synth", "dome_exponent", synth.dome_exponent),
        PAPILLA_DOUBLE("synth", "dome_sag", synth.dome_sag),
        PAPILLA_DOUBLE("synth", "filiform_diameter", synth.filiform_diameter),
        PAPILLA_DOUBLE("synth", "filiform_height", synth.filiform_height),
        PAPILLA_INT("synth", "spike_count", synth.spike_count, int),
        PAPILLA_DOUBLE("synth", "spike_height", synth.spike_height),
        PAPILLA_DOUBLE("synth", "filiform_density", synth.filiform_density),
        PAPILLA_DOUBLE("synth", "fungiform_density", synth.fungiform_density),
        PAPILLA_DOUBLE("synth", "placement_gap", synth.placement_gap),
        PAPILLA_DOUBLE("synth", "noise_amplitude", synth.noise_amplitude),
        PAPILLA_DOUBLE("synth", "none_relief", synth.none_relief),
        PAPILLA_DOUBLE("synth", "resolution", synth.resolution),
        PAPILLA_DOUBLE("synth", "patch_half_size", synth.patch_half_size),
        PAPILLA_DOUBLE("synth", "participant_jitter", synth.participant_jitter),
        PAPILLA_DOUBLE("synth", "instance_jitter", synth.instance_jitter),
        PAPILLA_INT("synth", "n_per_class", n_per_class, std::size_t),
        PAPILLA_INT("synth", "participants", participants, std::size_t),
        PAPILLA_DOUBLE("synth", "sheet_width", sheet_width),
        PAPILLA_DOUBLE("synth", "sheet_height", sheet_height),

        PAPILLA_DOUBLE("extraction", "radius", extraction.radius),
        PAPILLA_DOUBLE("extraction", "delta", extraction.delta),
        PAPILLA_INT("extraction", "ransac_iterations", extraction.ransac.iterations, int),
        PAPILLA_DOUBLE("extraction", "ransac_tolerance", extraction.ransac.tolerance),
        Entry{"extraction", "duplicate_radius",
              [](const PipelineConfig& c) {
                  return c.extraction.duplicate_radius ? fmt(*c.extraction.duplicate_radius) : std::string("auto");
              },
              [](PipelineConfig& c, const std::string& v) {
                  if (v == "auto") c.extraction.duplicate_radius.reset();
                  else c.extraction.duplicate_radius = to_double(v);
              }},
        PAPILLA_INT("extraction", "max_segments", max_segments, std::size_t),

        Entry{"features", "groups", [](const PipelineConfig& c) { return format_groups(c.groups); },
              [](PipelineConfig& c, const std::string& v) { c.groups = parse_groups(v); }},
        PAPILLA_DOUBLE("features", "zero_tol", featurize.zero_tol),
        PAPILLA_INT("features", "height_ransac_iterations", featurize.height_ransac.iterations, int),
        PAPILLA_DOUBLE("features", "height_ransac_tolerance", featurize.height_ransac.tolerance),
        PAPILLA_INT("features", "n_subsample", featurize.diagram.n_subsample, std::size_t),
        Entry{"features", "subsample_method",
              [](const PipelineConfig& c) {
                  return std::string(c.featurize.diagram.method == SubsampleMethod::uniform ? "uniform"
                                                                                            : "farthest_point");
              },
              [](PipelineConfig& c, const std::string& v) {
                  if (v == "uniform") c.featurize.diagram.method = SubsampleMethod::uniform;
                  else if (v == "farthest_point") c.featurize.diagram.method = SubsampleMethod::farthest_point;
                  else throw DataError("subsample_method must be uniform or farthest_point");
              }},
        Entry{"features", "t_max",
              [](const PipelineConfig& c) {
                  return c.featurize.diagram.t_max ? fmt(*c.featurize.diagram.t_max) : std::string("auto");
              },
              [](PipelineConfig& c, const std::string& v) {
                  if (v == "auto") c.featurize.diagram.t_max.reset();
                  else c.featurize.diagram.t_max = to_double(v);
              }},
        PAPILLA_INT("features", "simplex_cap", featurize.diagram.h1.simplex_cap, std::size_t),
        PAPILLA_DOUBLE("features", "short_bar_threshold_0", featurize.topo.short_bar_threshold[0]),
        PAPILLA_DOUBLE("features", "short_bar_threshold_1", featurize.topo.short_bar_threshold[1]),
        PAPILLA_DOUBLE("features", "wasserstein_p", featurize.topo.wasserstein_p),
        PAPILLA_INT("features", "landscape_grid", featurize.topo.landscape_grid, std::size_t),
        PAPILLA_INT("features", "image_bins", featurize.topo.image.bins, std::size_t),
        PAPILLA_DOUBLE("features", "image_sigma_scale", featurize.topo.image.sigma_scale),
        PAPILLA_DOUBLE("features", "image_padding", featurize.topo.image.padding),

        Entry{"learn", "label", [](const PipelineConfig& c) { return c.label; },
              [](PipelineConfig& c, const std::string& v) { c.label = v; }},
        Entry{"learn", "protocol", [](const PipelineConfig& c) { return c.protocol; },
              [](PipelineConfig& c, const std::string& v) {
                  if (v != "random-split" && v != "logo") throw DataError("protocol must be random-split or logo");
                  c.protocol = v;
              }},
        Entry{"learn", "group_column", [](const PipelineConfig& c) { return c.group_column; },
              [](PipelineConfig& c, const std::string& v) { c.group_column = v; }},
        PAPILLA_DOUBLE("learn", "test_frac", test_frac),
        PAPILLA_INT("learn", "repeats", repeats, std::size_t),
        PAPILLA_DOUBLE("learn", "correlation_threshold", correlation_threshold),
        Entry{"learn", "classifier", [](const PipelineConfig& c) { return to_string(c.model.kind); },
              [](PipelineConfig& c, const std::string& v) { c.model.kind = parse_model_kind(v); }},
        PAPILLA_DOUBLE("learn", "l2_lambda", model.logistic.l2_lambda),
        PAPILLA_INT("learn", "logistic_max_iter", model.logistic.max_iter, int),
        PAPILLA_DOUBLE("learn", "logistic_tol", model.logistic.tol),
        PAPILLA_DOUBLE("learn", "C", model.rbf.C),
        Entry{"learn", "gamma",
              [](const PipelineConfig& c) { return c.model.rbf.gamma ? fmt(*c.model.rbf.gamma) : std::string("scale"); },
              [](PipelineConfig& c, const std::string& v) {
                  if (v == "scale") c.model.rbf.gamma.reset();
                  else c.model.rbf.gamma = to_double(v);
              }},
        PAPILLA_INT("learn", "rbf_max_iter", model.rbf.max_iter, int),
        PAPILLA_DOUBLE("learn", "rbf_tol", model.rbf.tol),
        PAPILLA_INT("learn", "n_perm", n_perm, std::size_t),
        PAPILLA_INT("learn", "pca_dims", pca_dims, std::size_t),

        Entry{"map", "keep_none", [](const PipelineConfig& c) { return std::string(c.keep_none ? "true" : "false"); },
              [](PipelineConfig& c, const std::string& v) { c.keep_none = to_bool(v); }},
        PAPILLA_DOUBLE("map", "match_tolerance", match_tolerance),
    };
    return list;
}

#undef PAPILLA_DOUBLE
#undef PAPILLA_INT

const Entry& find_entry(const std::string& section, const std::string& key) {
    for (const auto& e : entries())
        if (section == e.section && key == e.key) return e;
    throw DataError("unknown config key '" + section + "." + key + "'");
}

} // namespace

void PipelineConfig::propagate_seed() {
    synth.seed = seed;
    extraction.ransac.seed = seed;
    featurize.seed = seed;
    model.rbf.seed = seed;
}

std::vector<std::string> PipelineConfig::feature_columns() const { return feature_names_in(groups); }

std::vector<FeatureGroup> parse_groups(const std::string& text) {
    std::vector<FeatureGroup> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        FeatureGroup g;
        if (item == "baseline") g = FeatureGroup::baseline;
        else if (item == "curvature") g = FeatureGroup::curvature;
        else if (item == "topological" || item == "topology") g = FeatureGroup::topological;
        else if (item == "all" || item == "combined") {
            out = {FeatureGroup::baseline, FeatureGroup::curvature, FeatureGroup::topological};
            continue;
        } else throw DataError("unknown feature group '" + item + "'");
        if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
    }
    if (out.empty()) throw DataError("no feature group selected");
    std::sort(out.begin(), out.end());
    return out;
}

std::string format_groups(const std::vector<FeatureGroup>& groups) {
    std::string out;
    for (auto g : groups) {
        if (!out.empty()) out += ',';
        out += g == FeatureGroup::baseline ? "baseline" : g == FeatureGroup::curvature ? "curvature" : "topological";
    }
    return out;
}

void write_config(std::ostream& out, const PipelineConfig& cfg) {
    std::string section;
    for (const auto& e : entries()) {
        if (section != e.section) {
            if (!section.empty()) out << '\n';
            section = e.section;
            out << '[' << section << "]\n";
        }
        out << e.key << " = " << e.get(cfg) << '\n';
    }
}

PipelineConfig read_config(std::istream& in, const PipelineConfig& base) {
    PipelineConfig cfg = base;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        try {
            if (line.front() == '[') {
                if (line.back() != ']') throw DataError("unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw DataError("expected key = value");
            if (section.empty()) throw DataError("key outside of a section");
            find_entry(section, trim(line.substr(0, eq))).set(cfg, trim(line.substr(eq + 1)));
        } catch (const DataError& e) {
            throw DataError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path, const PipelineConfig& base) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path.string());
    try {
        return read_config(in, base);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void set_config_value(PipelineConfig& cfg, const std::string& dotted_key, const std::string& value) {
    const auto dot = dotted_key.find('.');
    if (dot == std::string::npos) throw DataError("config key '" + dotted_key + "' must be section.key");
    find_entry(dotted_key.substr(0, dot), dotted_key.substr(dot + 1)).set(cfg, value);
}

std::string get_config_value(const PipelineConfig& cfg, const std::string& dotted_key) {
    const auto dot = dotted_key.find('.');
    if (dot == std::string::npos) throw DataError("config key '" + dotted_key + "' must be section.key");
    return find_entry(dotted_key.substr(0, dot), dotted_key.substr(dot + 1)).get(cfg);
}

} // namespace papilla
