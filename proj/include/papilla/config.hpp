#pragma once

#include "papilla/evaluation.hpp"
#include "papilla/pipeline.hpp"
#include "papilla/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace papilla {

/// Every tunable of the pipeline in one place. Serialised as sectioned
/// `key = value` text:
///
///     [extraction]
///     radius = 450
///
/// Lines starting with '#' are comments. Unknown keys are errors.
struct PipelineConfig {
    std::uint64_t seed = 0;
    std::size_t threads = 0;

    SynthConfig synth;
    std::size_t n_per_class = 100;
    std::size_t participants = 5;
    double sheet_width = 10000.0;
    double sheet_height = 10000.0;

    ExtractionConfig extraction;
    std::size_t max_segments = 100000;

    FeaturizeConfig featurize;
    std::vector<FeatureGroup> groups{FeatureGroup::baseline, FeatureGroup::curvature, FeatureGroup::topological};

    std::string label = "type";
    std::string protocol = "random-split"; // random-split | logo
    std::string group_column = "participant";
    double test_frac = 0.2;
    std::size_t repeats = 50;
    double correlation_threshold = 1.0; // 1 keeps every column
    ModelConfig model;
    std::size_t n_perm = 30;
    std::size_t pca_dims = 2;

    bool keep_none = false;
    double match_tolerance = 50.0;

    /// Copies `seed` into every module config that draws random numbers.
    void propagate_seed();
    [[nodiscard]] std::vector<std::string> feature_columns() const;
};

void write_config(std::ostream& out, const PipelineConfig& cfg);
/// Starts from `base` and applies every key found. Throws DataError with the
/// line number on malformed input.
PipelineConfig read_config(std::istream& in, const PipelineConfig& base = {});
PipelineConfig load_config(const std::filesystem::path& path, const PipelineConfig& base = {});

/// Sets one value by its dotted name, e.g. "extraction.radius".
void set_config_value(PipelineConfig& cfg, const std::string& dotted_key, const std::string& value);
std::string get_config_value(const PipelineConfig& cfg, const std::string& dotted_key);

std::vector<FeatureGroup> parse_groups(const std::string& text);
std::string format_groups(const std::vector<FeatureGroup>& groups);

} // namespace papilla
