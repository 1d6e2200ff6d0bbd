#pragma once

#include "papilla/geometry.hpp"
#include "papilla/segmentation.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace papilla {

/// Parameters of the synthetic tongue-surface model. Lengths in µm, densities
/// in instances per cm².
struct SynthConfig {
    double fungiform_diameter = 878.0;
    double fungiform_height = 250.0;
    // Mushroom profile z = h (1 - sag (ρ/R)²) (1 - (ρ/R)^p): a gently curved
    // cap with a steep rim.
    double dome_exponent = 16.0;
    double dome_sag = 0.3;

    double filiform_diameter = 355.0;
    double filiform_height = 150.0;
    int spike_count = 6;
    double spike_height = 0.7; // relative to the central cone

    double filiform_density = 150.0;
    double fungiform_density = 25.0;
    double placement_gap = 20.0; // extra clearance between footprints

    /// Peak amplitude of the smooth undulation added to every surface.
    double noise_amplitude = 3.0;
    /// Corpus "none" patches draw their undulation amplitude from
    /// [noise_amplitude, none_relief]; at most 1/8 of the filiform height.
    double none_relief = 18.0;
    double resolution = 10.0; // grid spacing
    double patch_half_size = 800.0;

    double participant_jitter = 0.1; // ± relative, per participant
    double instance_jitter = 0.1;    // ± relative, per instance

    std::uint64_t seed = 0;

    void validate() const;
};

struct Placement {
    Label type = Label::none;
    Vec3 apex = Vec3::Zero(); // true centre on the generated surface
    double radius = 0.0;      // footprint radius
    double height = 0.0;
    double rotation = 0.0; // crown orientation, radians
};

struct SyntheticSurface {
    TriangleMesh mesh;
    std::vector<Placement> placements;
};

/// Isolated mushroom-shaped dome on a flat skirt, apex at the origin's grid vertex.
TriangleMesh gen_fungiform(const SynthConfig& cfg, std::uint64_t seed);
/// Central cone ringed by tilted spikes on a low mound.
TriangleMesh gen_filiform(const SynthConfig& cfg, std::uint64_t seed);
/// Undulation only; exactly flat when noise_amplitude is 0.
TriangleMesh gen_none(const SynthConfig& cfg, std::uint64_t seed);

/// Rectangular sheet [0, width] x [0, height] with fungiform then filiform
/// instances placed by dart throwing at the configured densities. Throws
/// DataError when the densities cannot be met.
SyntheticSurface gen_sheet(const SynthConfig& cfg, double width, double height, std::uint64_t seed);

struct CorpusEntry {
    Segment segment;
    Vec3 true_center = Vec3::Zero();
    SynthConfig params; // after participant and instance jitter
};

struct Participant {
    std::string id;
    std::string gender;
    std::string age_group;
    double fungiform_scale = 1.0;
    double filiform_scale = 1.0;
};

std::vector<Participant> make_participants(std::size_t count, const SynthConfig& cfg);

/// n_per_class segments for each of fungiform, filiform and none. Each one is
/// cut by extract_segment from a patch that also holds neighbouring papillae.
std::vector<CorpusEntry> gen_corpus(std::size_t n_per_class, std::size_t participants, const SynthConfig& cfg,
                                    const ExtractionConfig& extraction = {});

/// id,class,participant,true_center_x,true_center_y,true_center_z,parameters
void write_manifest(std::ostream& out, const std::vector<CorpusEntry>& corpus);

/// Writes segments/<id>.ply + .json and manifest.csv below `dir`.
void save_corpus(const std::filesystem::path& dir, const std::vector<CorpusEntry>& corpus);

/// Placement list as CSV: type,x,y,z,radius,height.
void write_placements(std::ostream& out, const std::vector<Placement>& placements);
std::vector<Placement> read_placements(std::istream& in);

} // namespace papilla
