#pragma once

#include "papilla/geometry.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace papilla {

/// Per-vertex discrete curvature. Boundary and isolated vertices are marked
/// invalid and hold zeros.
struct CurvatureField {
    std::vector<double> gaussian;   // µm⁻², deficit / mixed area
    std::vector<double> mean;       // µm⁻¹, signed
    std::vector<double> mixed_area; // µm²
    std::vector<double> deficit;    // rad, unnormalised (debug output)
    std::vector<bool> valid;

    [[nodiscard]] std::size_t valid_count() const;
};

struct CurvatureFeatures {
    double min_gaussian = 0.0;
    double max_gaussian = 0.0;
    double min_mean = 0.0;
    double max_mean = 0.0;
    double ratio_gaussian = 0.0;
    double ratio_mean = 0.0;
    double positive_gaussian = 0.0;
    double positive_mean = 0.0;
};

/// 2π minus the incident triangle angles at v. Throws DataError for boundary or
/// isolated vertices.
double angle_deficit(const TriangleMesh& mesh, std::size_t v);

/// Meyer mixed area: Voronoi area for non-obtuse triangles, T/2 or T/4 for obtuse ones.
double mixed_area(const TriangleMesh& mesh, std::size_t v);

/// Orientation used to sign mean curvature. With `up` given, vertex normals are
/// flipped as a whole when their area-weighted sum points against it. Without
/// it, a closed mesh is oriented by its signed volume and an open one keeps
/// its face winding.
struct CurvatureOptions {
    std::optional<Vec3> up;
};

/// Gaussian and mean curvature for every interior vertex. Throws DataError when
/// the mesh has no interior vertex.
CurvatureField compute_curvature(const TriangleMesh& mesh, const CurvatureOptions& options = {});

/// Aggregates over valid vertices. Counts use |value| > zero_tol.
/// Throws DataError when no vertex is valid.
CurvatureFeatures curvature_features(const CurvatureField& field, double zero_tol = 1e-8);

/// vertex_id,K,H,A_mixed,valid
void write_curvature_csv(std::ostream& out, const CurvatureField& field);

} // namespace papilla
