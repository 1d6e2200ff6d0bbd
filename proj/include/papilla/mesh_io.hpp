#pragma once

#include "papilla/geometry.hpp"

#include <filesystem>
#include <iosfwd>

namespace papilla {

enum class SurfaceFormat { ply, obj };
enum class PlyEncoding { ascii, binary_little_endian };

/// Reads a PLY (ASCII or binary little-endian) or OBJ surface. Polygonal faces
/// are fan-triangulated. Errors carry the line number (ASCII) or byte offset (binary).
TriangleMesh load_surface(const std::filesystem::path& path, SurfaceFormat format);

/// Picks the format from the file extension (.ply / .obj).
TriangleMesh load_surface(const std::filesystem::path& path);

TriangleMesh read_ply(std::istream& in);
TriangleMesh read_obj(std::istream& in);

/// ASCII output prints doubles with 17 significant digits so that a reload
/// reproduces the coordinates bit-exactly.
void write_ply(std::ostream& out, const TriangleMesh& mesh, PlyEncoding encoding = PlyEncoding::ascii);
void write_obj(std::ostream& out, const TriangleMesh& mesh);

void save_surface(const std::filesystem::path& path, const TriangleMesh& mesh,
                  PlyEncoding encoding = PlyEncoding::binary_little_endian);

} // namespace papilla
