#include "papilla/mesh_io.hpp"
#include "papilla/error.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace papilla {

namespace {

enum class ScalarType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<ScalarType> parse_scalar_type(const std::string& name) {
    if (name == "char" || name == "int8") return ScalarType::i8;
    if (name == "uchar" || name == "uint8") return ScalarType::u8;
    if (name == "short" || name == "int16") return ScalarType::i16;
    if (name == "ushort" || name == "uint16") return ScalarType::u16;
    if (name == "int" || name == "int32") return ScalarType::i32;
    if (name == "uint" || name == "uint32") return ScalarType::u32;
    if (name == "float" || name == "float32") return ScalarType::f32;
    if (name == "double" || name == "float64") return ScalarType::f64;
    return std::nullopt;
}

struct PlyProperty {
    std::string name;
    ScalarType type = ScalarType::f32;
    bool is_list = false;
    ScalarType count_type = ScalarType::u8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
    throw DataError("line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void fail_offset(std::streamoff offset, const std::string& what) {
    throw DataError("byte offset " + std::to_string(offset) + ": " + what);
}

double parse_double(const std::string& tok, std::size_t line) {
    double v = 0.0;
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc{} || ptr != end) fail_line(line, "cannot parse number '" + tok + "'");
    return v;
}

long long parse_integer(const std::string& tok, std::size_t line) {
    long long v = 0;
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc{} || ptr != end) fail_line(line, "cannot parse integer '" + tok + "'");
    return v;
}

std::uint32_t checked_index(long long v, std::size_t n_vertices, const std::string& where) {
    if (v < 0 || static_cast<unsigned long long>(v) >= n_vertices)
        throw DataError(where + ": face index " + std::to_string(v) + " out of range for " +
                        std::to_string(n_vertices) + " vertices");
    return static_cast<std::uint32_t>(v);
}

void append_fan(std::vector<Face>& faces, const std::vector<std::uint32_t>& poly, const std::string& where) {
    if (poly.size() < 3) throw DataError(where + ": face with fewer than 3 vertices");
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) faces.push_back({poly[0], poly[k], poly[k + 1]});
}

template <class T>
T read_raw(std::istream& in) {
    T v{};
    const auto offset = static_cast<std::streamoff>(in.tellg());
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) fail_offset(offset, "unexpected end of binary data");
    return v;
}

double read_binary_scalar(std::istream& in, ScalarType t) {
    switch (t) {
    case ScalarType::i8: return read_raw<std::int8_t>(in);
    case ScalarType::u8: return read_raw<std::uint8_t>(in);
    case ScalarType::i16: return read_raw<std::int16_t>(in);
    case ScalarType::u16: return read_raw<std::uint16_t>(in);
    case ScalarType::i32: return read_raw<std::int32_t>(in);
    case ScalarType::u32: return read_raw<std::uint32_t>(in);
    case ScalarType::f32: return read_raw<float>(in);
    case ScalarType::f64: return read_raw<double>(in);
    }
    return 0.0;
}

std::optional<std::size_t> find_property(const PlyElement& e, std::initializer_list<const char*> names) {
    for (std::size_t i = 0; i < e.properties.size(); ++i)
        for (const char* n : names)
            if (e.properties[i].name == n) return i;
    return std::nullopt;
}

} // namespace

TriangleMesh read_ply(std::istream& in) {
    static_assert(std::endian::native == std::endian::little, "binary PLY reader assumes a little-endian host");

    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next_line() || line != "ply") fail_line(line_no, "missing 'ply' magic");

    bool binary = false;
    std::vector<PlyElement> elements;
    bool header_done = false;
    while (next_line()) {
        auto tok = split_ws(line);
        if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "format") {
            if (tok.size() < 2) fail_line(line_no, "malformed format line");
            if (tok[1] == "ascii") binary = false;
            else if (tok[1] == "binary_little_endian") binary = true;
            else fail_line(line_no, "unsupported PLY format '" + tok[1] + "'");
        } else if (tok[0] == "element") {
            if (tok.size() != 3) fail_line(line_no, "malformed element line");
            elements.push_back({tok[1], static_cast<std::size_t>(parse_integer(tok[2], line_no)), {}});
        } else if (tok[0] == "property") {
            if (elements.empty()) fail_line(line_no, "property before any element");
            PlyProperty prop;
            if (tok.size() == 5 && tok[1] == "list") {
                auto ct = parse_scalar_type(tok[2]);
                auto it = parse_scalar_type(tok[3]);
                if (!ct || !it) fail_line(line_no, "unknown list property type");
                prop = {tok[4], *it, true, *ct};
            } else if (tok.size() == 3) {
                auto t = parse_scalar_type(tok[1]);
                if (!t) fail_line(line_no, "unknown property type '" + tok[1] + "'");
                prop = {tok[2], *t, false, ScalarType::u8};
            } else {
                fail_line(line_no, "malformed property line");
            }
            elements.back().properties.push_back(prop);
        } else if (tok[0] == "end_header") {
            header_done = true;
            break;
        } else {
            fail_line(line_no, "unexpected header keyword '" + tok[0] + "'");
        }
    }
    if (!header_done) fail_line(line_no, "missing end_header");

    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::size_t n_vertices_declared = 0;
    for (const auto& e : elements)
        if (e.name == "vertex") n_vertices_declared = e.count;

    for (const auto& e : elements) {
        const bool is_vertex = e.name == "vertex";
        const bool is_face = e.name == "face";
        std::optional<std::size_t> px, py, pz, pidx;
        if (is_vertex) {
            px = find_property(e, {"x"});
            py = find_property(e, {"y"});
            pz = find_property(e, {"z"});
            if (!px || !py || !pz) fail_line(line_no, "vertex element lacks x/y/z properties");
            vertices.reserve(e.count);
        }
        if (is_face) {
            pidx = find_property(e, {"vertex_indices", "vertex_index"});
            if (!pidx) fail_line(line_no, "face element lacks a vertex_indices list");
            faces.reserve(e.count);
        }

        std::vector<double> scalars(e.properties.size());
        std::vector<std::uint32_t> poly;
        for (std::size_t row = 0; row < e.count; ++row) {
            poly.clear();
            std::string where;
            if (binary) {
                const auto offset = static_cast<std::streamoff>(in.tellg());
                where = "byte offset " + std::to_string(offset);
                for (std::size_t p = 0; p < e.properties.size(); ++p) {
                    const auto& prop = e.properties[p];
                    if (!prop.is_list) {
                        scalars[p] = read_binary_scalar(in, prop.type);
                        continue;
                    }
                    const auto count = static_cast<long long>(read_binary_scalar(in, prop.count_type));
                    for (long long k = 0; k < count; ++k) {
                        const auto v = static_cast<long long>(read_binary_scalar(in, prop.type));
                        if (is_face && pidx && p == *pidx) poly.push_back(checked_index(v, n_vertices_declared, where));
                    }
                }
            } else {
                if (!next_line()) fail_line(line_no, "unexpected end of file in element '" + e.name + "'");
                where = "line " + std::to_string(line_no);
                auto tok = split_ws(line);
                std::size_t t = 0;
                for (std::size_t p = 0; p < e.properties.size(); ++p) {
                    const auto& prop = e.properties[p];
                    if (t >= tok.size()) fail_line(line_no, "too few values in element '" + e.name + "'");
                    if (!prop.is_list) {
                        scalars[p] = parse_double(tok[t++], line_no);
                        continue;
                    }
                    const auto count = parse_integer(tok[t++], line_no);
                    if (count < 0 || t + static_cast<std::size_t>(count) > tok.size())
                        fail_line(line_no, "list length exceeds the values on the line");
                    for (long long k = 0; k < count; ++k) {
                        const auto v = parse_integer(tok[t++], line_no);
                        if (is_face && pidx && p == *pidx) poly.push_back(checked_index(v, n_vertices_declared, where));
                    }
                }
            }
            if (is_vertex) vertices.emplace_back(scalars[*px], scalars[*py], scalars[*pz]);
            if (is_face) append_fan(faces, poly, where);
        }
    }

    if (vertices.empty()) throw DataError("PLY file contains no vertices");
    return TriangleMesh::build(std::move(vertices), std::move(faces));
}

TriangleMesh read_obj(std::istream& in) {
    std::vector<Vec3> vertices;
    std::vector<std::pair<std::vector<long long>, std::size_t>> raw_faces;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto tok = split_ws(line);
        if (tok.empty() || tok[0][0] == '#') continue;
        if (tok[0] == "v") {
            if (tok.size() < 4) fail_line(line_no, "vertex record needs three coordinates");
            vertices.emplace_back(parse_double(tok[1], line_no), parse_double(tok[2], line_no),
                                  parse_double(tok[3], line_no));
        } else if (tok[0] == "f") {
            std::vector<long long> idx;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                // "v", "v/vt", "v//vn", "v/vt/vn": only the position index matters.
                const auto slash = tok[k].find('/');
                idx.push_back(parse_integer(tok[k].substr(0, slash), line_no));
            }
            raw_faces.emplace_back(std::move(idx), line_no);
        }
    }
    if (vertices.empty()) throw DataError("OBJ file contains no vertices");

    std::vector<Face> faces;
    faces.reserve(raw_faces.size());
    const auto n = static_cast<long long>(vertices.size());
    for (const auto& [idx, at] : raw_faces) {
        std::vector<std::uint32_t> poly;
        const std::string where = "line " + std::to_string(at);
        for (auto i : idx) {
            // OBJ is 1-based; negative indices count back from the last vertex.
            const long long zero_based = i > 0 ? i - 1 : n + i;
            if (i == 0) throw DataError(where + ": face index 0 is invalid in OBJ");
            poly.push_back(checked_index(zero_based, vertices.size(), where));
        }
        append_fan(faces, poly, where);
    }
    return TriangleMesh::build(std::move(vertices), std::move(faces));
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, ptr);
}

} // namespace

void write_ply(std::ostream& out, const TriangleMesh& mesh, PlyEncoding encoding) {
    const bool binary = encoding == PlyEncoding::binary_little_endian;
    out << "ply\n"
        << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
        << "element vertex " << mesh.vertex_count() << "\n"
        << "property double x\nproperty double y\nproperty double z\n"
        << "element face " << mesh.face_count() << "\n"
        << "property list uchar uint vertex_indices\n"
        << "end_header\n";
    if (binary) {
        for (const auto& v : mesh.vertices()) {
            const double xyz[3] = {v.x(), v.y(), v.z()};
            out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
        }
        for (const auto& f : mesh.faces()) {
            const std::uint8_t count = 3;
            out.write(reinterpret_cast<const char*>(&count), 1);
            out.write(reinterpret_cast<const char*>(f.data()), sizeof(std::uint32_t) * 3);
        }
        return;
    }
    for (const auto& v : mesh.vertices())
        out << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
    for (const auto& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
    for (const auto& v : mesh.vertices())
        out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
    for (const auto& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

TriangleMesh load_surface(const std::filesystem::path& path, SurfaceFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return format == SurfaceFormat::ply ? read_ply(in) : read_obj(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

TriangleMesh load_surface(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".ply") return load_surface(path, SurfaceFormat::ply);
    if (ext == ".obj") return load_surface(path, SurfaceFormat::obj);
    throw DataError(path.string() + ": unsupported surface extension '" + ext + "'");
}

void save_surface(const std::filesystem::path& path, const TriangleMesh& mesh, PlyEncoding encoding) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    auto ext = path.extension().string();
    if (ext == ".obj") write_obj(out, mesh);
    else write_ply(out, mesh, encoding);
    if (!out) throw DataError("write failed for " + path.string());
}

} // namespace papilla
