#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "graspgen/errors.hpp"
#include "graspgen/mesh.hpp"

namespace grasp {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, const std::string& file, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size())
    throw ParseError(file, line, "expected a number, got '" + tok + "'");
  return v;
}

long parse_long(const std::string& tok, const std::string& file, std::size_t line) {
  long v = 0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError(file, line, "expected an integer, got '" + tok + "'");
  return v;
}

// OBJ face reference "i", "i/t", "i//n", "i/t/n"; 1-based, negative = from end.
std::uint32_t resolve_obj_index(const std::string& ref, std::size_t vertex_count,
                                const std::string& file, std::size_t line) {
  const std::string first = ref.substr(0, ref.find('/'));
  const long idx = parse_long(first, file, line);
  long resolved;
  if (idx > 0)
    resolved = idx - 1;
  else if (idx < 0)
    resolved = static_cast<long>(vertex_count) + idx;
  else
    throw ParseError(file, line, "face index 0 is invalid in OBJ");
  if (resolved < 0 || resolved >= static_cast<long>(vertex_count))
    throw ParseError(file, line,
                     "face index " + std::to_string(idx) + " out of range (have " +
                         std::to_string(vertex_count) + " vertices)");
  return static_cast<std::uint32_t>(resolved);
}

void fan_triangulate(const std::vector<std::uint32_t>& poly,
                     std::vector<std::array<std::uint32_t, 3>>& out) {
  for (std::size_t i = 1; i + 1 < poly.size(); ++i)
    out.push_back({poly[0], poly[i], poly[i + 1]});
}

TriMesh parse_obj_stream(std::istream& in, const std::string& name) {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (toks[0] == "v") {
      if (toks.size() < 4) throw ParseError(name, line_no, "vertex needs 3 coordinates");
      const Vec3 v{parse_double(toks[1], name, line_no), parse_double(toks[2], name, line_no),
                   parse_double(toks[3], name, line_no)};
      if (!is_finite(v)) throw NonFiniteVertex(name, line_no);
      vertices.push_back(v);
    } else if (toks[0] == "f") {
      if (toks.size() < 4) throw ParseError(name, line_no, "face needs at least 3 vertices");
      std::vector<std::uint32_t> poly;
      for (std::size_t i = 1; i < toks.size(); ++i)
        poly.push_back(resolve_obj_index(toks[i], vertices.size(), name, line_no));
      fan_triangulate(poly, triangles);
    }
    // vn/vt/o/g/s/usemtl/mtllib are ignored.
  }
  if (triangles.empty()) throw EmptyMesh(name);
  return TriMesh(std::move(vertices), std::move(triangles));
}

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;  // scalar property names, in order
  bool has_list = false;
};

TriMesh parse_ply_stream(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      return true;
    }
    return false;
  };

  if (!next_line() || split_ws(line) != std::vector<std::string>{"ply"})
    throw ParseError(name, line_no ? line_no : 1, "missing 'ply' magic");

  std::vector<PlyElement> elements;
  bool saw_format = false;
  while (true) {
    if (!next_line()) throw ParseError(name, line_no, "unexpected end of header");
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "comment") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2 || toks[1] != "ascii")
        throw ParseError(name, line_no, "only ascii PLY is supported");
      saw_format = true;
    } else if (toks[0] == "element") {
      if (toks.size() < 3) throw ParseError(name, line_no, "malformed element");
      PlyElement el;
      el.name = toks[1];
      el.count = static_cast<std::size_t>(parse_long(toks[2], name, line_no));
      elements.push_back(el);
    } else if (toks[0] == "property") {
      if (elements.empty()) throw ParseError(name, line_no, "property before element");
      if (toks.size() >= 2 && toks[1] == "list") {
        elements.back().has_list = true;
      } else {
        if (toks.size() < 3) throw ParseError(name, line_no, "malformed property");
        elements.back().properties.push_back(toks.back());
      }
    } else if (toks[0] == "end_header") {
      break;
    } else {
      throw ParseError(name, line_no, "unknown header keyword '" + toks[0] + "'");
    }
  }
  if (!saw_format) throw ParseError(name, line_no, "missing format line");

  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  for (const auto& el : elements) {
    if (el.name == "vertex") {
      int ix = -1, iy = -1, iz = -1;
      for (std::size_t i = 0; i < el.properties.size(); ++i) {
        if (el.properties[i] == "x") ix = static_cast<int>(i);
        if (el.properties[i] == "y") iy = static_cast<int>(i);
        if (el.properties[i] == "z") iz = static_cast<int>(i);
      }
      if (ix < 0 || iy < 0 || iz < 0)
        throw ParseError(name, line_no, "vertex element lacks x/y/z properties");
      for (std::size_t v = 0; v < el.count; ++v) {
        if (!next_line()) throw ParseError(name, line_no, "unexpected end of vertex data");
        const auto toks = split_ws(line);
        if (toks.size() < el.properties.size())
          throw ParseError(name, line_no, "short vertex row");
        const Vec3 p{parse_double(toks[static_cast<std::size_t>(ix)], name, line_no),
                     parse_double(toks[static_cast<std::size_t>(iy)], name, line_no),
                     parse_double(toks[static_cast<std::size_t>(iz)], name, line_no)};
        if (!is_finite(p)) throw NonFiniteVertex(name, line_no);
        vertices.push_back(p);
      }
    } else if (el.name == "face") {
      for (std::size_t f = 0; f < el.count; ++f) {
        if (!next_line()) throw ParseError(name, line_no, "unexpected end of face data");
        const auto toks = split_ws(line);
        if (toks.empty()) throw ParseError(name, line_no, "empty face row");
        const long n = parse_long(toks[0], name, line_no);
        if (n < 3 || toks.size() < static_cast<std::size_t>(n) + 1)
          throw ParseError(name, line_no, "malformed face row");
        std::vector<std::uint32_t> poly;
        for (long i = 0; i < n; ++i) {
          const long idx = parse_long(toks[static_cast<std::size_t>(i) + 1], name, line_no);
          if (idx < 0 || idx >= static_cast<long>(vertices.size()))
            throw ParseError(name, line_no,
                             "face index " + std::to_string(idx) + " out of range");
          poly.push_back(static_cast<std::uint32_t>(idx));
        }
        fan_triangulate(poly, triangles);
      }
    } else {
      // Unknown element: skip its rows.
      for (std::size_t i = 0; i < el.count; ++i)
        if (!next_line()) throw ParseError(name, line_no, "unexpected end of element data");
    }
  }
  if (triangles.empty()) throw EmptyMesh(name);
  return TriMesh(std::move(vertices), std::move(triangles));
}

std::string lower_ext(const std::string& path) {
  const auto pos = path.rfind('.');
  if (pos == std::string::npos) return {};
  std::string ext = path.substr(pos + 1);
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace

TriMesh parse_obj(const std::string& text, const std::string& name) {
  std::istringstream is(text);
  return parse_obj_stream(is, name);
}

TriMesh parse_ply_ascii(const std::string& text, const std::string& name) {
  std::istringstream is(text);
  return parse_ply_stream(is, name);
}

TriMesh load_mesh(const std::string& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  if (format == MeshFormat::Obj) return parse_obj_stream(in, path);
  return parse_ply_stream(in, path);
}

TriMesh load_mesh(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "obj") return load_mesh(path, MeshFormat::Obj);
  if (ext == "ply") return load_mesh(path, MeshFormat::PlyAscii);
  throw ParseError(path, 0, "unsupported mesh extension '" + ext + "' (want .obj or .ply)");
}

}  // namespace grasp
