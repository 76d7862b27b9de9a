#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "dampsurf/error.hpp"
#include "dampsurf/mesh.hpp"

namespace dampsurf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Next line that is neither blank nor a comment; false at EOF.
bool next_content_line(std::istream& in, std::string& line, int& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (!trim(line).empty()) return true;
  }
  return false;
}

[[noreturn]] void parse_fail(const std::string& what, int line_no) {
  throw MeshError("parse failure at line " + std::to_string(line_no) + ": " +
                  what);
}

double parse_double(std::string_view token, int line_no) {
  // std::from_chars for double is available in libstdc++ 11.
  double value = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    parse_fail("bad number '" + std::string(token) + "'", line_no);
  return value;
}

long parse_long(std::string_view token, int line_no) {
  long value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    parse_fail("bad integer '" + std::string(token) + "'", line_no);
  return value;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

TriangleSoup read_off(std::istream& in) {
  TriangleSoup soup;
  std::string line;
  int line_no = 0;
  if (!next_content_line(in, line, line_no)) parse_fail("empty file", line_no);
  auto tokens = split_ws(line);
  if (tokens.empty() || tokens[0] != "OFF") parse_fail("missing OFF header", line_no);
  tokens.erase(tokens.begin());
  if (tokens.empty()) {
    if (!next_content_line(in, line, line_no)) parse_fail("missing counts", line_no);
    tokens = split_ws(line);
  }
  if (tokens.size() < 2) parse_fail("counts line needs V F [E]", line_no);
  const long nv = parse_long(tokens[0], line_no);
  const long nf = parse_long(tokens[1], line_no);
  if (nv <= 0 || nf <= 0) parse_fail("nonpositive vertex/face count", line_no);

  soup.vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    if (!next_content_line(in, line, line_no)) parse_fail("truncated vertex list", line_no);
    const auto t = split_ws(line);
    if (t.size() < 3) parse_fail("vertex line needs 3 coordinates", line_no);
    soup.vertices.emplace_back(parse_double(t[0], line_no),
                               parse_double(t[1], line_no),
                               parse_double(t[2], line_no));
  }
  soup.triangles.reserve(nf);
  for (long i = 0; i < nf; ++i) {
    if (!next_content_line(in, line, line_no)) parse_fail("truncated face list", line_no);
    const auto t = split_ws(line);
    if (t.empty()) parse_fail("empty face line", line_no);
    const long n = parse_long(t[0], line_no);
    if (n != 3) parse_fail("only triangular faces are supported", line_no);
    if (t.size() < 4) parse_fail("face line needs 3 indices", line_no);
    Triangle tri{};
    for (int k = 0; k < 3; ++k) {
      const long idx = parse_long(t[k + 1], line_no);
      if (idx < 0 || idx >= nv) parse_fail("face index out of range", line_no);
      tri[k] = static_cast<int>(idx);
    }
    soup.triangles.push_back(tri);
  }
  if (next_content_line(in, line, line_no)) parse_fail("trailing content", line_no);
  return soup;
}

TriangleSoup read_obj(std::istream& in) {
  TriangleSoup soup;
  std::string line;
  int line_no = 0;
  std::vector<std::array<long, 3>> raw_faces;
  std::vector<int> face_lines;
  while (next_content_line(in, line, line_no)) {
    const auto t = split_ws(line);
    if (t[0] == "v") {
      if (t.size() < 4) parse_fail("vertex line needs 3 coordinates", line_no);
      soup.vertices.emplace_back(parse_double(t[1], line_no),
                                 parse_double(t[2], line_no),
                                 parse_double(t[3], line_no));
    } else if (t[0] == "f") {
      if (t.size() != 4) parse_fail("only triangular faces are supported", line_no);
      std::array<long, 3> idx{};
      for (int k = 0; k < 3; ++k) {
        if (t[k + 1].find('/') != std::string_view::npos)
          parse_fail("texture/normal indices are not supported", line_no);
        idx[k] = parse_long(t[k + 1], line_no);
        if (idx[k] <= 0) parse_fail("negative or zero OBJ index", line_no);
      }
      raw_faces.push_back(idx);
      face_lines.push_back(line_no);
    } else {
      parse_fail("unsupported OBJ statement '" + std::string(t[0]) + "'", line_no);
    }
  }
  const long nv = static_cast<long>(soup.vertices.size());
  for (std::size_t f = 0; f < raw_faces.size(); ++f) {
    Triangle tri{};
    for (int k = 0; k < 3; ++k) {
      if (raw_faces[f][k] > nv) parse_fail("face index out of range", face_lines[f]);
      tri[k] = static_cast<int>(raw_faces[f][k] - 1);
    }
    soup.triangles.push_back(tri);
  }
  if (soup.vertices.empty() || soup.triangles.empty())
    throw MeshError("parse failure: OBJ file has no vertices or faces");
  return soup;
}

void write_off(std::ostream& out, const SurfaceMesh& mesh) {
  char buf[96];
  out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_faces() << " 0\n";
  for (const auto& v : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const auto& t : mesh.triangles())
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

MeshFormat format_from_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".off") return MeshFormat::off;
  if (ext == ".obj") return MeshFormat::obj;
  throw MeshError("unsupported mesh format '" + ext + "' (expected .off or .obj)");
}

SurfaceMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file '" + path.string() + "'");
  TriangleSoup soup = format == MeshFormat::off ? read_off(in) : read_obj(in);
  return SurfaceMesh::build(std::move(soup.vertices), std::move(soup.triangles));
}

SurfaceMesh load_mesh(const std::filesystem::path& path) {
  return load_mesh(path, format_from_extension(path));
}

void save_off(const std::filesystem::path& path, const SurfaceMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write '" + path.string() + "'");
  write_off(out, mesh);
}

SurfaceMesh mesh_from_source(const std::string& source) {
  const auto colon = source.find(':');
  const std::string kind = source.substr(0, colon);
  std::vector<std::string> parts;
  if (colon != std::string::npos) {
    std::stringstream rest(source.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ':')) parts.push_back(item);
  }
  auto number = [&](std::size_t i) {
    const std::string& s = parts.at(i);
    return parse_double(trim(s), 0);
  };
  auto integer = [&](std::size_t i) {
    return static_cast<int>(parse_long(trim(parts.at(i)), 0));
  };
  try {
    if (kind == "icosphere") {
      if (parts.size() != 2 && parts.size() != 5)
        throw MeshError("expected icosphere:<radius>:<subdiv>[:cx:cy:cz]");
      Vec3 center = Vec3::Zero();
      if (parts.size() == 5) center = Vec3(number(2), number(3), number(4));
      return generate_icosphere(center, number(0), integer(1));
    }
    if (kind == "torus") {
      if (parts.size() != 4)
        throw MeshError("expected torus:<R>:<r>:<nu>:<nv>");
      return generate_torus(Vec3::Zero(), number(0), number(1), integer(2),
                            integer(3));
    }
  } catch (const MeshError& e) {
    throw MeshError("bad generator spec '" + source + "': " + e.what());
  }
  if (kind == "file") return load_mesh(source.substr(colon + 1));
  return load_mesh(source);
}

}  // namespace dampsurf
