#include "dampsurf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>

#include <Eigen/Geometry>

#include "dampsurf/error.hpp"

namespace dampsurf {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Edge list in order of first appearance, each with every face that uses it.
struct EdgeTable {
  std::vector<std::pair<int, int>> ends;
  std::vector<std::vector<int>> faces;
};

EdgeTable collect_edges(std::span<const Triangle> triangles) {
  EdgeTable table;
  std::unordered_map<std::uint64_t, int> index;
  index.reserve(triangles.size() * 2);
  for (int f = 0; f < static_cast<int>(triangles.size()); ++f) {
    const auto& t = triangles[f];
    for (int k = 0; k < 3; ++k) {
      const int a = t[k];
      const int b = t[(k + 1) % 3];
      auto [it, inserted] =
          index.try_emplace(edge_key(a, b), static_cast<int>(table.ends.size()));
      if (inserted) {
        table.ends.emplace_back(std::min(a, b), std::max(a, b));
        table.faces.emplace_back();
      }
      table.faces[it->second].push_back(f);
    }
  }
  return table;
}

bool has_directed(const Triangle& t, int a, int b) {
  for (int k = 0; k < 3; ++k)
    if (t[k] == a && t[(k + 1) % 3] == b) return true;
  return false;
}

double area_of(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

bool ValidationReport::ok() const {
  return is_closed && is_oriented && is_connected && unreferenced_vertices == 0 &&
         min_area_ratio > SurfaceMesh::kDegenerateAreaRatio;
}

ValidationReport validate_closed_manifold(std::span<const Vec3> vertices,
                                          std::span<const Triangle> triangles) {
  ValidationReport report;
  report.V = static_cast<int>(vertices.size());
  report.F = static_cast<int>(triangles.size());

  for (const auto& t : triangles)
    for (int v : t)
      if (v < 0 || v >= report.V) return report;  // indices out of range

  const EdgeTable table = collect_edges(triangles);
  report.E = static_cast<int>(table.ends.size());
  report.chi = report.V - report.E + report.F;

  bool oriented = true;
  for (std::size_t e = 0; e < table.ends.size(); ++e) {
    const auto& faces = table.faces[e];
    if (faces.size() == 1) {
      ++report.boundary_edges;
    } else if (faces.size() > 2) {
      ++report.nonmanifold_edges;
    } else {
      const auto [a, b] = table.ends[e];
      const bool ab0 = has_directed(triangles[faces[0]], a, b);
      const bool ab1 = has_directed(triangles[faces[1]], a, b);
      if (ab0 == ab1) oriented = false;
    }
  }
  report.is_closed =
      report.F > 0 && report.boundary_edges == 0 && report.nonmanifold_edges == 0;
  report.is_oriented = report.is_closed && oriented;

  std::vector<char> used(vertices.size(), 0);
  std::vector<int> parent(vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& t : triangles) {
    for (int v : t) used[v] = 1;
    for (int k = 1; k < 3; ++k) {
      const int ra = find_root(parent, t[0]);
      const int rb = find_root(parent, t[k]);
      if (ra != rb) parent[ra] = rb;
    }
  }
  report.unreferenced_vertices =
      static_cast<int>(std::count(used.begin(), used.end(), 0));
  int components = 0;
  for (int v = 0; v < report.V; ++v)
    if (used[v] && find_root(parent, v) == v) ++components;
  report.is_connected = components == 1;

  if (report.F > 0) {
    double total = 0.0;
    double smallest = std::numeric_limits<double>::infinity();
    for (const auto& t : triangles) {
      const double a = area_of(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
      total += a;
      smallest = std::min(smallest, a);
    }
    const double mean = total / report.F;
    report.min_area_ratio = mean > 0.0 ? smallest / mean : 0.0;
  }
  return report;
}

SurfaceMesh SurfaceMesh::build(std::vector<Vec3> vertices,
                               std::vector<Triangle> triangles) {
  const int nv = static_cast<int>(vertices.size());
  if (triangles.empty()) throw MeshError("mesh has no triangles");
  for (const auto& v : vertices)
    if (!v.allFinite()) throw MeshError("non-finite vertex coordinate");
  for (const auto& t : triangles) {
    for (int v : t)
      if (v < 0 || v >= nv) throw MeshError("triangle index out of range");
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw MeshError("degenerate triangle: repeated vertex index");
  }

  const EdgeTable table = collect_edges(triangles);
  for (std::size_t e = 0; e < table.ends.size(); ++e) {
    const auto n = table.faces[e].size();
    const auto [a, b] = table.ends[e];
    if (n == 1)
      throw MeshError("open surface: boundary edge (" + std::to_string(a) + ", " +
                      std::to_string(b) + ")");
    if (n != 2)
      throw MeshError("non-manifold edge (" + std::to_string(a) + ", " +
                      std::to_string(b) + ") shared by " + std::to_string(n) +
                      " faces");
  }

  const ValidationReport pre = validate_closed_manifold(vertices, triangles);
  if (pre.unreferenced_vertices > 0)
    throw MeshError("mesh has " + std::to_string(pre.unreferenced_vertices) +
                    " unreferenced vertices");
  if (!pre.is_connected) throw MeshError("disconnected surface");
  if (!(pre.min_area_ratio > kDegenerateAreaRatio))
    throw MeshError("degenerate triangle: area below 1e-12 x mean area");

  // Winding repair by breadth-first propagation from triangle 0.
  const int nf = static_cast<int>(triangles.size());
  std::vector<std::vector<std::pair<int, int>>> face_edges(nf);
  for (std::size_t e = 0; e < table.ends.size(); ++e) {
    const int f0 = table.faces[e][0];
    const int f1 = table.faces[e][1];
    face_edges[f0].emplace_back(f1, static_cast<int>(e));
    face_edges[f1].emplace_back(f0, static_cast<int>(e));
  }
  std::vector<char> visited(nf, 0);
  std::deque<int> queue{0};
  visited[0] = 1;
  while (!queue.empty()) {
    const int f = queue.front();
    queue.pop_front();
    for (const auto& [g, e] : face_edges[f]) {
      const auto [a, b] = table.ends[e];
      const bool consistent =
          has_directed(triangles[f], a, b) != has_directed(triangles[g], a, b);
      if (!visited[g]) {
        if (!consistent) std::swap(triangles[g][1], triangles[g][2]);
        visited[g] = 1;
        queue.push_back(g);
      } else if (!consistent) {
        throw MeshError("inconsistent orientation: surface is not orientable");
      }
    }
  }

  SurfaceMesh mesh;
  mesh.vertices_ = std::move(vertices);
  mesh.triangles_ = std::move(triangles);
  if (mesh.signed_volume() < 0.0)
    for (auto& t : mesh.triangles_) std::swap(t[1], t[2]);

  mesh.edges_.reserve(table.ends.size());
  for (std::size_t e = 0; e < table.ends.size(); ++e) {
    Edge edge;
    edge.v0 = table.ends[e].first;
    edge.v1 = table.ends[e].second;
    edge.faces = {table.faces[e][0], table.faces[e][1]};
    mesh.edges_.push_back(edge);
  }
  mesh.adjacency_.assign(nv, {});
  for (const auto& e : mesh.edges_) {
    mesh.adjacency_[e.v0].push_back(e.v1);
    mesh.adjacency_[e.v1].push_back(e.v0);
  }
  for (auto& ring : mesh.adjacency_) std::sort(ring.begin(), ring.end());
  mesh.vertex_faces_.assign(nv, {});
  for (int f = 0; f < nf; ++f)
    for (int v : mesh.triangles_[f]) mesh.vertex_faces_[v].push_back(f);
  return mesh;
}

double SurfaceMesh::triangle_area(int f) const {
  const auto& t = triangles_[f];
  return area_of(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
}

Vec3 SurfaceMesh::triangle_normal(int f) const {
  const auto& t = triangles_[f];
  return (vertices_[t[1]] - vertices_[t[0]])
      .cross(vertices_[t[2]] - vertices_[t[0]])
      .normalized();
}

double SurfaceMesh::total_area() const {
  double total = 0.0;
  for (int f = 0; f < num_faces(); ++f) total += triangle_area(f);
  return total;
}

double SurfaceMesh::signed_volume() const {
  double volume = 0.0;
  for (const auto& t : triangles_)
    volume += vertices_[t[0]].dot(vertices_[t[1]].cross(vertices_[t[2]]));
  return volume / 6.0;
}

double SurfaceMesh::edge_length(const Edge& e) const {
  return (vertices_[e.v1] - vertices_[e.v0]).norm();
}

double SurfaceMesh::min_edge_length() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : edges_) best = std::min(best, edge_length(e));
  return best;
}

double SurfaceMesh::max_edge_length() const {
  double best = 0.0;
  for (const auto& e : edges_) best = std::max(best, edge_length(e));
  return best;
}

SurfaceMesh SurfaceMesh::scaled(double factor) const {
  SurfaceMesh copy = *this;
  for (auto& v : copy.vertices_) v *= factor;
  return copy;
}

SurfaceMesh generate_icosphere(const Vec3& center, double radius,
                               int subdivisions) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw DomainError("icosphere radius must be positive");
  if (subdivisions < 0) throw DomainError("subdivisions must be nonnegative");
  if (subdivisions > kMaxIcosphereSubdivisions)
    throw DomainError("icosphere subdivision limit exceeded (max " +
                      std::to_string(kMaxIcosphereSubdivisions) + ")");

  const double phi = std::numbers::phi;
  std::vector<Vec3> unit = {
      {-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1},
  };
  for (auto& v : unit) v.normalize();
  std::vector<Triangle> faces = {
      {0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };

  for (int level = 0; level < subdivisions; ++level) {
    std::unordered_map<std::uint64_t, int> midpoint;
    auto split = [&](int a, int b) {
      auto [it, inserted] =
          midpoint.try_emplace(edge_key(a, b), static_cast<int>(unit.size()));
      if (inserted) unit.push_back((unit[a] + unit[b]).normalized());
      return it->second;
    };
    std::vector<Triangle> refined;
    refined.reserve(faces.size() * 4);
    for (const auto& t : faces) {
      const int ab = split(t[0], t[1]);
      const int bc = split(t[1], t[2]);
      const int ca = split(t[2], t[0]);
      refined.push_back({t[0], ab, ca});
      refined.push_back({t[1], bc, ab});
      refined.push_back({t[2], ca, bc});
      refined.push_back({ab, bc, ca});
    }
    faces = std::move(refined);
  }

  for (auto& v : unit) v = center + radius * v;
  return SurfaceMesh::build(std::move(unit), std::move(faces));
}

SurfaceMesh generate_torus(const Vec3& center, double major_radius,
                           double minor_radius, int nu, int nv) {
  if (!(major_radius > 0.0) || !(minor_radius > 0.0))
    throw DomainError("torus radii must be positive");
  if (minor_radius >= major_radius)
    throw DomainError("torus requires r < R (r >= R self-intersects)");
  if (nu < 8 || nv < 8) throw DomainError("torus resolution must be >= 8");

  std::vector<Vec3> vertices;
  vertices.reserve(static_cast<std::size_t>(nu) * nv);
  for (int i = 0; i < nu; ++i) {
    const double u = 2.0 * std::numbers::pi * i / nu;
    for (int j = 0; j < nv; ++j) {
      const double v = 2.0 * std::numbers::pi * j / nv;
      const double ring = major_radius + minor_radius * std::cos(v);
      vertices.push_back(center + Vec3(ring * std::cos(u), ring * std::sin(u),
                                        minor_radius * std::sin(v)));
    }
  }
  std::vector<Triangle> faces;
  faces.reserve(2 * static_cast<std::size_t>(nu) * nv);
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const int a = torus_vertex(i, j, nu, nv);
      const int b = torus_vertex(i + 1, j, nu, nv);
      const int c = torus_vertex(i + 1, j + 1, nu, nv);
      const int d = torus_vertex(i, j + 1, nu, nv);
      faces.push_back({a, b, c});
      faces.push_back({a, c, d});
    }
  }
  return SurfaceMesh::build(std::move(vertices), std::move(faces));
}

}  // namespace dampsurf
