#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dampsurf {

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<int, 3>;

/// Undirected edge with its (at most two) incident triangles. `v0 < v1`.
struct Edge {
  int v0 = -1;
  int v1 = -1;
  std::array<int, 2> faces{-1, -1};
};

/// Topology and quality summary of an indexed triangle set. Never throws;
/// failures are carried in the flags.
struct ValidationReport {
  int V = 0;
  int E = 0;
  int F = 0;
  int chi = 0;
  bool is_closed = false;    // every edge has exactly two incident faces
  bool is_oriented = false;  // neighbouring faces traverse shared edges oppositely
  bool is_connected = false;
  double min_area_ratio = 0.0;  // min triangle area / mean triangle area
  int boundary_edges = 0;
  int nonmanifold_edges = 0;
  int unreferenced_vertices = 0;

  bool ok() const;
};

ValidationReport validate_closed_manifold(std::span<const Vec3> vertices,
                                          std::span<const Triangle> triangles);

/// Closed, connected, consistently (outward) oriented triangle mesh.
///
/// Instances are only produced through `SurfaceMesh::build`, which repairs
/// winding by breadth-first propagation and flips globally so that the
/// enclosed signed volume is positive. Immutable afterwards.
class SurfaceMesh {
 public:
  /// Relative degeneracy floor: triangles with area <= this times the mean
  /// area are rejected.
  static constexpr double kDegenerateAreaRatio = 1e-12;

  static SurfaceMesh build(std::vector<Vec3> vertices,
                           std::vector<Triangle> triangles);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }
  /// Sorted one-ring neighbour lists.
  const std::vector<std::vector<int>>& adjacency() const { return adjacency_; }
  /// Incident triangle lists per vertex.
  const std::vector<std::vector<int>>& vertex_faces() const {
    return vertex_faces_;
  }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_faces() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int euler_characteristic() const {
    return num_vertices() - num_edges() + num_faces();
  }

  double triangle_area(int f) const;
  Vec3 triangle_normal(int f) const;  // unit, follows winding
  double total_area() const;
  double signed_volume() const;
  double min_edge_length() const;
  double max_edge_length() const;
  double edge_length(const Edge& e) const;

  /// Uniform scaling about the origin (used for covariance checks).
  SurfaceMesh scaled(double factor) const;

 private:
  SurfaceMesh() = default;

  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<std::vector<int>> vertex_faces_;
};

inline ValidationReport validate_closed_manifold(const SurfaceMesh& mesh) {
  return validate_closed_manifold(mesh.vertices(), mesh.triangles());
}

constexpr int kMaxIcosphereSubdivisions = 8;

SurfaceMesh generate_icosphere(const Vec3& center, double radius,
                               int subdivisions);

/// Grid torus around the z axis; `nu` samples the big circle, `nv` the tube.
/// Vertex (i, j) sits at angle 2*pi*i/nu around the axis and 2*pi*j/nv around
/// the tube, with j = 0 on the outer equator.
SurfaceMesh generate_torus(const Vec3& center, double major_radius,
                           double minor_radius, int nu, int nv);

inline int torus_vertex(int i, int j, int nu, int nv) {
  return ((i % nu + nu) % nu) * nv + ((j % nv + nv) % nv);
}

enum class MeshFormat { off, obj };

/// Raw triangle soup as read from disk, before topology checks.
struct TriangleSoup {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
};

TriangleSoup read_off(std::istream& in);
TriangleSoup read_obj(std::istream& in);
void write_off(std::ostream& out, const SurfaceMesh& mesh);

MeshFormat format_from_extension(const std::filesystem::path& path);
SurfaceMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
SurfaceMesh load_mesh(const std::filesystem::path& path);
void save_off(const std::filesystem::path& path, const SurfaceMesh& mesh);

/// Resolves a mesh source string: `icosphere:<radius>:<subdiv>`,
/// `torus:<R>:<r>:<nu>:<nv>`, `file:<path>` or a bare path.
SurfaceMesh mesh_from_source(const std::string& source);

}  // namespace dampsurf
