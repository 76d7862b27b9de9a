#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dampsurf/error.hpp"
#include "dampsurf/mesh.hpp"

using namespace dampsurf;
namespace fs = std::filesystem;

namespace {

const fs::path kData = DAMPSURF_TEST_DATA_DIR;

TriangleSoup soup_of(const SurfaceMesh& m) { return {m.vertices(), m.triangles()}; }

std::string build_error(std::vector<Vec3> v, std::vector<Triangle> t) {
  try {
    (void)SurfaceMesh::build(std::move(v), std::move(t));
  } catch (const MeshError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("icosahedron OFF file loads with V=12, E=30, F=20") {
  const SurfaceMesh m = load_mesh(kData / "icosahedron.off");
  CHECK(m.num_vertices() == 12);
  CHECK(m.num_edges() == 30);
  CHECK(m.num_faces() == 20);
  CHECK(m.euler_characteristic() == 2);
  CHECK(m.signed_volume() > 0.0);
}

TEST_CASE("load_mesh preserves the vertex order of the file") {
  std::ifstream in(kData / "icosahedron.off");
  const TriangleSoup soup = read_off(in);
  const SurfaceMesh m = load_mesh(kData / "icosahedron.off");
  REQUIRE(soup.vertices.size() == m.vertices().size());
  for (std::size_t i = 0; i < soup.vertices.size(); ++i) CHECK(soup.vertices[i] == m.vertices()[i]);
}

TEST_CASE("OBJ with a boundary edge is rejected as an open surface") {
  try {
    (void)load_mesh(kData / "open_tetra.obj");
    FAIL("expected MeshError");
  } catch (const MeshError& e) {
    CHECK(std::string(e.what()).find("open surface") != std::string::npos);
  }
}

TEST_CASE("OBJ with texture indices is rejected") {
  CHECK_THROWS_AS(load_mesh(kData / "texture_index.obj"), MeshError);
}

TEST_CASE("OBJ rejects negative indices and unsupported statements") {
  std::istringstream neg("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -1 -2 -3\n");
  CHECK_THROWS_AS(read_obj(neg), MeshError);
  std::istringstream vn("v 0 0 0\nvn 0 0 1\n");
  CHECK_THROWS_AS(read_obj(vn), MeshError);
}

TEST_CASE("OFF parser rejects malformed input") {
  std::istringstream no_header("3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  CHECK_THROWS_AS(read_off(no_header), MeshError);
  std::istringstream quad("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
  CHECK_THROWS_AS(read_off(quad), MeshError);
  std::istringstream truncated("OFF\n3 1 0\n0 0 0\n1 0 0\n");
  CHECK_THROWS_AS(read_off(truncated), MeshError);
  std::istringstream trailing("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\nextra\n");
  CHECK_THROWS_AS(read_off(trailing), MeshError);
  std::istringstream bad_number("OFF\n3 1 0\n0 0 x\n1 0 0\n0 1 0\n3 0 1 2\n");
  CHECK_THROWS_AS(read_off(bad_number), MeshError);
}

TEST_CASE("unknown extension is rejected") {
  CHECK_THROWS_AS(format_from_extension("mesh.stl"), MeshError);
  CHECK(format_from_extension("a/b.OFF") == MeshFormat::off);
  CHECK(format_from_extension("a/b.obj") == MeshFormat::obj);
}

TEST_CASE("16x16 torus written as OFF reloads with chi = 0") {
  const fs::path path = fs::temp_directory_path() / "dampsurf_torus16.off";
  save_off(path, generate_torus(Vec3::Zero(), 2.0, 1.0, 16, 16));
  const SurfaceMesh m = load_mesh(path);
  CHECK(m.euler_characteristic() == 0);
  CHECK(m.num_vertices() == 256);
  fs::remove(path);
}

TEST_CASE("OFF writer round-trips coordinates bit-exactly") {
  const SurfaceMesh m = generate_icosphere(Vec3(0.1, -0.2, 0.3), 1.7, 2);
  std::stringstream buf;
  write_off(buf, m);
  const TriangleSoup back = read_off(buf);
  REQUIRE(back.vertices.size() == m.vertices().size());
  for (std::size_t i = 0; i < back.vertices.size(); ++i) CHECK(back.vertices[i] == m.vertices()[i]);
  CHECK(back.triangles == m.triangles());
}

TEST_CASE("icosphere counts") {
  const SurfaceMesh s0 = generate_icosphere(Vec3::Zero(), 1.0, 0);
  CHECK(s0.num_vertices() == 12);
  CHECK(s0.num_faces() == 20);
  CHECK(generate_icosphere(Vec3::Zero(), 1.0, 2).num_faces() == 320);
  for (int s = 0; s <= 4; ++s) {
    const SurfaceMesh m = generate_icosphere(Vec3::Zero(), 1.0, s);
    CHECK(m.num_faces() == 20 * (1 << (2 * s)));
    CHECK(m.num_vertices() == 10 * (1 << (2 * s)) + 2);
  }
}

TEST_CASE("icosphere vertices lie on the sphere and face outward") {
  const Vec3 c(1.0, 2.0, -0.5);
  const SurfaceMesh m = generate_icosphere(c, 2.0, 3);
  for (const auto& v : m.vertices()) CHECK(std::abs((v - c).norm() - 2.0) <= 1e-12 * 2.0);
  for (int f = 0; f < m.num_faces(); ++f) {
    const auto& t = m.triangles()[f];
    const Vec3 centroid = (m.vertices()[t[0]] + m.vertices()[t[1]] + m.vertices()[t[2]]) / 3.0;
    CHECK(m.triangle_normal(f).dot(centroid - c) > 0.0);
  }
}

TEST_CASE("icosphere radius 2, subdivision 3: area within 1% of 16 pi") {
  const double area = generate_icosphere(Vec3::Zero(), 2.0, 3).total_area();
  CHECK(std::abs(area - 16.0 * std::numbers::pi) <= 0.01 * 16.0 * std::numbers::pi);
}

TEST_CASE("icosphere area is nondecreasing and converges with ratio near 4") {
  std::vector<double> area;
  for (int s = 0; s <= 6; ++s) area.push_back(generate_icosphere(Vec3::Zero(), 1.0, s).total_area());
  for (std::size_t i = 1; i < area.size(); ++i) {
    CHECK(area[i] >= area[i - 1]);
    CHECK(area[i] < 4.0 * std::numbers::pi);
  }
  for (std::size_t i = 3; i < area.size(); ++i) {
    const double ratio = (area[i - 1] - area[i - 2]) / (area[i] - area[i - 1]);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
  }
}

TEST_CASE("icosphere subdivision limit") {
  CHECK_THROWS_AS(generate_icosphere(Vec3::Zero(), 1.0, kMaxIcosphereSubdivisions + 1), DomainError);
  CHECK_THROWS_AS(generate_icosphere(Vec3::Zero(), 0.0, 1), DomainError);
}

TEST_CASE("torus counts and area") {
  const SurfaceMesh t32 = generate_torus(Vec3::Zero(), 2.0, 1.0, 32, 32);
  CHECK(t32.num_vertices() == 1024);
  CHECK(t32.num_faces() == 2048);
  CHECK(t32.euler_characteristic() == 0);
  CHECK(t32.signed_volume() > 0.0);
  const double area = generate_torus(Vec3::Zero(), 2.0, 1.0, 64, 64).total_area();
  const double exact = 8.0 * std::numbers::pi * std::numbers::pi;
  CHECK(std::abs(area - exact) <= 0.01 * exact);
}

TEST_CASE("torus with r >= R is rejected") {
  try {
    (void)generate_torus(Vec3::Zero(), 1.0, 1.0, 16, 16);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("r >= R") != std::string::npos);
  }
  CHECK_THROWS_AS(generate_torus(Vec3::Zero(), 2.0, 1.0, 4, 16), DomainError);
}

TEST_CASE("validation report of generated meshes") {
  const ValidationReport r = validate_closed_manifold(generate_icosphere(Vec3::Zero(), 1.0, 1));
  CHECK(r.V == 42);
  CHECK(r.E == 120);
  CHECK(r.F == 80);
  CHECK(r.chi == 2);
  CHECK(r.is_closed);
  CHECK(r.is_oriented);
  CHECK(r.ok());

  const ValidationReport t = validate_closed_manifold(generate_torus(Vec3::Zero(), 2.0, 1.0, 16, 16));
  CHECK(t.chi == 0);
  CHECK(t.is_closed);
  CHECK(t.is_oriented);

  for (int s = 0; s <= 4; ++s) {
    const ValidationReport q = validate_closed_manifold(generate_icosphere(Vec3::Zero(), 1.0, s));
    CHECK(q.is_closed);
    CHECK(q.is_oriented);
  }
}

TEST_CASE("icosphere with one face deleted is not closed") {
  TriangleSoup soup = soup_of(generate_icosphere(Vec3::Zero(), 1.0, 2));
  soup.triangles.pop_back();
  const ValidationReport r = validate_closed_manifold(soup.vertices, soup.triangles);
  CHECK_FALSE(r.is_closed);
  CHECK(r.boundary_edges == 3);
  CHECK_FALSE(r.ok());
}

TEST_CASE("validation flags inconsistent winding without throwing") {
  TriangleSoup soup = soup_of(generate_icosphere(Vec3::Zero(), 1.0, 1));
  std::swap(soup.triangles[5][0], soup.triangles[5][1]);
  const ValidationReport r = validate_closed_manifold(soup.vertices, soup.triangles);
  CHECK(r.is_closed);
  CHECK_FALSE(r.is_oriented);
}

TEST_CASE("winding repair by propagation and global flip") {
  SUBCASE("one flipped face is repaired") {
    const SurfaceMesh m = load_mesh(kData / "tetra_flipped.obj");
    CHECK(validate_closed_manifold(m).is_oriented);
    CHECK(m.signed_volume() > 0.0);
  }
  SUBCASE("fully inward winding is flipped outward") {
    TriangleSoup soup = soup_of(generate_icosphere(Vec3::Zero(), 1.0, 2));
    for (auto& t : soup.triangles) std::swap(t[1], t[2]);
    const SurfaceMesh m = SurfaceMesh::build(soup.vertices, soup.triangles);
    CHECK(m.signed_volume() > 0.0);
  }
}

TEST_CASE("non-orientable closed surface is rejected") {
  try {
    (void)load_mesh(kData / "rp2.obj");
    FAIL("expected MeshError");
  } catch (const MeshError& e) {
    CHECK(std::string(e.what()).find("inconsistent orientation") != std::string::npos);
  }
}

TEST_CASE("mesh build errors") {
  const std::vector<Vec3> tet{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const std::vector<Triangle> closed{{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};

  SUBCASE("a valid tetrahedron builds") {
    CHECK(SurfaceMesh::build(tet, closed).num_edges() == 6);
  }
  SUBCASE("index out of range") {
    auto t = closed;
    t[0][0] = 7;
    CHECK(build_error(tet, t).find("out of range") != std::string::npos);
  }
  SUBCASE("repeated index") {
    auto t = closed;
    t[0] = {0, 0, 1};
    CHECK(build_error(tet, t).find("repeated vertex") != std::string::npos);
  }
  SUBCASE("non-manifold edge") {
    // Two tetrahedra glued along one edge with a third face on it.
    std::vector<Vec3> v = tet;
    v.push_back({1, 1, 1});
    auto t = closed;
    t.push_back({0, 1, 4});
    CHECK(build_error(v, t).find("non-manifold") != std::string::npos);
  }
  SUBCASE("unreferenced vertex") {
    std::vector<Vec3> v = tet;
    v.push_back({5, 5, 5});
    CHECK(build_error(v, closed).find("unreferenced") != std::string::npos);
  }
  SUBCASE("disconnected surface") {
    std::vector<Vec3> v = tet;
    auto t = closed;
    for (int i = 0; i < 4; ++i) v.push_back(tet[i] + Vec3(5, 0, 0));
    for (const auto& f : closed) t.push_back({f[0] + 4, f[1] + 4, f[2] + 4});
    CHECK(build_error(v, t).find("disconnected") != std::string::npos);
  }
  SUBCASE("degenerate triangle") {
    // Flatten one apex onto the opposite edge's midpoint: tiny area faces.
    std::vector<Vec3> v = tet;
    v[3] = Vec3(0.5, 0.5, 1e-14);
    v[2] = Vec3(1.0, 1.0, 0.0);
    CHECK_THROWS_AS(SurfaceMesh::build(v, closed), MeshError);
  }
  SUBCASE("non-finite coordinate") {
    std::vector<Vec3> v = tet;
    v[1].x() = std::nan("");
    CHECK(build_error(v, closed).find("non-finite") != std::string::npos);
  }
}

TEST_CASE("edge table and adjacency are consistent") {
  const SurfaceMesh m = generate_icosphere(Vec3::Zero(), 1.0, 2);
  for (const auto& e : m.edges()) {
    CHECK(e.v0 < e.v1);
    CHECK(e.faces[0] >= 0);
    CHECK(e.faces[1] >= 0);
  }
  int degree_sum = 0;
  for (const auto& nbrs : m.adjacency()) {
    degree_sum += static_cast<int>(nbrs.size());
    CHECK(std::is_sorted(nbrs.begin(), nbrs.end()));
  }
  CHECK(degree_sum == 2 * m.num_edges());
}

TEST_CASE("generator specs") {
  CHECK(mesh_from_source("icosphere:1:2").num_faces() == 320);
  CHECK(mesh_from_source("torus:2:1:16:16").euler_characteristic() == 0);
  const SurfaceMesh shifted = mesh_from_source("icosphere:2:1:1:0:0");
  CHECK((shifted.vertices()[0] - Vec3(1, 0, 0)).norm() == doctest::Approx(2.0));
  CHECK(mesh_from_source((kData / "icosahedron.off").string()).num_vertices() == 12);
  CHECK(mesh_from_source("file:" + (kData / "icosahedron.off").string()).num_vertices() == 12);
  CHECK_THROWS_AS(mesh_from_source("icosphere:1"), MeshError);
  CHECK_THROWS_AS(mesh_from_source("torus:2:1:16"), MeshError);
  CHECK_THROWS_AS(mesh_from_source("icosphere:a:b"), MeshError);
}

TEST_CASE("scaling multiplies lengths and areas") {
  const SurfaceMesh m = generate_icosphere(Vec3::Zero(), 1.0, 2);
  const SurfaceMesh s = m.scaled(2.0);
  CHECK(s.total_area() == doctest::Approx(4.0 * m.total_area()).epsilon(1e-12));
  CHECK(s.max_edge_length() == doctest::Approx(2.0 * m.max_edge_length()).epsilon(1e-12));
}
