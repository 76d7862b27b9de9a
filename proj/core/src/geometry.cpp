#include "dampsurf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <string>

#include <Eigen/Dense>

#include "dampsurf/error.hpp"

namespace dampsurf {

namespace {

// Max's corner weight: exact for one-rings inscribed in a sphere.
Vec3 corner_normal(const Vec3& at, const Vec3& p, const Vec3& q) {
  const Vec3 a = p - at;
  const Vec3 b = q - at;
  return a.cross(b) / (a.squaredNorm() * b.squaredNorm());
}

// Orthonormal (t1, t2) with t1 x t2 = n.
std::pair<Vec3, Vec3> tangent_frame(const Vec3& n) {
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 t1 = (helper - helper.dot(n) * n).normalized();
  return {t1, n.cross(t1)};
}

}  // namespace

VertexGeometry vertex_normals_and_areas(const SurfaceMesh& mesh) {
  const int nv = mesh.num_vertices();
  VertexGeometry out;
  out.normals.assign(nv, Vec3::Zero());
  out.areas.assign(nv, 0.0);
  const auto& x = mesh.vertices();
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.triangles()[f];
    const double third = mesh.triangle_area(f) / 3.0;
    for (int k = 0; k < 3; ++k) {
      const int v = t[k];
      out.normals[v] += corner_normal(x[v], x[t[(k + 1) % 3]], x[t[(k + 2) % 3]]);
      out.areas[v] += third;
    }
  }
  for (int v = 0; v < nv; ++v) {
    const double len = out.normals[v].norm();
    if (!(len > 1e-14))
      throw DomainError("zero-norm vertex normal at vertex " + std::to_string(v));
    out.normals[v] /= len;
  }
  return out;
}

CurvatureField shape_operator(const SurfaceMesh& mesh,
                              std::span<const Vec3> normals) {
  const int nv = mesh.num_vertices();
  if (static_cast<int>(normals.size()) != nv)
    throw DomainError("shape_operator: normal count does not match mesh");
  CurvatureField c;
  c.normals.assign(normals.begin(), normals.end());
  c.k1.resize(nv);
  c.k2.resize(nv);
  c.H.resize(nv);
  c.dir1.resize(nv);
  c.dir2.resize(nv);
  c.tensor.resize(nv);

  const auto& x = mesh.vertices();
  for (int i = 0; i < nv; ++i) {
    const Vec3& n = normals[i];
    const auto [t1, t2] = tangent_frame(n);
    Eigen::Matrix2d gram = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d cross = Eigen::Matrix2d::Zero();
    for (int j : mesh.adjacency()[i]) {
      const Vec3 e = x[j] - x[i];
      const Vec3 dn = normals[j] - n;
      const double w = 1.0 / e.squaredNorm();
      const Eigen::Vector2d e2(e.dot(t1), e.dot(t2));
      const Eigen::Vector2d d2(dn.dot(t1), dn.dot(t2));
      gram += w * e2 * e2.transpose();
      cross += w * d2 * e2.transpose();
    }
    const double tr = gram.trace();
    if (!(gram.determinant() > 1e-10 * tr * tr))
      throw DomainError("rank-deficient curvature fit at vertex " +
                        std::to_string(i));
    const Eigen::Matrix2d dN = cross * gram.inverse();
    const Eigen::Matrix2d B = -0.5 * (dN + dN.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(B);
    const Eigen::Vector2d k = eig.eigenvalues();  // ascending
    const Eigen::Matrix2d Q = eig.eigenvectors();
    c.k1[i] = k(0);
    c.k2[i] = k(1);
    c.H[i] = 0.5 * (k(0) + k(1));
    c.dir1[i] = (Q(0, 0) * t1 + Q(1, 0) * t2).normalized();
    c.dir2[i] = n.cross(c.dir1[i]);
    c.tensor[i] = k(0) * c.dir1[i] * c.dir1[i].transpose() +
                  k(1) * c.dir2[i] * c.dir2[i].transpose();
    c.norm_B = std::max({c.norm_B, std::abs(k(0)), std::abs(k(1))});
    c.sup_abs_H = std::max(c.sup_abs_H, std::abs(c.H[i]));
  }
  return c;
}

std::vector<int> RegionDecomposition::complement_of_patches() const {
  std::vector<char> covered(in_M1.size(), 0);
  for (const auto& patch : patches)
    for (int v : patch) covered[v] = 1;
  std::vector<int> out;
  for (int v = 0; v < static_cast<int>(covered.size()); ++v)
    if (!covered[v]) out.push_back(v);
  return out;
}

RegionDecomposition classify_visibility(const SurfaceMesh& mesh,
                                        std::span<const Vec3> normals,
                                        const Vec3& x0) {
  if (!x0.allFinite()) throw DomainError("observer x0 must be finite");
  const int nv = mesh.num_vertices();
  RegionDecomposition d;
  d.x0 = x0;
  d.in_M1.resize(nv);
  d.m_field.resize(nv);
  d.mT_field.resize(nv);
  d.m_dot_nu.resize(nv);
  for (int v = 0; v < nv; ++v) {
    const Vec3 m = mesh.vertices()[v] - x0;
    const double mn = m.dot(normals[v]);
    d.m_field[v] = m;
    d.m_dot_nu[v] = mn;
    d.mT_field[v] = m - mn * normals[v];
    d.in_M1[v] = mn > 0.0;
    d.R_max = std::max(d.R_max, m.norm());
  }
  return d;
}

double visible_area_fraction(const RegionDecomposition& decomp,
                             std::span<const double> vertex_areas) {
  double visible = 0.0;
  double total = 0.0;
  for (std::size_t v = 0; v < vertex_areas.size(); ++v) {
    total += vertex_areas[v];
    if (decomp.in_M1[v]) visible += vertex_areas[v];
  }
  return visible / total;
}

RegionDecomposition select_patches(const SurfaceMesh& mesh,
                                   RegionDecomposition decomp,
                                   const CurvatureField& curv,
                                   const PatchSelection& selection) {
  const int nv = mesh.num_vertices();
  decomp.patches.clear();
  if (selection.mode == PatchMode::none) return decomp;

  const double tol_H = selection.tol_H.value_or(1e-6 * curv.norm_B);
  std::vector<char> eligible(nv, 0);
  for (int v = 0; v < nv; ++v) {
    eligible[v] = decomp.in_M0(v);
    if (selection.mode == PatchMode::admissible_component)
      eligible[v] = eligible[v] && curv.H[v] <= tol_H &&
                    curv.gap(v) < selection.eps_umb;
  }

  std::vector<int> component(nv, -1);
  std::vector<std::vector<int>> components;
  for (int s = 0; s < nv; ++s) {
    if (!eligible[s] || component[s] >= 0) continue;
    const int id = static_cast<int>(components.size());
    components.emplace_back();
    std::deque<int> queue{s};
    component[s] = id;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      components[id].push_back(v);
      for (int w : mesh.adjacency()[v])
        if (eligible[w] && component[w] < 0) {
          component[w] = id;
          queue.push_back(w);
        }
    }
    std::sort(components[id].begin(), components[id].end());
  }

  if (selection.mode == PatchMode::all_m0) {
    decomp.patches = std::move(components);
    return decomp;
  }
  if (selection.seeds.empty())
    throw DomainError("patch selection requires at least one seed vertex");
  std::vector<char> taken(components.size(), 0);
  for (int seed : selection.seeds) {
    if (seed < 0 || seed >= nv)
      throw DomainError("patch seed " + std::to_string(seed) + " out of range");
    if (component[seed] < 0)
      throw DomainError("patch seed " + std::to_string(seed) +
                        " is not in the selectable part of M0");
    if (!taken[component[seed]]) {
      taken[component[seed]] = 1;
      decomp.patches.push_back(components[component[seed]]);
    }
  }
  return decomp;
}

AdmissibilityReport check_admissible_patch(const CurvatureField& curv,
                                           std::span<const int> patch,
                                           double eps_umb,
                                           std::optional<double> tol_H) {
  if (patch.empty()) throw DomainError("admissibility check on an empty patch");
  if (!(eps_umb > 0.0)) throw DomainError("eps_umb must be positive");
  AdmissibilityReport r;
  r.eps_umb = eps_umb;
  r.tol_H = tol_H.value_or(1e-6 * curv.norm_B);
  r.H_max = -std::numeric_limits<double>::infinity();
  for (int v : patch) {
    r.H_max = std::max(r.H_max, curv.H[v]);
    r.gap_max = std::max(r.gap_max, std::abs(curv.k1[v] - curv.k2[v]));
  }
  r.admissible = r.H_max <= r.tol_H && r.gap_max < eps_umb;
  return r;
}

std::vector<double> geodesic_distance(const SurfaceMesh& mesh,
                                      std::span<const int> sources) {
  if (sources.empty()) throw DomainError("geodesic_distance: empty source set");
  const int nv = mesh.num_vertices();
  std::vector<double> dist(nv, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (int s : sources) {
    dist.at(s) = 0.0;
    heap.emplace(0.0, s);
  }
  const auto& x = mesh.vertices();
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (int w : mesh.adjacency()[v]) {
      const double cand = d + (x[w] - x[v]).norm();
      if (cand < dist[w]) {
        dist[w] = cand;
        heap.emplace(cand, w);
      }
    }
  }
  return dist;
}

}  // namespace dampsurf
