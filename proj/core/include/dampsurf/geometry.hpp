#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dampsurf/mesh.hpp"

namespace dampsurf {

/// Unit vertex normals (Max's weighting: corner cross products divided by the
/// squared lengths of both corner edges) and barycentric vertex areas.
struct VertexGeometry {
  std::vector<Vec3> normals;
  std::vector<double> areas;
};

VertexGeometry vertex_normals_and_areas(const SurfaceMesh& mesh);

/// Per-vertex shape operator data.
///
/// Sign convention: B = -dN, where N is the Gauss map of the outward normal.
/// Under this convention the unit sphere has k1 = k2 = H = -1, and a surface
/// is "convex towards the outside" where H < 0.
struct CurvatureField {
  std::vector<Vec3> normals;
  std::vector<double> k1;  // k1 <= k2
  std::vector<double> k2;
  std::vector<double> H;   // (k1 + k2) / 2
  std::vector<Vec3> dir1;
  std::vector<Vec3> dir2;
  /// B as a symmetric 3x3 tensor acting on the tangent plane (zero on nu).
  std::vector<Eigen::Matrix3d> tensor;
  double norm_B = 0.0;   // sup over vertices of max(|k1|, |k2|)
  double sup_abs_H = 0.0;

  double gap(int v) const { return k2[v] - k1[v]; }
};

/// Least-squares fit of dN over each one-ring, symmetrized in the tangent
/// plane and negated. Throws DomainError on a rank-deficient one-ring.
CurvatureField shape_operator(const SurfaceMesh& mesh,
                              std::span<const Vec3> normals);

/// Visibility partition relative to an observer x0 together with the
/// multiplier field m(x) = x - x0 and its tangential part.
struct RegionDecomposition {
  Vec3 x0 = Vec3::Zero();
  std::vector<char> in_M1;        // m . nu > 0
  std::vector<Vec3> m_field;
  std::vector<Vec3> mT_field;
  std::vector<double> m_dot_nu;
  double R_max = 0.0;
  /// Undamped candidate patches M0i (vertex sets inside M0). Empty until
  /// `select_patches` runs.
  std::vector<std::vector<int>> patches;

  bool in_M0(int v) const { return !in_M1[v]; }
  /// Vertices outside every patch, i.e. M2 = M \ U M0i.
  std::vector<int> complement_of_patches() const;
};

RegionDecomposition classify_visibility(const SurfaceMesh& mesh,
                                        std::span<const Vec3> normals,
                                        const Vec3& x0);

/// Area fraction of M1 measured with barycentric vertex areas.
double visible_area_fraction(const RegionDecomposition& decomp,
                             std::span<const double> vertex_areas);

enum class PatchMode {
  none,                  // no undamped patches: damping everywhere
  all_m0,                // every connected component of M0
  m0_component,          // components of M0 containing a seed vertex
  admissible_component,  // components of {M0, H <= tol_H, gap < eps_umb} containing a seed
};

struct PatchSelection {
  PatchMode mode = PatchMode::none;
  std::vector<int> seeds;
  double eps_umb = 0.5;
  std::optional<double> tol_H;  // defaults to 1e-6 * norm_B
};

RegionDecomposition select_patches(const SurfaceMesh& mesh,
                                   RegionDecomposition decomp,
                                   const CurvatureField& curv,
                                   const PatchSelection& selection);

struct AdmissibilityReport {
  double H_max = 0.0;
  double gap_max = 0.0;
  double tol_H = 0.0;
  double eps_umb = 0.0;
  bool admissible = false;
};

/// admissible = (max H <= tol_H) and (max |k1 - k2| < eps_umb) over the patch.
AdmissibilityReport check_admissible_patch(const CurvatureField& curv,
                                           std::span<const int> patch,
                                           double eps_umb,
                                           std::optional<double> tol_H = {});

/// Multi-source Dijkstra on the edge graph with Euclidean edge lengths. An
/// upper bound on the geodesic distance to the source set.
std::vector<double> geodesic_distance(const SurfaceMesh& mesh,
                                      std::span<const int> sources);

// -- cut-off --------------------------------------------------------------

/// One-dimensional profile: 1 for x <= 0, (x-1)^2 on [1/2, 1], 0 for x > 1,
/// and on (0, 1/2) the cubic Hermite fill with eta(0) = 1, eta'(0) = 0,
/// eta(1/2) = 1/4, eta'(1/2) = -1. C^1 and non-increasing.
double cutoff_profile(double x);
double cutoff_profile_derivative(double x);

/// max over (0, 1) of eta'(x)^2 / eta(x), by dense sampling.
double cutoff_profile_bound(int samples = 200000);

struct Cutoff {
  std::vector<double> eta;
  std::vector<double> distance;  // d(v, M2)
  double eps_tube = 0.0;
  double M_bound = 0.0;
  /// max over faces with positive face-mean eta of
  /// eps^2 |grad_T eta|^2 / mean(eta).
  double discrete_bound = 0.0;
};

/// eta(v) = profile(d(v, M2) / eps_tube). Requires eps_tube > 2 * max edge
/// unless M2 is every vertex.
Cutoff build_cutoff(const SurfaceMesh& mesh, std::span<const int> M2,
                    double eps_tube);

struct DampingProfile {
  std::vector<double> a;
  std::vector<char> in_Mstar;  // d(v, M2) <= eps_tube
  double a0 = 0.0;
  double a_max = 0.0;
  double a_inf = 0.0;  // max a
  Cutoff cutoff;

  double min_on_Mstar() const;
};

struct DampingOptions {
  double a0 = 0.1;
  double a_max = 1.0;
  double eps_tube = 0.3;
  bool waive_admissibility = false;
  double eps_umb = 0.5;
  std::optional<double> tol_H;
};

/// Builds a(x) = a_max * profile(max(0, d(x, M2) - eps) / eps): constant a_max
/// on the closed eps-neighbourhood Mstar of M2, rolling off to zero across a
/// second eps collar inside the patches. With no patches a == a_max.
///
/// Throws DomainError when a patch is inadmissible (unless waived) or too
/// shallow to contain the double collar.
DampingProfile build_damping(const SurfaceMesh& mesh,
                             const RegionDecomposition& decomp,
                             const CurvatureField& curv,
                             const DampingOptions& options);

}  // namespace dampsurf
