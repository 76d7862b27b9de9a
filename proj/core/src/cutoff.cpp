#include <algorithm>
#include <cmath>
#include <string>

#include "dampsurf/error.hpp"
#include "dampsurf/geometry.hpp"
#include "dampsurf/operators.hpp"

namespace dampsurf {

// On (0, 1/2) with t = 2x the Hermite fill is t^3 - 7/4 t^2 + 1.
double cutoff_profile(double x) {
  if (x <= 0.0) return 1.0;
  if (x > 1.0) return 0.0;
  if (x >= 0.5) return (x - 1.0) * (x - 1.0);
  const double t = 2.0 * x;
  return t * t * t - 1.75 * t * t + 1.0;
}

double cutoff_profile_derivative(double x) {
  if (x <= 0.0 || x > 1.0) return 0.0;
  if (x >= 0.5) return 2.0 * (x - 1.0);
  const double t = 2.0 * x;
  return 2.0 * (3.0 * t * t - 3.5 * t);
}

double cutoff_profile_bound(int samples) {
  double bound = 0.0;
  for (int i = 1; i < samples; ++i) {
    const double x = static_cast<double>(i) / samples;
    const double d = cutoff_profile_derivative(x);
    bound = std::max(bound, d * d / cutoff_profile(x));
  }
  return bound;
}

Cutoff build_cutoff(const SurfaceMesh& mesh, std::span<const int> M2,
                    double eps_tube) {
  // With M2 the whole surface the collar is empty and eta == 1 regardless.
  const double guard = 2.0 * mesh.max_edge_length();
  const bool everywhere = static_cast<int>(M2.size()) == mesh.num_vertices();
  if (!everywhere && !(eps_tube > guard))
    throw DomainError("eps_tube " + std::to_string(eps_tube) +
                      " below resolution guard 2 x max edge = " +
                      std::to_string(guard));
  Cutoff c;
  c.eps_tube = eps_tube;
  c.M_bound = cutoff_profile_bound();
  c.distance = geodesic_distance(mesh, M2);
  c.eta.resize(c.distance.size());
  for (std::size_t v = 0; v < c.eta.size(); ++v)
    c.eta[v] = cutoff_profile(c.distance[v] / eps_tube);

  const auto grad = tangential_gradient(mesh, c.eta);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.triangles()[f];
    const double mean = (c.eta[t[0]] + c.eta[t[1]] + c.eta[t[2]]) / 3.0;
    if (mean > 0.0)
      c.discrete_bound = std::max(
          c.discrete_bound, eps_tube * eps_tube * grad[f].squaredNorm() / mean);
  }
  return c;
}

double DampingProfile::min_on_Mstar() const {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < a.size(); ++v)
    if (in_Mstar[v]) lo = std::min(lo, a[v]);
  return lo;
}

DampingProfile build_damping(const SurfaceMesh& mesh,
                             const RegionDecomposition& decomp,
                             const CurvatureField& curv,
                             const DampingOptions& options) {
  if (!(options.a0 > 0.0)) throw DomainError("a0 must be positive");
  if (!(options.a_max >= options.a0)) throw DomainError("a_max must be >= a0");
  if (!(options.eps_tube > 0.0)) throw DomainError("eps_tube must be positive");

  if (!options.waive_admissibility) {
    for (std::size_t i = 0; i < decomp.patches.size(); ++i) {
      const auto report = check_admissible_patch(curv, decomp.patches[i],
                                                 options.eps_umb, options.tol_H);
      if (!report.admissible)
        throw DomainError("patch " + std::to_string(i) +
                          " is not admissible (H_max = " +
                          std::to_string(report.H_max) + ", gap_max = " +
                          std::to_string(report.gap_max) + ")");
    }
  }

  const std::vector<int> M2 = decomp.complement_of_patches();
  if (M2.empty()) throw DomainError("patches cover the whole surface: no damped region");

  DampingProfile p;
  p.a0 = options.a0;
  p.a_max = options.a_max;
  p.cutoff = build_cutoff(mesh, M2, options.eps_tube);
  const auto& d = p.cutoff.distance;
  const double eps = options.eps_tube;

  for (std::size_t i = 0; i < decomp.patches.size(); ++i) {
    double depth = 0.0;
    for (int v : decomp.patches[i]) depth = std::max(depth, d[v]);
    if (!(depth > 2.0 * eps))
      throw DomainError("patch " + std::to_string(i) + " (depth " +
                        std::to_string(depth) +
                        ") is too small for the double eps_tube collar");
  }

  const int nv = mesh.num_vertices();
  p.a.resize(nv);
  p.in_Mstar.resize(nv);
  for (int v = 0; v < nv; ++v) {
    p.in_Mstar[v] = d[v] <= eps;
    p.a[v] = options.a_max * cutoff_profile(std::max(0.0, d[v] - eps) / eps);
    p.a_inf = std::max(p.a_inf, p.a[v]);
  }
  return p;
}

}  // namespace dampsurf
