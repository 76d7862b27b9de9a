#include <algorithm>
#include <cmath>

#include "dampsurf/dynamics.hpp"
#include "dampsurf/error.hpp"

namespace dampsurf {

double MultiplierTerms::largest() const {
  return std::max({std::abs(boundary), std::abs(divergence), std::abs(shape),
                   std::abs(damping), std::abs(constraint)});
}

double MultiplierTerms::normalized_residual() const {
  const double scale = largest();
  return scale > 0.0 ? std::abs(sum()) / scale : 0.0;
}

namespace {

struct SpatialTerms {
  double boundary = 0.0;
  double divergence = 0.0;
  double shape = 0.0;
  double damping = 0.0;
  double constraint = 0.0;
};

}  // namespace

MultiplierTerms multiplier_residual(const Trajectory& trajectory,
                                    const SurfaceMesh& mesh,
                                    const DiscreteOperators& ops,
                                    const RegionDecomposition& decomp,
                                    const CurvatureField& curv,
                                    const Eigen::VectorXd& damping,
                                    const FeedbackLaw& law) {
  const auto& snaps = trajectory.snapshots;
  if (snaps.size() < 2)
    throw DomainError("multiplier_residual: trajectory has no state snapshots");

  const int nv = mesh.num_vertices();
  const int nf = mesh.num_faces();
  const auto& tris = mesh.triangles();

  // div_T m_T / 2 = 1 + H (m . nu) at the vertices.
  Eigen::VectorXd half_div(nv);
  for (int v = 0; v < nv; ++v) half_div[v] = 1.0 + curv.H[v] * decomp.m_dot_nu[v];

  std::vector<double> area(nf);
  std::vector<double> face_half_div(nf);
  std::vector<double> face_m_nu(nf);
  std::vector<Eigen::Matrix3d> face_B(nf);
  for (int f = 0; f < nf; ++f) {
    const auto& t = tris[f];
    area[f] = mesh.triangle_area(f);
    face_half_div[f] = (half_div[t[0]] + half_div[t[1]] + half_div[t[2]]) / 3.0;
    face_m_nu[f] =
        (decomp.m_dot_nu[t[0]] + decomp.m_dot_nu[t[1]] + decomp.m_dot_nu[t[2]]) / 3.0;
    const Vec3 n = mesh.triangle_normal(f);
    const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - n * n.transpose();
    face_B[f] = P * ((curv.tensor[t[0]] + curv.tensor[t[1]] + curv.tensor[t[2]]) / 3.0) * P;
  }

  const double total_mass = ops.mass.sum();

  auto evaluate = [&](const Snapshot& s) {
    SpatialTerms out;
    // Uniform force that keeps the velocity zero-mean when a g(u_t) is not.
    double mu = 0.0;
    for (int v = 0; v < nv; ++v) mu += ops.mass[v] * damping[v] * law(s.v[v]);
    mu /= total_mass;
    const auto grad = tangential_gradient(ops.grad_basis, tris, s.u);
    for (int v = 0; v < nv; ++v)
      out.divergence += ops.mass[v] * half_div[v] * s.v[v] * s.v[v];
    for (int f = 0; f < nf; ++f) {
      const auto& t = tris[f];
      const Vec3& g = grad[f];
      const double g2 = g.squaredNorm();
      out.divergence -= area[f] * face_half_div[f] * g2;
      out.shape += area[f] * (g2 + face_m_nu[f] * g.dot(face_B[f] * g));
      double b = 0.0;
      double d = 0.0;
      double m = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double mt_grad = decomp.mT_field[t[k]].dot(g);
        b += s.v[t[k]] * mt_grad;
        d += damping[t[k]] * law(s.v[t[k]]) * mt_grad;
        m += mt_grad;
      }
      out.boundary += area[f] / 3.0 * b;
      out.damping += area[f] / 3.0 * d;
      out.constraint -= mu * area[f] / 3.0 * m;
    }
    return out;
  };

  MultiplierTerms terms;
  SpatialTerms previous = evaluate(snaps.front());
  const double boundary0 = previous.boundary;
  for (std::size_t i = 1; i < snaps.size(); ++i) {
    const SpatialTerms current = evaluate(snaps[i]);
    const double h = snaps[i].t - snaps[i - 1].t;
    terms.divergence += 0.5 * h * (previous.divergence + current.divergence);
    terms.shape += 0.5 * h * (previous.shape + current.shape);
    terms.damping += 0.5 * h * (previous.damping + current.damping);
    terms.constraint += 0.5 * h * (previous.constraint + current.constraint);
    previous = current;
  }
  terms.boundary = previous.boundary - boundary0;
  return terms;
}

}  // namespace dampsurf
