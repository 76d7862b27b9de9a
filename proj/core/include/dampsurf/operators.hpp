#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "dampsurf/mesh.hpp"

namespace dampsurf {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Cotangent stiffness: K_uv = -(cot alpha + cot beta) / 2 on edges, diagonal
/// minus the off-diagonal row sum. Obtuse (negative) weights are kept.
SparseMatrix assemble_stiffness(const SurfaceMesh& mesh);

/// Lumped (barycentric) mass: one third of the incident triangle areas.
Eigen::VectorXd assemble_mass(const SurfaceMesh& mesh);

/// Gradients of the three hat functions of each face; constant per face and
/// lying in the face plane.
std::vector<std::array<Vec3, 3>> face_gradient_basis(const SurfaceMesh& mesh);

/// Per-face tangential gradient of the piecewise-linear interpolant of u.
std::vector<Vec3> tangential_gradient(const SurfaceMesh& mesh,
                                      std::span<const double> u);
std::vector<Vec3> tangential_gradient(
    const std::vector<std::array<Vec3, 3>>& basis,
    const std::vector<Triangle>& triangles, const Eigen::VectorXd& u);

/// u - (sum mass*u / sum mass).
Eigen::VectorXd project_zero_mean(const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& mass);

/// Solves K x = b for b with zero sum (the range of K on a connected mesh) by
/// grounding vertex 0, then returns the mass-zero-mean representative.
class ZeroMeanSolver {
 public:
  ZeroMeanSolver(const SparseMatrix& K, const Eigen::VectorXd& mass);
  ~ZeroMeanSolver();
  ZeroMeanSolver(ZeroMeanSolver&&) noexcept;
  ZeroMeanSolver& operator=(ZeroMeanSolver&&) noexcept;

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct EigenOptions {
  int max_iterations = 2000;
  double tolerance = 1e-8;  // relative residual |Kx - lambda M x| / |lambda M x|
  int modes = 1;
};

struct EigenModes {
  std::vector<double> values;           // ascending, all > 0
  std::vector<Eigen::VectorXd> vectors;  // mass-orthonormal, zero mean
  std::vector<double> residuals;
  int iterations = 0;
};

/// Block inverse iteration on the mass-orthogonal complement of constants with
/// Rayleigh-Ritz extraction. Throws SolverError without convergence.
EigenModes lowest_nonzero_modes(const SparseMatrix& K,
                                const Eigen::VectorXd& mass,
                                const EigenOptions& options = {});

/// Smallest nonzero eigenvalue of K u = lambda Mass u (the Poincare constant).
double first_nonzero_eigenvalue(const SparseMatrix& K,
                                const Eigen::VectorXd& mass,
                                const EigenOptions& options = {});

struct DiscreteOperators {
  SparseMatrix K;
  Eigen::VectorXd mass;
  std::vector<std::array<Vec3, 3>> grad_basis;
  double lambda1 = 0.0;
  Eigen::VectorXd mode1;  // mass-normalized first eigenfunction

  static DiscreteOperators assemble(const SurfaceMesh& mesh,
                                    bool with_spectrum = true);
};

/// Coordinate text export, one "row col value" triple per stored entry.
void write_coo(std::ostream& out, const SparseMatrix& matrix);

}  // namespace dampsurf
