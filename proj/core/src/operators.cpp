#include "dampsurf/operators.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "dampsurf/error.hpp"

namespace dampsurf {

SparseMatrix assemble_stiffness(const SurfaceMesh& mesh) {
  const int nv = mesh.num_vertices();
  const auto& x = mesh.vertices();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(12 * static_cast<std::size_t>(mesh.num_faces()));
  for (const auto& t : mesh.triangles()) {
    for (int k = 0; k < 3; ++k) {
      // The angle at t[k] is opposite the edge (t[k+1], t[k+2]).
      const int o = t[k];
      const int a = t[(k + 1) % 3];
      const int b = t[(k + 2) % 3];
      const Vec3 ea = x[a] - x[o];
      const Vec3 eb = x[b] - x[o];
      const double cot = ea.dot(eb) / ea.cross(eb).norm();
      if (!std::isfinite(cot))
        throw DomainError("non-finite cotangent weight (degenerate triangle)");
      const double w = 0.5 * cot;
      triplets.emplace_back(a, b, -w);
      triplets.emplace_back(b, a, -w);
      triplets.emplace_back(a, a, w);
      triplets.emplace_back(b, b, w);
    }
  }
  SparseMatrix K(nv, nv);
  K.setFromTriplets(triplets.begin(), triplets.end());
  K.makeCompressed();
  return K;
}

Eigen::VectorXd assemble_mass(const SurfaceMesh& mesh) {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const double third = mesh.triangle_area(f) / 3.0;
    for (int v : mesh.triangles()[f]) mass[v] += third;
  }
  return mass;
}

std::vector<std::array<Vec3, 3>> face_gradient_basis(const SurfaceMesh& mesh) {
  const auto& x = mesh.vertices();
  std::vector<std::array<Vec3, 3>> basis(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.triangles()[f];
    const Vec3 area_normal = (x[t[1]] - x[t[0]]).cross(x[t[2]] - x[t[0]]);
    const double twice_area = area_normal.norm();
    const Vec3 n = area_normal / twice_area;
    for (int k = 0; k < 3; ++k) {
      const Vec3 opposite = x[t[(k + 2) % 3]] - x[t[(k + 1) % 3]];
      basis[f][k] = n.cross(opposite) / twice_area;
    }
  }
  return basis;
}

std::vector<Vec3> tangential_gradient(
    const std::vector<std::array<Vec3, 3>>& basis,
    const std::vector<Triangle>& triangles, const Eigen::VectorXd& u) {
  std::vector<Vec3> grad(triangles.size());
  for (std::size_t f = 0; f < triangles.size(); ++f) {
    const auto& t = triangles[f];
    grad[f] = u[t[0]] * basis[f][0] + u[t[1]] * basis[f][1] + u[t[2]] * basis[f][2];
  }
  return grad;
}

std::vector<Vec3> tangential_gradient(const SurfaceMesh& mesh,
                                      std::span<const double> u) {
  if (static_cast<int>(u.size()) != mesh.num_vertices())
    throw DomainError("tangential_gradient: field size does not match mesh");
  const Eigen::Map<const Eigen::VectorXd> view(u.data(),
                                               static_cast<Eigen::Index>(u.size()));
  return tangential_gradient(face_gradient_basis(mesh), mesh.triangles(), view);
}

Eigen::VectorXd project_zero_mean(const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& mass) {
  const double mean = mass.dot(u) / mass.sum();
  return u.array() - mean;
}

struct ZeroMeanSolver::Impl {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  Eigen::VectorXd mass;
};

ZeroMeanSolver::ZeroMeanSolver(const SparseMatrix& K, const Eigen::VectorXd& mass)
    : impl_(std::make_unique<Impl>()) {
  const Eigen::Index n = K.rows();
  if (n < 2) throw SolverError("ZeroMeanSolver needs at least two vertices");
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(K.nonZeros()));
  for (Eigen::Index col = 0; col < K.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(K, col); it; ++it)
      if (it.row() > 0 && it.col() > 0)
        triplets.emplace_back(it.row() - 1, it.col() - 1, it.value());
  SparseMatrix grounded(n - 1, n - 1);
  grounded.setFromTriplets(triplets.begin(), triplets.end());
  impl_->ldlt.compute(grounded);
  if (impl_->ldlt.info() != Eigen::Success)
    throw SolverError("stiffness factorization failed (disconnected mesh?)");
  impl_->mass = mass;
}

ZeroMeanSolver::~ZeroMeanSolver() = default;
ZeroMeanSolver::ZeroMeanSolver(ZeroMeanSolver&&) noexcept = default;
ZeroMeanSolver& ZeroMeanSolver::operator=(ZeroMeanSolver&&) noexcept = default;

Eigen::VectorXd ZeroMeanSolver::solve(const Eigen::VectorXd& b) const {
  const Eigen::Index n = b.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  x.tail(n - 1) = impl_->ldlt.solve(b.tail(n - 1));
  return project_zero_mean(x, impl_->mass);
}

EigenModes lowest_nonzero_modes(const SparseMatrix& K,
                                const Eigen::VectorXd& mass,
                                const EigenOptions& options) {
  const Eigen::Index n = K.rows();
  if (options.modes < 1) throw SolverError("need at least one mode");
  const int block = static_cast<int>(
      std::min<Eigen::Index>(options.modes + 4, n - 1));
  if (block < options.modes) throw SolverError("mesh too small for requested modes");

  const ZeroMeanSolver solver(K, mass);
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(n, block);
  for (Eigen::Index j = 0; j < block; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = normal(rng);
    X.col(j) = project_zero_mean(X.col(j), mass);
  }

  EigenModes result;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    Eigen::MatrixXd Y(n, block);
    for (Eigen::Index j = 0; j < block; ++j)
      Y.col(j) = solver.solve(mass.asDiagonal() * X.col(j));

    // Rayleigh-Ritz on span(Y).
    const Eigen::MatrixXd KY = K * Y;
    const Eigen::MatrixXd MY = mass.asDiagonal() * Y;
    Eigen::MatrixXd Kr = Y.transpose() * KY;
    Eigen::MatrixXd Mr = Y.transpose() * MY;
    Kr = 0.5 * (Kr + Kr.transpose()).eval();
    Mr = 0.5 * (Mr + Mr.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(Kr, Mr);
    if (ritz.info() != Eigen::Success)
      throw SolverError("Rayleigh-Ritz step failed");
    X = Y * ritz.eigenvectors();
    const Eigen::VectorXd theta = ritz.eigenvalues();

    bool converged = true;
    result.values.assign(options.modes, 0.0);
    result.vectors.assign(options.modes, Eigen::VectorXd());
    result.residuals.assign(options.modes, 0.0);
    for (int k = 0; k < options.modes; ++k) {
      const Eigen::VectorXd x = X.col(k);
      const Eigen::VectorXd Mx = mass.asDiagonal() * x;
      const double lambda = theta(k);
      const double rel = (K * x - lambda * Mx).norm() / (std::abs(lambda) * Mx.norm());
      result.values[k] = lambda;
      result.vectors[k] = x / std::sqrt(x.dot(Mx));
      result.residuals[k] = rel;
      if (!(rel <= options.tolerance)) converged = false;
    }
    result.iterations = iter;
    if (converged) {
      if (!(result.values[0] > 0.0))
        throw SolverError("first nonzero eigenvalue is not positive");
      return result;
    }
    for (Eigen::Index j = 0; j < block; ++j) X.col(j).normalize();
  }
  throw SolverError("inverse iteration did not converge in " +
                    std::to_string(options.max_iterations) + " iterations");
}

double first_nonzero_eigenvalue(const SparseMatrix& K,
                                const Eigen::VectorXd& mass,
                                const EigenOptions& options) {
  EigenOptions one = options;
  one.modes = 1;
  return lowest_nonzero_modes(K, mass, one).values.front();
}

DiscreteOperators DiscreteOperators::assemble(const SurfaceMesh& mesh,
                                              bool with_spectrum) {
  DiscreteOperators ops;
  ops.K = assemble_stiffness(mesh);
  ops.mass = assemble_mass(mesh);
  ops.grad_basis = face_gradient_basis(mesh);
  if (with_spectrum) {
    const EigenModes modes = lowest_nonzero_modes(ops.K, ops.mass);
    ops.lambda1 = modes.values.front();
    ops.mode1 = modes.vectors.front();
  }
  return ops;
}

void write_coo(std::ostream& out, const SparseMatrix& matrix) {
  char buf[96];
  for (Eigen::Index col = 0; col < matrix.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n",
                    static_cast<long>(it.row()), static_cast<long>(it.col()),
                    it.value());
      out << buf;
    }
}

}  // namespace dampsurf
