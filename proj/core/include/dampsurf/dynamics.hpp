#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dampsurf/feedback.hpp"
#include "dampsurf/geometry.hpp"
#include "dampsurf/operators.hpp"

namespace dampsurf {

struct Energy {
  double kinetic = 0.0;    // 1/2 v^T M v
  double potential = 0.0;  // 1/2 u^T K u
  double total() const { return kinetic + potential; }
};

Energy energy(const DiscreteOperators& ops, const Eigen::VectorXd& u,
              const Eigen::VectorXd& v);

/// Displacement and velocity in the zero-mean space.
struct WaveState {
  double t = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double E = 0.0;
};

WaveState make_state(const DiscreteOperators& ops, double t, Eigen::VectorXd u,
                     Eigen::VectorXd v);

struct StepResult {
  WaveState state;
  double dissipated = 0.0;  // dt * sum M a g(v_mid) v_mid
  int newton_iterations = 0;
  int substeps = 1;
};

struct StepOptions {
  double newton_tolerance = 1e-12;  // relative to the right-hand side norm
  int max_newton_iterations = 50;
  int max_halvings = 4;
};

/// Time stepper for u_tt - Delta u + a(x) g(u_t) = 0 on the zero-mean space.
///
/// Midpoint rule for the conservative part; the feedback term is the average
/// a (g(v_n) + g(v_{n+1})) / 2, which coincides with the midpoint rule when g
/// is linear. The zero-mean constraint on the velocity enters through a
/// Lagrange multiplier. The nonlinear system for v_mid is solved by damped
/// Newton; on failure the step is retried as two half steps.
class WaveIntegrator {
 public:
  WaveIntegrator(const DiscreteOperators& ops, Eigen::VectorXd damping,
                 FeedbackLaw law, StepOptions options = {});
  ~WaveIntegrator();
  WaveIntegrator(WaveIntegrator&&) noexcept;
  WaveIntegrator& operator=(WaveIntegrator&&) noexcept;

  StepResult step(const WaveState& state, double dt);

  const FeedbackLaw& law() const;
  const Eigen::VectorXd& damping() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One step with a freshly built integrator.
StepResult step(const WaveState& state, double dt, const DiscreteOperators& ops,
                const DampingProfile& damping, const FeedbackLaw& law);

struct TrajectorySample {
  double t = 0.0;
  double E = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double dissipated = 0.0;  // since the previous sample
};

struct Snapshot {
  double t = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
};

struct SimulationConfig {
  double dt = 0.05;
  double t_max = 10.0;
  int sample_stride = 1;
  bool snapshots = false;
  StepOptions step;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<Snapshot> snapshots;  // only with SimulationConfig::snapshots
  SimulationConfig config;
  WaveState final_state;
  double max_zero_mean_violation = 0.0;  // |sum M u| / (|u| sum M) over samples
};

Trajectory simulate(const DiscreteOperators& ops, const Eigen::VectorXd& damping,
                    const FeedbackLaw& law, const WaveState& initial,
                    const SimulationConfig& config);

/// |E(t_{i+1}) - E(t_i) + D_i| per sample interval.
std::vector<double> dissipation_residual(const Trajectory& trajectory);

// -- initial data ---------------------------------------------------------

/// amplitude * mass-normalized first eigenfunction, zero velocity.
WaveState mode_initial_state(const DiscreteOperators& ops, double amplitude,
                             int mode = 1);

/// Seeded random combination of low-degree polynomials of the (centred,
/// normalized) coordinates; smooth, reproducible, zero-mean.
WaveState random_initial_state(const SurfaceMesh& mesh,
                               const DiscreteOperators& ops, double amplitude,
                               std::uint64_t seed);

/// Gaussian bump amplitude * exp(-|x - center|^2 / width^2), zero velocity.
WaveState bump_initial_state(const SurfaceMesh& mesh,
                             const DiscreteOperators& ops, const Vec3& center,
                             double width, double amplitude);

// -- multiplier identity --------------------------------------------------

struct MultiplierTerms {
  double boundary = 0.0;    // [int u_t m_T . grad u]_0^T
  double divergence = 0.0;  // 1/2 int int (2 + 2H m.nu)(|u_t|^2 - |grad u|^2)
  double shape = 0.0;       // int int |grad u|^2 + (m.nu) grad u . B . grad u
  double damping = 0.0;     // int int a g(u_t) m_T . grad u
  // -int int mu m_T . grad u, mu = mean of a g(u_t): the zero-mean constraint
  // force. Vanishes when a is constant and g linear.
  double constraint = 0.0;
  double sum() const { return boundary + divergence + shape + damping + constraint; }
  double largest() const;
  double normalized_residual() const;
};

/// Evaluates every term of the multiplier identity with q = m = x - x0 on the
/// recorded snapshots (trapezoid rule in time). Throws if the trajectory has
/// fewer than two snapshots.
MultiplierTerms multiplier_residual(const Trajectory& trajectory,
                                    const SurfaceMesh& mesh,
                                    const DiscreteOperators& ops,
                                    const RegionDecomposition& decomp,
                                    const CurvatureField& curv,
                                    const Eigen::VectorXd& damping,
                                    const FeedbackLaw& law);

}  // namespace dampsurf
