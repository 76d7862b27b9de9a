#include "dampsurf/dynamics.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <string>

#include <Eigen/SparseCholesky>

#include "dampsurf/error.hpp"

namespace dampsurf {

Energy energy(const DiscreteOperators& ops, const Eigen::VectorXd& u,
              const Eigen::VectorXd& v) {
  Energy e;
  e.kinetic = 0.5 * v.dot(ops.mass.cwiseProduct(v));
  e.potential = 0.5 * u.dot(ops.K * u);
  return e;
}

WaveState make_state(const DiscreteOperators& ops, double t, Eigen::VectorXd u,
                     Eigen::VectorXd v) {
  WaveState s;
  s.t = t;
  s.u = project_zero_mean(u, ops.mass);
  s.v = project_zero_mean(v, ops.mass);
  s.E = energy(ops, s.u, s.v).total();
  return s;
}

struct WaveIntegrator::Impl {
  const DiscreteOperators* ops = nullptr;
  Eigen::VectorXd a;
  FeedbackLaw law;
  StepOptions options;

  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  bool pattern_ready = false;
  // Linear feedback: the Jacobian only depends on dt.
  std::optional<double> factored_dt;

  Impl(const DiscreteOperators& o, Eigen::VectorXd damping, FeedbackLaw g,
       StepOptions opts)
      : ops(&o), a(std::move(damping)), law(g), options(opts) {}

  Eigen::VectorXd feedback(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = law(v[i]);
    return out;
  }

  void factor(double dt, const Eigen::VectorXd& jac_diag) {
    SparseMatrix A = (0.5 * dt) * ops->K;
    Eigen::VectorXd diag = (2.0 / dt) * ops->mass + ops->mass.cwiseProduct(jac_diag);
    for (Eigen::Index i = 0; i < A.rows(); ++i) A.coeffRef(i, i) += diag[i];
    if (!pattern_ready) {
      ldlt.analyzePattern(A);
      pattern_ready = true;
    }
    ldlt.factorize(A);
    if (ldlt.info() != Eigen::Success) throw SolverError("step Jacobian factorization failed");
  }

  std::optional<StepResult> try_step(const WaveState& s, double dt) {
    const auto& M = ops->mass;
    const auto& K = ops->K;
    const Eigen::VectorXd g0 = feedback(s.v);
    const Eigen::VectorXd Ku0 = K * s.u;
    const Eigen::VectorXd rhs = (2.0 / dt) * M.cwiseProduct(s.v) - Ku0;
    const double scale = std::max(rhs.norm(), (M.cwiseProduct(a.cwiseProduct(g0))).norm());

    auto residual = [&](const Eigen::VectorXd& vm, double mu) {
      const Eigen::VectorXd v1 = 2.0 * vm - s.v;
      const Eigen::VectorXd gbar = 0.5 * (g0 + feedback(v1));
      Eigen::VectorXd F = (2.0 / dt) * M.cwiseProduct(vm) + (0.5 * dt) * (K * vm) +
                          M.cwiseProduct(a.cwiseProduct(gbar)) - rhs;
      F += mu * M;
      return F;
    };

    Eigen::VectorXd vm = s.v;
    double mu = 0.0;
    Eigen::VectorXd F = residual(vm, mu);
    double fnorm = F.norm();
    const double target = options.newton_tolerance * scale;
    int iterations = 0;
    while (fnorm > target) {
      if (iterations == options.max_newton_iterations) return std::nullopt;
      ++iterations;
      if (law.is_linear()) {
        if (!factored_dt || *factored_dt != dt) {
          factor(dt, law.slope() * a);
          factored_dt = dt;
        }
      } else {
        const Eigen::VectorXd v1 = 2.0 * vm - s.v;
        Eigen::VectorXd jac(a.size());
        for (Eigen::Index i = 0; i < a.size(); ++i) jac[i] = a[i] * law.derivative(v1[i]);
        factor(dt, jac);
        factored_dt.reset();
      }
      const Eigen::VectorXd x1 = ldlt.solve(-F);
      const Eigen::VectorXd x2 = ldlt.solve(M);
      const double c = M.dot(vm);
      const double dmu = (M.dot(x1) + c) / M.dot(x2);
      const Eigen::VectorXd delta = x1 - dmu * x2;

      double alpha = 1.0;
      for (;;) {
        const Eigen::VectorXd trial = vm + alpha * delta;
        const double trial_mu = mu + alpha * dmu;
        const Eigen::VectorXd trial_F = residual(trial, trial_mu);
        const double trial_norm = trial_F.norm();
        if (trial_norm <= (1.0 - 1e-4 * alpha) * fnorm || trial_norm <= target ||
            alpha < 1.0 / 1024.0) {
          vm = trial;
          mu = trial_mu;
          F = trial_F;
          fnorm = trial_norm;
          break;
        }
        alpha *= 0.5;
      }
      if (!std::isfinite(fnorm)) return std::nullopt;
    }

    StepResult out;
    out.newton_iterations = iterations;
    out.state.t = s.t + dt;
    out.state.u = project_zero_mean(s.u + dt * vm, M);
    out.state.v = project_zero_mean(2.0 * vm - s.v, M);
    out.state.E = energy(*ops, out.state.u, out.state.v).total();
    double d = 0.0;
    for (Eigen::Index i = 0; i < vm.size(); ++i) d += M[i] * a[i] * law(vm[i]) * vm[i];
    out.dissipated = dt * d;
    return out;
  }

  StepResult step_recursive(const WaveState& s, double dt, int depth) {
    if (auto result = try_step(s, dt)) return *result;
    if (depth >= options.max_halvings)
      throw SolverError("Newton did not converge; dt = " + std::to_string(dt) +
                        " is too large for the nonlinearity");
    StepResult first = step_recursive(s, 0.5 * dt, depth + 1);
    StepResult second = step_recursive(first.state, 0.5 * dt, depth + 1);
    second.dissipated += first.dissipated;
    second.newton_iterations += first.newton_iterations;
    second.substeps += first.substeps;
    return second;
  }
};

WaveIntegrator::WaveIntegrator(const DiscreteOperators& ops,
                               Eigen::VectorXd damping, FeedbackLaw law,
                               StepOptions options) {
  if (damping.size() != ops.mass.size())
    throw DomainError("damping coefficient size does not match the mesh");
  if ((damping.array() < 0.0).any()) throw DomainError("damping must be nonnegative");
  impl_ = std::make_unique<Impl>(ops, std::move(damping), law, options);
}

WaveIntegrator::~WaveIntegrator() = default;
WaveIntegrator::WaveIntegrator(WaveIntegrator&&) noexcept = default;
WaveIntegrator& WaveIntegrator::operator=(WaveIntegrator&&) noexcept = default;

StepResult WaveIntegrator::step(const WaveState& state, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
  return impl_->step_recursive(state, dt, 0);
}

const FeedbackLaw& WaveIntegrator::law() const { return impl_->law; }
const Eigen::VectorXd& WaveIntegrator::damping() const { return impl_->a; }

StepResult step(const WaveState& state, double dt, const DiscreteOperators& ops,
                const DampingProfile& damping, const FeedbackLaw& law) {
  const Eigen::Map<const Eigen::VectorXd> a(damping.a.data(),
                                            static_cast<Eigen::Index>(damping.a.size()));
  WaveIntegrator integrator(ops, a, law);
  return integrator.step(state, dt);
}

Trajectory simulate(const DiscreteOperators& ops, const Eigen::VectorXd& damping,
                    const FeedbackLaw& law, const WaveState& initial,
                    const SimulationConfig& config) {
  if (!(config.dt > 0.0) || !(config.t_max > 0.0))
    throw DomainError("simulate: dt and t_max must be positive");
  if (config.sample_stride < 1) throw DomainError("sample_stride must be >= 1");

  WaveIntegrator integrator(ops, damping, law, config.step);
  Trajectory traj;
  traj.config = config;
  const long steps = std::lround(config.t_max / config.dt);
  const double total_mass = ops.mass.sum();

  auto record = [&](const WaveState& s, double dissipated) {
    const Energy e = energy(ops, s.u, s.v);
    traj.samples.push_back({s.t, e.total(), e.kinetic, e.potential, dissipated});
    if (config.snapshots) traj.snapshots.push_back({s.t, s.u, s.v});
    const double un = s.u.norm();
    if (un > 0.0)
      traj.max_zero_mean_violation = std::max(
          traj.max_zero_mean_violation, std::abs(ops.mass.dot(s.u)) / (un * total_mass));
  };

  WaveState state = make_state(ops, initial.t, initial.u, initial.v);
  record(state, 0.0);
  double pending = 0.0;
  for (long n = 1; n <= steps; ++n) {
    StepResult r = integrator.step(state, config.dt);
    // Times are n*dt exactly to keep sampling grids reproducible.
    r.state.t = initial.t + static_cast<double>(n) * config.dt;
    state = std::move(r.state);
    pending += r.dissipated;
    if (n % config.sample_stride == 0 || n == steps) {
      record(state, pending);
      pending = 0.0;
    }
  }
  traj.final_state = state;
  return traj;
}

std::vector<double> dissipation_residual(const Trajectory& trajectory) {
  const auto& s = trajectory.samples;
  if (s.size() < 2) throw DomainError("dissipation_residual needs at least two samples");
  std::vector<double> out;
  out.reserve(s.size() - 1);
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    out.push_back(std::abs(s[i + 1].E - s[i].E + s[i + 1].dissipated));
  return out;
}

WaveState mode_initial_state(const DiscreteOperators& ops, double amplitude,
                             int mode) {
  Eigen::VectorXd shape;
  if (mode == 1 && ops.mode1.size() == ops.mass.size()) {
    shape = ops.mode1;
  } else {
    EigenOptions opts;
    opts.modes = mode;
    shape = lowest_nonzero_modes(ops.K, ops.mass, opts).vectors.at(mode - 1);
  }
  return make_state(ops, 0.0, amplitude * shape, Eigen::VectorXd::Zero(shape.size()));
}

WaveState random_initial_state(const SurfaceMesh& mesh,
                               const DiscreteOperators& ops, double amplitude,
                               std::uint64_t seed) {
  const auto& x = mesh.vertices();
  Vec3 centre = Vec3::Zero();
  for (const auto& p : x) centre += p;
  centre /= static_cast<double>(x.size());
  double radius = 0.0;
  for (const auto& p : x) radius = std::max(radius, (p - centre).norm());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  // 1, x, y, z, x^2, y^2, z^2, xy, yz, zx, xyz
  std::array<double, 11> cu{};
  std::array<double, 11> cv{};
  for (auto& c : cu) c = coeff(rng);
  for (auto& c : cv) c = coeff(rng);
  auto basis = [](const Vec3& p) {
    return std::array<double, 11>{1.0,         p.x(),       p.y(),       p.z(),
                                  p.x() * p.x(), p.y() * p.y(), p.z() * p.z(),
                                  p.x() * p.y(), p.y() * p.z(), p.z() * p.x(),
                                  p.x() * p.y() * p.z()};
  };
  Eigen::VectorXd u(x.size());
  Eigen::VectorXd v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto b = basis((x[i] - centre) / radius);
    double su = 0.0;
    double sv = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
      su += cu[k] * b[k];
      sv += cv[k] * b[k];
    }
    u[static_cast<Eigen::Index>(i)] = amplitude * su;
    v[static_cast<Eigen::Index>(i)] = amplitude * sv;
  }
  return make_state(ops, 0.0, u, v);
}

WaveState bump_initial_state(const SurfaceMesh& mesh,
                             const DiscreteOperators& ops, const Vec3& center,
                             double width, double amplitude) {
  if (!(width > 0.0)) throw DomainError("bump width must be positive");
  Eigen::VectorXd u(mesh.num_vertices());
  for (int i = 0; i < mesh.num_vertices(); ++i)
    u[i] = amplitude * std::exp(-(mesh.vertices()[i] - center).squaredNorm() / (width * width));
  return make_state(ops, 0.0, u, Eigen::VectorXd::Zero(u.size()));
}

}  // namespace dampsurf
