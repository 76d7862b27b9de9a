#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dampsurf/dynamics.hpp"
#include "dampsurf/error.hpp"
#include "dampsurf/feedback.hpp"
#include "dampsurf/geometry.hpp"
#include "dampsurf/mesh.hpp"
#include "dampsurf/operators.hpp"

using namespace dampsurf;

namespace {

struct Sphere {
  SurfaceMesh mesh;
  DiscreteOperators ops;
  explicit Sphere(int s) : mesh(generate_icosphere(Vec3::Zero(), 1.0, s)), ops(DiscreteOperators::assemble(mesh)) {}
};

const Sphere& sphere3() {
  static const Sphere s(3);
  return s;
}

Eigen::VectorXd constant_damping(const DiscreteOperators& ops, double a) {
  return Eigen::VectorXd::Constant(ops.mass.size(), a);
}

// Smooth, non-constant, vanishing on part of the sphere.
Eigen::VectorXd tilted_damping(const SurfaceMesh& m) {
  Eigen::VectorXd a(m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) a[v] = std::max(0.0, m.vertices()[v].z() + 0.3);
  return a;
}

double accumulated_residual(const Trajectory& t) {
  const std::vector<double> r = dissipation_residual(t);
  return std::accumulate(r.begin(), r.end(), 0.0);
}

}  // namespace

TEST_CASE("feedback laws") {
  SUBCASE("linear slope 1") {
    const FeedbackLaw g = make_feedback(FeedbackKind::linear, 1.0);
    CHECK(g(2.0) == 2.0);
    CHECK(g.k_low() == 1.0);
    CHECK(g.K_high() == 1.0);
  }
  SUBCASE("power p = 3") {
    const FeedbackLaw g = make_feedback(FeedbackKind::power, 1.0, 3.0);
    CHECK(g(0.5) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(g(1.0) == 1.0);
    CHECK(g(1.0 - 1e-9) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(g(1.0 + 1e-9) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(g(-0.5) == doctest::Approx(-0.125).epsilon(1e-15));
    CHECK(g.k_low() == 1.0);
    CHECK(g.K_high() == 1.0);
    for (int i = 1; i <= 1000; ++i) {
      const double s = 1.0 + 9.0 * i / 1000.0;
      CHECK(g(s) / s == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  SUBCASE("saturated power") {
    const FeedbackLaw g = make_feedback(FeedbackKind::saturated_power, 2.5, 2.0);
    CHECK(g(0.5) == doctest::Approx(0.25));
    CHECK(g(3.0) == doctest::Approx(1.0 + 2.5 * 2.0));
    CHECK(g.k_low() == 1.0);
    CHECK(g.K_high() == 2.5);
  }
  SUBCASE("derivative matches finite differences") {
    for (const FeedbackLaw& g : {parse_feedback("linear:2"), parse_feedback("power:3"), parse_feedback("saturated:2:0.5")})
      for (double s : {-3.0, -0.7, -0.2, 0.3, 0.9, 1.5, 4.0}) {
        const double fd = (g(s + 1e-6) - g(s - 1e-6)) / 2e-6;
        CHECK(g.derivative(s) == doctest::Approx(fd).epsilon(1e-6));
      }
  }
  SUBCASE("spec strings round-trip") {
    for (const char* spec : {"linear", "linear:0.5", "power:3", "saturated:2:3"}) {
      const FeedbackLaw g = parse_feedback(spec);
      const FeedbackLaw h = parse_feedback(g.spec());
      for (double s : {-2.0, 0.3, 5.0}) CHECK(g(s) == h(s));
    }
  }
  SUBCASE("rejected parameters") {
    CHECK_THROWS_AS(make_feedback(FeedbackKind::linear, 0.0), DomainError);
    CHECK_THROWS_AS(make_feedback(FeedbackKind::linear, -1.0), DomainError);
    CHECK_THROWS_AS(make_feedback(FeedbackKind::power, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(make_feedback(FeedbackKind::power, 1.0, 0.5), DomainError);
    CHECK_THROWS_AS(parse_feedback("cubic"), ConfigError);
    CHECK_THROWS_AS(parse_feedback("power:x"), ConfigError);
    CHECK_THROWS_AS(parse_feedback(""), ConfigError);
  }
}

TEST_CASE("undamped motion conserves energy over 1000 steps") {
  const Sphere& s = sphere3();
  const WaveState init = random_initial_state(s.mesh, s.ops, 1.0, 11);
  const Trajectory t = simulate(s.ops, constant_damping(s.ops, 0.0), parse_feedback("linear"), init,
                                {.dt = 0.05, .t_max = 50.0});
  REQUIRE(t.samples.size() == 1001);
  const double E0 = t.samples.front().E;
  double kmin = 1e300, kmax = 0.0;
  for (const TrajectorySample& x : t.samples) {
    CHECK(std::abs(x.E - E0) <= 1e-9 * E0);
    CHECK(x.dissipated == 0.0);
    kmin = std::min(kmin, x.kinetic);
    kmax = std::max(kmax, x.kinetic);
  }
  // Kinetic and potential energy exchange.
  CHECK(kmax - kmin > 0.1 * E0);
  for (double r : dissipation_residual(t)) CHECK(r <= 1e-9 * E0);
}

TEST_CASE("zero data stays zero") {
  const Sphere& s = sphere3();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(s.mesh.num_vertices());
  const Trajectory t = simulate(s.ops, constant_damping(s.ops, 1.0), parse_feedback("power:3"),
                                make_state(s.ops, 0.0, zero, zero), {.dt = 0.1, .t_max = 2.0});
  for (const TrajectorySample& x : t.samples) CHECK(x.E == 0.0);
  CHECK(t.final_state.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(t.final_state.v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("one linear step balances energy against dissipation") {
  const Sphere& s = sphere3();
  const Eigen::VectorXd a = tilted_damping(s.mesh);
  WaveState state = random_initial_state(s.mesh, s.ops, 1.0, 5);
  state.v = project_zero_mean(Eigen::VectorXd(s.ops.mode1 * 0.7), s.ops.mass);
  state = make_state(s.ops, 0.0, state.u, state.v);
  WaveIntegrator integ(s.ops, a, parse_feedback("linear"));
  const double dt = 0.05;
  const StepResult r = integ.step(state, dt);
  const Eigen::VectorXd vmid = 0.5 * (state.v + r.state.v);
  const double direct = dt * (s.ops.mass.array() * a.array() * vmid.array().square()).sum();
  CHECK(r.dissipated == doctest::Approx(direct).epsilon(1e-12));
  CHECK(std::abs(state.E - r.state.E - direct) <= 1e-10 * state.E);
  CHECK(r.dissipated > 0.0);
}

TEST_CASE("linear damping closes the dissipation ledger") {
  const Sphere& s = sphere3();
  const Trajectory t = simulate(s.ops, tilted_damping(s.mesh), parse_feedback("linear:1.5"),
                                random_initial_state(s.mesh, s.ops, 1.0, 3), {.dt = 0.05, .t_max = 10.0});
  const double E0 = t.samples.front().E;
  for (double r : dissipation_residual(t)) CHECK(r <= 1e-10 * E0);
  for (size_t i = 1; i < t.samples.size(); ++i) {
    CHECK(t.samples[i].t > t.samples[i - 1].t);
    CHECK(t.samples[i].E <= t.samples[i - 1].E + 1e-9 * E0);
    CHECK(t.samples[i].dissipated >= 0.0);
  }
  CHECK(t.samples.back().E < 0.5 * E0);
}

TEST_CASE("cubic feedback residual converges at second order") {
  const Sphere& s = sphere3();
  const Eigen::VectorXd a = tilted_damping(s.mesh);
  const FeedbackLaw g = parse_feedback("power:3");
  // Small data keeps |u_t| < 1, inside the cubic branch. Across the kink of
  // the power law at |s| = 1 the feedback is only Lipschitz and the
  // trapezoid average loses an order.
  const WaveState init = random_initial_state(s.mesh, s.ops, 0.3, 8);
  std::vector<double> sums, maxes;
  for (double dt : {0.1, 0.05, 0.025}) {
    const Trajectory t = simulate(s.ops, a, g, init, {.dt = dt, .t_max = 4.0});
    const std::vector<double> r = dissipation_residual(t);
    sums.push_back(accumulated_residual(t));
    maxes.push_back(*std::max_element(r.begin(), r.end()));
    for (const TrajectorySample& x : t.samples) CHECK(x.dissipated >= 0.0);
  }
  for (int i = 0; i + 1 < 3; ++i) {
    CHECK(std::log2(sums[i] / sums[i + 1]) >= 1.9);
    CHECK(std::log2(maxes[i] / maxes[i + 1]) >= 1.9);
  }
}

TEST_CASE("states stay in the zero-mean space") {
  const Sphere& s = sphere3();
  for (const char* spec : {"linear", "power:3", "saturated:2:2"}) {
    const Trajectory t = simulate(s.ops, tilted_damping(s.mesh), parse_feedback(spec),
                                  bump_initial_state(s.mesh, s.ops, Vec3(0, 0, 1), 0.5, 2.0),
                                  {.dt = 0.05, .t_max = 3.0, .snapshots = true});
    CHECK(t.max_zero_mean_violation <= 1e-10);
    for (const Snapshot& snap : t.snapshots) {
      CHECK(std::abs(s.ops.mass.dot(snap.u)) <= 1e-10 * snap.u.norm());
      CHECK(std::abs(s.ops.mass.dot(snap.v)) <= 1e-10 * std::max(1.0, snap.v.norm()));
    }
  }
}

TEST_CASE("undamped time reversal returns the initial state") {
  const Sphere& s = sphere3();
  WaveIntegrator integ(s.ops, constant_damping(s.ops, 0.0), parse_feedback("linear"));
  const WaveState init = random_initial_state(s.mesh, s.ops, 1.0, 21);
  WaveState state = init;
  for (int i = 0; i < 200; ++i) state = integ.step(state, 0.05).state;
  state.v = -state.v;
  for (int i = 0; i < 200; ++i) state = integ.step(state, 0.05).state;
  CHECK((state.u - init.u).norm() <= 1e-8 * init.u.norm());
  CHECK((-state.v - init.v).norm() <= 1e-8 * std::max(init.u.norm(), init.v.norm()));
}

TEST_CASE("energy is nonincreasing for nonlinear feedback") {
  const Sphere& s = sphere3();
  const Trajectory t = simulate(s.ops, constant_damping(s.ops, 2.0), parse_feedback("saturated:3:2"),
                                random_initial_state(s.mesh, s.ops, 4.0, 2), {.dt = 0.05, .t_max = 5.0});
  for (size_t i = 1; i < t.samples.size(); ++i) CHECK(t.samples[i].E <= t.samples[i - 1].E * (1.0 + 1e-9));
}

TEST_CASE("sampling stride and snapshots") {
  const Sphere& s = sphere3();
  const Trajectory t = simulate(s.ops, constant_damping(s.ops, 1.0), parse_feedback("linear"),
                                mode_initial_state(s.ops, 1.0), {.dt = 0.05, .t_max = 1.0, .sample_stride = 4, .snapshots = true});
  REQUIRE(t.samples.size() == 6);
  CHECK(t.samples[1].t == doctest::Approx(0.2));
  CHECK(t.snapshots.size() == t.samples.size());
  CHECK(t.final_state.t == doctest::Approx(1.0));
}

TEST_CASE("initial data") {
  const Sphere& s = sphere3();
  SUBCASE("mode state is an eigenfunction at rest") {
    const WaveState w = mode_initial_state(s.ops, 2.0);
    CHECK(w.v.norm() == 0.0);
    CHECK(w.E == doctest::Approx(0.5 * 4.0 * s.ops.lambda1).epsilon(1e-8));
  }
  SUBCASE("random state is reproducible") {
    const WaveState a = random_initial_state(s.mesh, s.ops, 1.0, 42);
    const WaveState b = random_initial_state(s.mesh, s.ops, 1.0, 42);
    const WaveState c = random_initial_state(s.mesh, s.ops, 1.0, 43);
    CHECK(a.u == b.u);
    CHECK((a.u - c.u).norm() > 0.0);
    CHECK(std::abs(s.ops.mass.dot(a.u)) <= 1e-12 * a.u.norm());
  }
  SUBCASE("bump width must be positive") {
    CHECK_THROWS_AS(bump_initial_state(s.mesh, s.ops, Vec3(0, 0, 1), 0.0, 1.0), DomainError);
  }
}

TEST_CASE("invalid step arguments") {
  const Sphere& s = sphere3();
  CHECK_THROWS_AS(WaveIntegrator(s.ops, Eigen::VectorXd::Ones(3), parse_feedback("linear")), DomainError);
  CHECK_THROWS_AS(WaveIntegrator(s.ops, constant_damping(s.ops, -1.0), parse_feedback("linear")), DomainError);
  WaveIntegrator integ(s.ops, constant_damping(s.ops, 1.0), parse_feedback("linear"));
  CHECK_THROWS_AS(integ.step(mode_initial_state(s.ops, 1.0), 0.0), DomainError);
  CHECK_THROWS_AS(simulate(s.ops, constant_damping(s.ops, 1.0), parse_feedback("linear"),
                           mode_initial_state(s.ops, 1.0), {.dt = 0.1, .t_max = 1.0, .sample_stride = 0}),
                  DomainError);
}

TEST_CASE("multiplier identity") {
  const Vec3 x0(0, 0, -2);
  auto run = [&](int subdivisions, double dt, bool zero) {
    const Sphere s(subdivisions);
    const CurvatureField curv = shape_operator(s.mesh, vertex_normals_and_areas(s.mesh).normals);
    const RegionDecomposition decomp = classify_visibility(s.mesh, curv.normals, x0);
    const Eigen::VectorXd a = tilted_damping(s.mesh);
    WaveState init = random_initial_state(s.mesh, s.ops, 1.0, 4);
    if (zero) init = make_state(s.ops, 0.0, 0.0 * init.u, 0.0 * init.v);
    const FeedbackLaw g = parse_feedback("linear");
    const Trajectory t = simulate(s.ops, a, g, init, {.dt = dt, .t_max = 3.0, .snapshots = true});
    return multiplier_residual(t, s.mesh, s.ops, decomp, curv, a, g);
  };
  SUBCASE("zero trajectory") {
    const MultiplierTerms m = run(2, 0.1, true);
    CHECK(m.sum() == 0.0);
    CHECK(m.normalized_residual() == 0.0);
  }
  SUBCASE("residual decreases under joint refinement") {
    const MultiplierTerms coarse = run(2, 0.1, false);
    const MultiplierTerms fine = run(3, 0.05, false);
    CHECK(coarse.largest() > 0.0);
    CHECK(fine.normalized_residual() < coarse.normalized_residual());
  }
  SUBCASE("snapshots are required") {
    const Sphere& s = sphere3();
    const CurvatureField curv = shape_operator(s.mesh, vertex_normals_and_areas(s.mesh).normals);
    const RegionDecomposition decomp = classify_visibility(s.mesh, curv.normals, x0);
    const Eigen::VectorXd a = constant_damping(s.ops, 1.0);
    const Trajectory t = simulate(s.ops, a, parse_feedback("linear"), mode_initial_state(s.ops, 1.0),
                                  {.dt = 0.1, .t_max = 1.0});
    CHECK_THROWS_AS(multiplier_residual(t, s.mesh, s.ops, decomp, curv, a, parse_feedback("linear")), DomainError);
  }
}
