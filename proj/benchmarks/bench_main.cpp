#include <benchmark/benchmark.h>

#include "dampsurf/decay.hpp"
#include "dampsurf/dynamics.hpp"
#include "dampsurf/geometry.hpp"
#include "dampsurf/mesh.hpp"
#include "dampsurf/operators.hpp"

using namespace dampsurf;

namespace {

void BM_AssembleOperators(benchmark::State& state) {
  const SurfaceMesh mesh = generate_icosphere(Vec3::Zero(), 1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    SparseMatrix K = assemble_stiffness(mesh);
    Eigen::VectorXd M = assemble_mass(mesh);
    benchmark::DoNotOptimize(K.nonZeros());
    benchmark::DoNotOptimize(M.data());
  }
  state.counters["vertices"] = mesh.num_vertices();
}
BENCHMARK(BM_AssembleOperators)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

void BM_ShapeOperator(benchmark::State& state) {
  const SurfaceMesh mesh = generate_icosphere(Vec3::Zero(), 1.0, static_cast<int>(state.range(0)));
  const VertexGeometry g = vertex_normals_and_areas(mesh);
  for (auto _ : state) benchmark::DoNotOptimize(shape_operator(mesh, g.normals).H.data());
  state.counters["vertices"] = mesh.num_vertices();
}
BENCHMARK(BM_ShapeOperator)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

void BM_FirstEigenvalue(benchmark::State& state) {
  const SurfaceMesh mesh = generate_icosphere(Vec3::Zero(), 1.0, static_cast<int>(state.range(0)));
  const SparseMatrix K = assemble_stiffness(mesh);
  const Eigen::VectorXd M = assemble_mass(mesh);
  for (auto _ : state) benchmark::DoNotOptimize(first_nonzero_eigenvalue(K, M));
  state.counters["vertices"] = mesh.num_vertices();
}
BENCHMARK(BM_FirstEigenvalue)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

// range(0): subdivision level, range(1): 0 for linear, 1 for cubic feedback.
void BM_Step(benchmark::State& state) {
  const SurfaceMesh mesh = generate_icosphere(Vec3::Zero(), 1.0, static_cast<int>(state.range(0)));
  const DiscreteOperators ops = DiscreteOperators::assemble(mesh);
  const FeedbackLaw law = parse_feedback(state.range(1) == 0 ? "linear" : "power:3");
  WaveIntegrator integ(ops, Eigen::VectorXd::Ones(mesh.num_vertices()), law);
  WaveState s = random_initial_state(mesh, ops, 1.0, 1);
  for (auto _ : state) {
    s = integ.step(s, 0.05).state;
    benchmark::DoNotOptimize(s.E);
  }
  state.counters["vertices"] = mesh.num_vertices();
}
BENCHMARK(BM_Step)->ArgsProduct({{3, 4, 5}, {0, 1}})->Unit(benchmark::kMicrosecond);

void BM_Envelope(benchmark::State& state) {
  const DecayChain chain = build_chain(construct_h(parse_feedback("power:3")),
                                       {.meas_sigma = 4.0, .a_inf = 1.0, .K0 = 2.0, .L = 1.0});
  for (auto _ : state) benchmark::DoNotOptimize(solve_envelope(chain.q, 1.0, 10.0, 1e-2).values().back());
}
BENCHMARK(BM_Envelope)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
