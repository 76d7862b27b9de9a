#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dampsurf/config.hpp"
#include "dampsurf/csv.hpp"
#include "dampsurf/decay.hpp"
#include "dampsurf/error.hpp"
#include "dampsurf/experiment.hpp"
#include "dampsurf/feedback.hpp"
#include "dampsurf/geometry.hpp"
#include "dampsurf/mesh.hpp"

namespace fs = std::filesystem;
using namespace dampsurf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

std::string fmt(double v, const char* spec = "%.10g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

bool is_generator(const std::string& source) {
  return source.rfind("icosphere:", 0) == 0 || source.rfind("torus:", 0) == 0;
}

int cmd_mesh_info(const std::string& source) {
  if (!is_generator(source)) {
    // Report on the raw soup first so broken files still get a report.
    const fs::path path = source.rfind("file:", 0) == 0 ? fs::path(source.substr(5)) : fs::path(source);
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open mesh file '" + path.string() + "'");
    const TriangleSoup soup =
        format_from_extension(path) == MeshFormat::off ? read_off(in) : read_obj(in);
    const ValidationReport r = validate_closed_manifold(soup.vertices, soup.triangles);
    if (!r.ok()) {
      std::cout << "V = " << r.V << "\nE = " << r.E << "\nF = " << r.F << "\nchi = " << r.chi
                << "\nclosed = " << (r.is_closed ? "true" : "false")
                << "\noriented = " << (r.is_oriented ? "true" : "false")
                << "\nconnected = " << (r.is_connected ? "true" : "false")
                << "\nboundary_edges = " << r.boundary_edges
                << "\nnonmanifold_edges = " << r.nonmanifold_edges
                << "\nunreferenced_vertices = " << r.unreferenced_vertices
                << "\nmin_area_ratio = " << format_double(r.min_area_ratio) << "\nvalid = false\n";
    }
  }
  // Building re-validates and names the first defect.
  const SurfaceMesh mesh = mesh_from_source(source);
  std::cout << mesh_report_text(mesh);
  return kExitOk;
}

struct ClassifyArgs {
  std::string source;
  std::string x0 = "0,0,-2";
  std::string patches = "none";
  std::vector<int> seeds;
  std::vector<std::string> seed_points;
  double eps_umb = 0.5;
  std::optional<double> eps_tube;
  double a_max = 1.0;
  bool waive = false;
  std::string out;
};

int cmd_classify(const ClassifyArgs& args) {
  const SurfaceMesh mesh = mesh_from_source(args.source);
  const VertexGeometry vg = vertex_normals_and_areas(mesh);
  const CurvatureField curv = shape_operator(mesh, vg.normals);
  RegionDecomposition decomp = classify_visibility(mesh, curv.normals, parse_vec3(args.x0));
  PatchSelection sel;
  sel.mode = parse_patch_mode(args.patches);
  sel.seeds = args.seeds;
  for (const auto& p : args.seed_points) {
    const Vec3 x = parse_vec3(p);
    int best = 0;
    for (int v = 1; v < mesh.num_vertices(); ++v)
      if ((mesh.vertices()[v] - x).squaredNorm() < (mesh.vertices()[best] - x).squaredNorm())
        best = v;
    sel.seeds.push_back(best);
  }
  sel.eps_umb = args.eps_umb;
  decomp = select_patches(mesh, std::move(decomp), curv, sel);
  DampingOptions opt;
  opt.a0 = args.a_max;
  opt.a_max = args.a_max;
  opt.eps_tube = args.eps_tube ? *args.eps_tube : std::max(0.35, 2.5 * mesh.max_edge_length());
  opt.eps_umb = args.eps_umb;
  opt.waive_admissibility = args.waive;
  const DampingProfile damping = build_damping(mesh, decomp, curv, opt);
  std::cerr << "visible_area_fraction = "
            << format_double(visible_area_fraction(decomp, vg.areas)) << '\n';
  if (args.out.empty()) {
    write_fields_csv(std::cout, curv, decomp, damping.cutoff.eta, damping.a);
  } else {
    std::ofstream out(args.out);
    if (!out) throw DomainError("cannot write '" + args.out + "'");
    write_fields_csv(out, curv, decomp, damping.cutoff.eta, damping.a);
  }
  return kExitOk;
}

struct SimulateArgs {
  std::string config_file;
  std::string preset_name;
  std::vector<std::string> sets;
  std::string output;
  std::optional<long long> seed;
};

int cmd_simulate(const SimulateArgs& args) {
  ExperimentConfig config;
  if (!args.config_file.empty())
    config = load_config(args.config_file);
  else
    config = preset(args.preset_name);
  KeyValues overrides;
  for (const auto& s : args.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    overrides[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (!args.output.empty()) overrides["output.dir"] = args.output;
  if (args.seed) overrides["run.seed"] = std::to_string(*args.seed);
  config = apply_keys(config, overrides);

  const ExperimentResult r = run_experiment(config);
  std::cout << "dir = " << r.dir.string() << '\n';
  std::cout << "status = " << (r.ok ? "ok" : "failed") << '\n';
  if (r.certification) {
    std::cout << "sequence_ok = " << (r.certification->sequence_ok ? "true" : "false") << '\n';
    std::cout << "envelope_ok = " << (r.certification->envelope_ok ? "true" : "false") << '\n';
    std::cout << "fitted_L = " << fmt(r.certification->fitted_L) << '\n';
    std::cout << "T0 = " << fmt(r.T0) << '\n';
  }
  if (r.multiplier)
    std::cout << "multiplier_residual = " << fmt(r.multiplier->normalized_residual()) << '\n';
  if (!r.ok) {
    std::cerr << "error: stage " << r.failed_stage << " failed: " << r.error << '\n';
    return kExitDomain;
  }
  return kExitOk;
}

struct EnvelopeArgs {
  std::string feedback = "linear";
  double E0 = 1.0;
  std::optional<double> q_power;
  double t_max = 10.0;
  double dt_ode = 1e-3;
  double L = 1.0;
  double meas_sigma = 1.0;
  double a_inf = 0.0;
  std::optional<double> K0;
  int samples = 0;
};

int cmd_envelope(const EnvelopeArgs& args) {
  const FeedbackLaw law = parse_feedback(args.feedback);
  std::optional<MonotoneFn> q;
  if (args.q_power) {
    // Reference mode: S' = -S^k, bypassing the chain.
    if (!(*args.q_power > 0.0)) throw DomainError("--q-power must be positive");
    q = MonotoneFn::power(1.0, *args.q_power);
    std::cout << "q = x^" << fmt(*args.q_power) << '\n';
  } else {
    ChainParams params;
    params.meas_sigma = args.meas_sigma;
    params.a_inf = args.a_inf;
    params.K0 = args.K0 ? *args.K0 : 1.0 / law.k_low() + law.K_high();
    params.L = args.L;
    const DecayChain chain = build_chain(construct_h(law), params);
    q = chain.q;
    std::cout << "h = " << chain.h.tag() << '\n';
    std::cout << "c = " << fmt(chain.c) << '\n';
  }
  const EnvelopeCurve S = solve_envelope(*q, args.E0, args.t_max, args.dt_ode);
  for (int i = 1; i < args.samples; ++i) {
    const double t = args.t_max * i / args.samples;
    std::cout << "S(" << fmt(t) << ")=" << fmt(S.at(t)) << '\n';
  }
  std::cout << "S(" << fmt(args.t_max) << ")=" << fmt(S.at(args.t_max)) << '\n';
  return kExitOk;
}

int cmd_verify(const std::string& dir) {
  const VerifyReport r = verify_run(dir);
  for (const auto& c : r.checks)
    std::cout << (c.ok ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail)
              << '\n';
  std::cout << (r.ok() ? "verify: ok" : "verify: failed") << '\n';
  return r.ok() ? kExitOk : kExitDomain;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally damped wave equation on closed surfaces: simulation and decay certification"};
  app.require_subcommand(1);

  std::string mesh_source;
  auto* mesh_info = app.add_subcommand("mesh-info", "Validate a mesh file or generator spec");
  mesh_info->add_option("source", mesh_source, "file path or icosphere:r:s / torus:R:r:nu:nv")
      ->required();

  ClassifyArgs cls;
  auto* classify = app.add_subcommand("classify", "Write the curvature/region CSV");
  classify->add_option("source", cls.source, "mesh file or generator spec")->required();
  classify->add_option("--x0", cls.x0, "observer x,y,z");
  classify->add_option("--patches", cls.patches, "none|all_m0|m0_component|admissible_component");
  classify->add_option("--seeds", cls.seeds, "patch seed vertex ids");
  classify->add_option("--seed-point", cls.seed_points, "patch seed x,y,z (nearest vertex)");
  classify->add_option("--eps-umb", cls.eps_umb);
  classify->add_option("--eps-tube", cls.eps_tube);
  classify->add_option("--a-max", cls.a_max);
  classify->add_flag("--waive-admissibility", cls.waive);
  classify->add_option("-o,--out", cls.out, "output CSV (default stdout)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the full pipeline into an artifact directory");
  auto* cfg_opt = simulate->add_option("--config", sim.config_file, "key = value config file");
  auto* preset_opt = simulate->add_option("--preset", sim.preset_name, "sphere-full|sphere-cap|torus-outer");
  cfg_opt->excludes(preset_opt);
  simulate->add_option("--set", sim.sets, "override key=value (repeatable)");
  simulate->add_option("-o,--output", sim.output, "artifact directory");
  simulate->add_option("--seed", sim.seed, "rng seed");

  EnvelopeArgs env;
  auto* envelope = app.add_subcommand("envelope", "Decay calculus only: solve S' = -q(S)");
  envelope->add_option("--feedback", env.feedback, "linear[:k] | power:p | saturated:p:k");
  envelope->add_option("--E0", env.E0, "initial energy")->check(CLI::NonNegativeNumber);
  envelope->add_option("--q-power", env.q_power, "reference mode q(x) = x^k");
  envelope->add_option("--tmax", env.t_max, "end time")->check(CLI::NonNegativeNumber);
  envelope->add_option("--dt-ode", env.dt_ode, "RK4 step")->check(CLI::PositiveNumber);
  envelope->add_option("--L", env.L, "chain constant L")->check(CLI::PositiveNumber);
  envelope->add_option("--meas-sigma", env.meas_sigma, "area(M) * T0")->check(CLI::PositiveNumber);
  envelope->add_option("--a-inf", env.a_inf, "sup of the damping coefficient")->check(CLI::NonNegativeNumber);
  envelope->add_option("--K0", env.K0, "1/k + K growth constant")->check(CLI::PositiveNumber);
  envelope->add_option("--samples", env.samples, "also print S at tmax*i/samples");

  std::string run_dir;
  auto* verify = app.add_subcommand("verify", "Re-check an artifact directory");
  verify->add_option("--run", run_dir, "artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*mesh_info) return cmd_mesh_info(mesh_source);
    if (*classify) return cmd_classify(cls);
    if (*simulate) {
      if (sim.config_file.empty() && sim.preset_name.empty()) {
        std::cerr << "simulate: one of --config or --preset is required\n" << simulate->help();
        return kExitUsage;
      }
      return cmd_simulate(sim);
    }
    if (*envelope) return cmd_envelope(env);
    if (*verify) return cmd_verify(run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}
