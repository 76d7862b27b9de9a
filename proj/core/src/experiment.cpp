#include "dampsurf/experiment.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "dampsurf/csv.hpp"
#include "dampsurf/error.hpp"
#include "dampsurf/feedback.hpp"
#include "dampsurf/geometry.hpp"
#include "dampsurf/manifest.hpp"
#include "dampsurf/operators.hpp"

namespace fs = std::filesystem;

namespace dampsurf {
namespace {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path path = dir_ / name;
    {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw DomainError("cannot write '" + path.string() + "'");
      body(out);
      if (!out) throw DomainError("write failed for '" + path.string() + "'");
    }
    manifest_.files.emplace_back(name, sha256_file(path));
  }

  void stage(const std::string& name, const std::function<void()>& body) {
    if (failed_) return;
    try {
      body();
      manifest_.stages.push_back({name, true, ""});
    } catch (const std::exception& e) {
      manifest_.stages.push_back({name, false, e.what()});
      failed_ = true;
      failed_stage_ = name;
      error_ = e.what();
    }
  }

  void finish() {
    std::ofstream out(dir_ / artifact::manifest, std::ios::binary);
    if (!out) throw DomainError("cannot write manifest in '" + dir_.string() + "'");
    manifest_.write(out);
  }

  bool failed() const { return failed_; }
  const std::string& failed_stage() const { return failed_stage_; }
  const std::string& error() const { return error_; }

 private:
  fs::path dir_;
  Manifest manifest_;
  bool failed_ = false;
  std::string failed_stage_;
  std::string error_;
};

int nearest_vertex(const SurfaceMesh& mesh, const Vec3& p) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const double d = (mesh.vertices()[v] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = v;
    }
  }
  return best;
}

WaveState load_initial_file(const fs::path& path, const DiscreteOperators& ops) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open initial data file '" + path.string() + "'");
  const Eigen::Index n = ops.mass.size();
  Eigen::VectorXd u(n), v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(in >> u[i] >> v[i]))
      throw DomainError("initial data file needs " + std::to_string(n) + " 'u v' rows");
  double extra = 0.0;
  if (in >> extra) throw DomainError("initial data file has more rows than vertices");
  return make_state(ops, 0.0, std::move(u), std::move(v));
}

void write_kv(std::ostream& out, const std::string& key, const std::string& value) {
  out << key << " = " << value << '\n';
}

std::string flag(bool b) { return b ? "true" : "false"; }

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_double(xs[i]);
  return out;
}

KeyValues read_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path.string() + "'");
  return parse_key_values(in);
}

CsvTable read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path.string() + "'");
  return read_csv(in);
}

}  // namespace

std::string mesh_report_text(const SurfaceMesh& mesh) {
  const ValidationReport r = validate_closed_manifold(mesh);
  std::ostringstream out;
  write_kv(out, "V", std::to_string(r.V));
  write_kv(out, "E", std::to_string(r.E));
  write_kv(out, "F", std::to_string(r.F));
  write_kv(out, "chi", std::to_string(r.chi));
  write_kv(out, "closed", flag(r.is_closed));
  write_kv(out, "oriented", flag(r.is_oriented));
  write_kv(out, "connected", flag(r.is_connected));
  write_kv(out, "boundary_edges", std::to_string(r.boundary_edges));
  write_kv(out, "nonmanifold_edges", std::to_string(r.nonmanifold_edges));
  write_kv(out, "unreferenced_vertices", std::to_string(r.unreferenced_vertices));
  write_kv(out, "min_area_ratio", format_double(r.min_area_ratio));
  write_kv(out, "total_area", format_double(mesh.total_area()));
  write_kv(out, "signed_volume", format_double(mesh.signed_volume()));
  write_kv(out, "min_edge_length", format_double(mesh.min_edge_length()));
  write_kv(out, "max_edge_length", format_double(mesh.max_edge_length()));
  write_kv(out, "valid", flag(r.ok()));
  return out.str();
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);

  ExperimentResult result;
  result.dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(result.dir, ec);
  if (ec) throw DomainError("cannot create '" + result.dir.string() + "': " + ec.message());

  ArtifactWriter w(result.dir);
  const FeedbackLaw law = parse_feedback(config.feedback);

  std::optional<SurfaceMesh> mesh;
  CurvatureField curv;
  RegionDecomposition decomp;
  DampingProfile damping;
  DiscreteOperators ops;
  WaveState initial;
  Trajectory traj;
  Eigen::VectorXd a;

  w.stage("config", [&] {
    w.write(artifact::config, [&](std::ostream& out) { out << render_config(config); });
  });
  w.stage("mesh", [&] {
    mesh = mesh_from_source(config.mesh_source);
    w.write(artifact::mesh_report, [&](std::ostream& out) { out << mesh_report_text(*mesh); });
    w.write(artifact::mesh, [&](std::ostream& out) { write_off(out, *mesh); });
  });
  w.stage("geometry", [&] {
    const VertexGeometry vg = vertex_normals_and_areas(*mesh);
    curv = shape_operator(*mesh, vg.normals);
    decomp = classify_visibility(*mesh, curv.normals, config.x0);
    PatchSelection sel;
    sel.mode = config.patch_mode;
    sel.seeds = config.patch_seeds;
    for (const auto& p : config.patch_seed_points) sel.seeds.push_back(nearest_vertex(*mesh, p));
    sel.eps_umb = config.eps_umb;
    sel.tol_H = config.tol_H;
    decomp = select_patches(*mesh, std::move(decomp), curv, sel);

    w.write(artifact::admissibility, [&](std::ostream& out) {
      write_kv(out, "visible_area_fraction",
               format_double(visible_area_fraction(decomp, vg.areas)));
      write_kv(out, "R_max", format_double(decomp.R_max));
      write_kv(out, "norm_B", format_double(curv.norm_B));
      // sup over the whole surface; the constant's |H| is read as sup_M |H|.
      write_kv(out, "sup_abs_H", format_double(curv.sup_abs_H));
      write_kv(out, "patch_mode", to_string(config.patch_mode));
      write_kv(out, "patches", std::to_string(decomp.patches.size()));
      write_kv(out, "waived", flag(config.waive_admissibility));
      bool all = true;
      for (std::size_t i = 0; i < decomp.patches.size(); ++i) {
        const auto r = check_admissible_patch(curv, decomp.patches[i], config.eps_umb, config.tol_H);
        const std::string key = "patch." + std::to_string(i) + ".";
        write_kv(out, key + "vertices", std::to_string(decomp.patches[i].size()));
        write_kv(out, key + "H_max", format_double(r.H_max));
        write_kv(out, key + "gap_max", format_double(r.gap_max));
        write_kv(out, key + "tol_H", format_double(r.tol_H));
        write_kv(out, key + "eps_umb", format_double(r.eps_umb));
        write_kv(out, key + "admissible", flag(r.admissible));
        all = all && r.admissible;
      }
      write_kv(out, "admissible", flag(all));
    });
  });
  w.stage("damping", [&] {
    DampingOptions opt;
    opt.a0 = config.a0;
    opt.a_max = config.a_max;
    opt.eps_tube = config.eps_tube;
    opt.waive_admissibility = config.waive_admissibility;
    opt.eps_umb = config.eps_umb;
    opt.tol_H = config.tol_H;
    damping = build_damping(*mesh, decomp, curv, opt);
    a = Eigen::Map<const Eigen::VectorXd>(damping.a.data(),
                                          static_cast<Eigen::Index>(damping.a.size()));
    w.write(artifact::fields, [&](std::ostream& out) {
      write_fields_csv(out, curv, decomp, damping.cutoff.eta, damping.a);
    });
  });
  w.stage("operators", [&] {
    ops = DiscreteOperators::assemble(*mesh, true);
    result.lambda1 = ops.lambda1;
  });
  w.stage("initial", [&] {
    switch (config.init.kind) {
      case InitialKind::mode:
        initial = mode_initial_state(ops, config.init.amplitude, config.init.mode);
        break;
      case InitialKind::random:
        initial = random_initial_state(*mesh, ops, config.init.amplitude, *config.seed);
        break;
      case InitialKind::bump:
        initial = bump_initial_state(*mesh, ops, config.init.center, config.init.width,
                                     config.init.amplitude);
        break;
      case InitialKind::file:
        initial = load_initial_file(config.init.file, ops);
        break;
    }
  });
  w.stage("simulate", [&] {
    SimulationConfig sc;
    sc.dt = config.dt;
    sc.t_max = config.t_max;
    sc.sample_stride = config.sample_stride;
    sc.snapshots = config.snapshots || config.multiplier;
    traj = simulate(ops, a, law, initial, sc);
    w.write(artifact::trajectory, [&](std::ostream& out) { write_trajectory_csv(out, traj); });
    if (config.snapshots)
      w.write(artifact::snapshots, [&](std::ostream& out) { write_snapshots_csv(out, traj); });
  });
  w.stage("certify", [&] {
    CertifyInputs in{construct_h(law), mesh->total_area(), damping.a_inf,
                     1.0 / law.k_low() + law.K_high(), config.dt_ode};
    const double T0_requested = config.T0 ? *config.T0 : 4.0 / std::sqrt(ops.lambda1);
    std::vector<double> ts, es;
    for (const auto& s : traj.samples) {
      ts.push_back(s.t);
      es.push_back(s.E);
    }
    const CertificationReport rep = certify(ts, es, in, T0_requested);
    result.certification = rep;
    result.T0 = rep.T0;
    w.write(artifact::certification, [&](std::ostream& out) {
      write_kv(out, "sequence_ok", flag(rep.sequence_ok));
      write_kv(out, "envelope_ok", flag(rep.envelope_ok));
      write_kv(out, "sequence_below_envelope", flag(rep.sequence_below_envelope));
      write_kv(out, "fitted_L", format_double(rep.fitted_L));
      write_kv(out, "T0", format_double(rep.T0));
      write_kv(out, "T0_requested", format_double(T0_requested));
      write_kv(out, "lambda1", format_double(ops.lambda1));
      write_kv(out, "periods", std::to_string(rep.periods));
      write_kv(out, "c", format_double(rep.c));
      write_kv(out, "meas_sigma", format_double(rep.meas_sigma));
      write_kv(out, "area", format_double(in.area));
      write_kv(out, "a_inf", format_double(in.a_inf));
      write_kv(out, "K0", format_double(in.K0));
      write_kv(out, "h", in.h.tag());
      write_kv(out, "feedback", law.spec());
      write_kv(out, "dt_ode", format_double(in.dt_ode));
      write_kv(out, "max_envelope_ratio", format_double(rep.max_envelope_ratio));
      write_kv(out, "sequence", join(rep.sequence));
    });
    if (rep.sequence_ok && std::isfinite(rep.fitted_L)) {
      const EnvelopeCurve S = certified_envelope(rep, in);
      w.write(artifact::envelope,
              [&](std::ostream& out) { write_envelope_csv(out, traj, S, rep.T0); });
    }
  });
  if (config.multiplier) {
    w.stage("multiplier", [&] {
      const MultiplierTerms m = multiplier_residual(traj, *mesh, ops, decomp, curv, a, law);
      result.multiplier = m;
      w.write(artifact::multiplier, [&](std::ostream& out) {
        write_kv(out, "boundary", format_double(m.boundary));
        write_kv(out, "divergence", format_double(m.divergence));
        write_kv(out, "shape", format_double(m.shape));
        write_kv(out, "damping", format_double(m.damping));
        write_kv(out, "constraint", format_double(m.constraint));
        write_kv(out, "sum", format_double(m.sum()));
        write_kv(out, "largest", format_double(m.largest()));
        write_kv(out, "normalized_residual", format_double(m.normalized_residual()));
      });
    });
  }

  w.finish();
  result.ok = !w.failed();
  result.failed_stage = w.failed_stage();
  result.error = w.error();
  return result;
}

bool VerifyReport::ok() const {
  for (const auto& c : checks)
    if (!c.ok) return false;
  return !checks.empty();
}

VerifyReport verify_run(const fs::path& dir) {
  VerifyReport report;
  auto check = [&](const std::string& name, const std::function<std::string()>& body) {
    try {
      const std::string failure = body();
      report.checks.push_back({name, failure.empty(), failure});
    } catch (const std::exception& e) {
      report.checks.push_back({name, false, e.what()});
    }
  };

  Manifest manifest;
  check("manifest", [&]() -> std::string {
    std::ifstream in(dir / artifact::manifest);
    if (!in) return "missing " + std::string(artifact::manifest);
    manifest = Manifest::read(in);
    return {};
  });
  if (!report.ok()) return report;

  check("hashes", [&]() -> std::string {
    for (const auto& [name, hash] : manifest.files) {
      if (!fs::exists(dir / name)) return name + " missing";
      if (sha256_file(dir / name) != hash) return name + " does not match its manifest hash";
    }
    return {};
  });
  check("stages", [&]() -> std::string {
    for (const auto& s : manifest.stages)
      if (!s.ok) return "stage " + s.name + " failed: " + s.message;
    return {};
  });

  auto listed = [&](const std::string& name) {
    for (const auto& f : manifest.files)
      if (f.first == name) return true;
    return false;
  };

  ExperimentConfig config;
  check("config", [&]() -> std::string {
    config = apply_keys(ExperimentConfig{}, read_key_values(dir / artifact::config));
    validate(config);
    return {};
  });

  if (listed(artifact::fields)) {
    check("fields", [&]() -> std::string {
      const CsvTable t = read_table(dir / artifact::fields);
      const auto report_kv = read_report(dir / artifact::mesh_report);
      if (t.rows.size() != static_cast<std::size_t>(std::stol(report_kv.at("V"))))
        return "row count differs from the vertex count";
      for (const auto& name : {"vertex_id", "k1", "k2", "H", "in_M1", "eta", "a"}) t.column(name);
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double m1 = t.rows[i][t.column("in_M1")];
        const double eta = t.rows[i][t.column("eta")];
        const double a = t.rows[i][t.column("a")];
        if (m1 != 0.0 && m1 != 1.0) return "in_M1 not 0/1 at row " + std::to_string(i);
        if (eta < 0.0 || eta > 1.0) return "eta outside [0, 1] at row " + std::to_string(i);
        if (a < 0.0 || a > config.a_max) return "a outside [0, a_max] at row " + std::to_string(i);
        if (t.rows[i][t.column("k1")] > t.rows[i][t.column("k2")])
          return "k1 > k2 at row " + std::to_string(i);
      }
      return {};
    });
  }

  CsvTable traj;
  if (listed(artifact::trajectory)) {
    check("energy", [&]() -> std::string {
      traj = read_table(dir / artifact::trajectory);
      const auto E = traj.values("E");
      if (E.empty()) return "empty trajectory";
      for (std::size_t i = 1; i < E.size(); ++i)
        if (E[i] > E[i - 1] * (1.0 + 1e-12) + 1e-300)
          return "energy increases at row " + std::to_string(i);
      return {};
    });
    check("dissipation", [&]() -> std::string {
      const auto E = traj.values("E");
      const auto r = traj.values("dissipation_residual");
      const auto d = traj.values("dissipated_increment");
      for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] < -1e-12 * E.front()) return "negative dissipation at row " + std::to_string(i);
      if (parse_feedback(config.feedback).is_linear()) {
        for (std::size_t i = 0; i < r.size(); ++i)
          if (r[i] > 1e-10 * E.front())
            return "dissipation residual above 1e-10 E(0) at row " + std::to_string(i);
      }
      return {};
    });
  }

  if (listed(artifact::certification)) {
    check("certification", [&]() -> std::string {
      const auto cert = read_report(dir / artifact::certification);
      const bool envelope_ok = cert.at("envelope_ok") == "true";
      if (!listed(artifact::envelope)) {
        return cert.at("sequence_ok") == "true" && std::isfinite(std::stod(cert.at("fitted_L")))
                   ? "certified run without an envelope table"
                   : "";
      }
      const CsvTable env = read_table(dir / artifact::envelope);
      const double T0 = std::stod(cert.at("T0"));
      const auto t = env.values("t");
      const auto E = env.values("E");
      const auto S = env.values("S_shifted");
      if (!traj.rows.empty() && (traj.values("E") != E || traj.values("t") != t))
        return "envelope table does not match the trajectory";
      for (std::size_t i = 1; i < S.size(); ++i)
        if (S[i] > S[i - 1]) return "envelope increases at row " + std::to_string(i);
      bool holds = true;
      for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] - t.front() > T0 && E[i] > S[i] * (1.0 + 1e-9)) holds = false;
      if (holds != envelope_ok)
        return "envelope_ok = " + cert.at("envelope_ok") + " disagrees with the envelope table";
      return {};
    });
  }
  return report;
}

}  // namespace dampsurf
