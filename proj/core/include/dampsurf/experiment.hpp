#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dampsurf/config.hpp"
#include "dampsurf/decay.hpp"
#include "dampsurf/dynamics.hpp"

namespace dampsurf {

struct ExperimentResult {
  std::filesystem::path dir;
  bool ok = false;
  std::string failed_stage;
  std::string error;
  std::optional<CertificationReport> certification;
  std::optional<MultiplierTerms> multiplier;
  double T0 = 0.0;
  double lambda1 = 0.0;
};

/// key = value validation report, shared by the artifact writer and the CLI.
std::string mesh_report_text(const SurfaceMesh& mesh);

/// Runs the full pipeline and writes the artifact directory. The config is
/// validated first (ConfigError, nothing written). A failing stage is recorded
/// in the manifest and the artifacts written so far are kept.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct VerifyCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool ok() const;
};

/// Re-checks an artifact directory: manifest hashes, stage status, CSV schemas,
/// energy monotonicity, the dissipation ledger and the certified envelope.
VerifyReport verify_run(const std::filesystem::path& dir);

/// Artifact file names.
namespace artifact {
inline constexpr const char* config = "config.resolved.txt";
inline constexpr const char* mesh_report = "mesh_report.txt";
inline constexpr const char* mesh = "mesh.off";
inline constexpr const char* fields = "fields.csv";
inline constexpr const char* admissibility = "admissibility.txt";
inline constexpr const char* trajectory = "trajectory.csv";
inline constexpr const char* envelope = "envelope.csv";
inline constexpr const char* certification = "certification.txt";
inline constexpr const char* multiplier = "multiplier.txt";
inline constexpr const char* snapshots = "snapshots.csv";
inline constexpr const char* manifest = "manifest.txt";
}  // namespace artifact

}  // namespace dampsurf
