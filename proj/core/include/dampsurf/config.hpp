#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dampsurf/geometry.hpp"
#include "dampsurf/mesh.hpp"

namespace dampsurf {

enum class InitialKind { mode, random, bump, file };

struct InitialDataSpec {
  InitialKind kind = InitialKind::random;
  int mode = 1;
  double amplitude = 1.0;
  Vec3 center{0.0, 0.0, 1.0};
  double width = 0.5;
  std::string file;  // one "u v" pair per vertex
};

struct ExperimentConfig {
  std::string mesh_source = "icosphere:1:3";
  Vec3 x0{0.0, 0.0, -2.0};

  PatchMode patch_mode = PatchMode::none;
  std::vector<int> patch_seeds;
  std::vector<Vec3> patch_seed_points;  // mapped to the nearest vertex
  double eps_umb = 0.5;
  std::optional<double> tol_H;
  bool waive_admissibility = false;

  double eps_tube = 0.35;
  double a0 = 1.0;
  double a_max = 1.0;

  std::string feedback = "linear";
  InitialDataSpec init;

  double dt = 0.05;
  double t_max = 20.0;
  int sample_stride = 1;

  std::optional<double> T0;  // default 4 / sqrt(lambda1)
  double dt_ode = 1e-3;

  std::string output_dir = "run";
  std::optional<std::uint64_t> seed;

  bool snapshots = false;
  bool multiplier = false;
};

using KeyValues = std::map<std::string, std::string>;

/// Flat "key = value" text. "[section]" lines prefix the following keys with
/// "section."; '#' starts a comment; values may be double-quoted.
KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);

/// Applies keys on top of base. Unknown keys and malformed values throw
/// ConfigError.
ExperimentConfig apply_keys(ExperimentConfig base, const KeyValues& keys);

ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError on the first violated invariant.
void validate(const ExperimentConfig& config);

/// Every key, fully resolved, in a fixed order; parses back to the same config.
std::string render_config(const ExperimentConfig& config);
KeyValues to_key_values(const ExperimentConfig& config);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

std::string to_string(PatchMode mode);
PatchMode parse_patch_mode(const std::string& text);
std::string to_string(InitialKind kind);

/// Shared with the command line: "x,y,z".
Vec3 parse_vec3(const std::string& text);
std::string format_double(double value);  // %.17g

}  // namespace dampsurf
