#include "dampsurf/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string_view>

#include "dampsurf/error.hpp"
#include "dampsurf/feedback.hpp"

namespace dampsurf {
namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& key, const std::string& text) {
  double value = 0.0;
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  return value;
}

long long parse_integer(const std::string& key, const std::string& text) {
  long long value = 0;
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + text + "'");
}

std::optional<double> parse_auto_number(const std::string& key, const std::string& text) {
  if (text == "auto" || text.empty()) return std::nullopt;
  return parse_number(key, text);
}

// Shortest representation that round-trips.
std::string shortest(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string render_vec3(const Vec3& v) {
  return shortest(v.x()) + "," + shortest(v.y()) + "," + shortest(v.z());
}

InitialKind parse_initial_kind(const std::string& text) {
  if (text == "mode") return InitialKind::mode;
  if (text == "random") return InitialKind::random;
  if (text == "bump") return InitialKind::bump;
  if (text == "file") return InitialKind::file;
  throw ConfigError("init.kind: expected mode|random|bump|file, got '" + text + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key,
                                  const std::string& value)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"mesh.source", [](auto& c, auto&, auto& v) { c.mesh_source = v; }},
      {"observer.x0", [](auto& c, auto&, auto& v) { c.x0 = parse_vec3(v); }},
      {"patches.mode", [](auto& c, auto&, auto& v) { c.patch_mode = parse_patch_mode(v); }},
      {"patches.seeds",
       [](auto& c, auto& k, auto& v) {
         c.patch_seeds.clear();
         for (const auto& s : split(v, ','))
           c.patch_seeds.push_back(static_cast<int>(parse_integer(k, s)));
       }},
      {"patches.seed_points",
       [](auto& c, auto&, auto& v) {
         c.patch_seed_points.clear();
         for (const auto& s : split(v, ';')) c.patch_seed_points.push_back(parse_vec3(s));
       }},
      {"patches.eps_umb", [](auto& c, auto& k, auto& v) { c.eps_umb = parse_number(k, v); }},
      {"patches.tol_H", [](auto& c, auto& k, auto& v) { c.tol_H = parse_auto_number(k, v); }},
      {"patches.waive_admissibility",
       [](auto& c, auto& k, auto& v) { c.waive_admissibility = parse_bool(k, v); }},
      {"damping.eps_tube", [](auto& c, auto& k, auto& v) { c.eps_tube = parse_number(k, v); }},
      {"damping.a0", [](auto& c, auto& k, auto& v) { c.a0 = parse_number(k, v); }},
      {"damping.a_max", [](auto& c, auto& k, auto& v) { c.a_max = parse_number(k, v); }},
      {"feedback.spec", [](auto& c, auto&, auto& v) { c.feedback = v; }},
      {"init.kind", [](auto& c, auto&, auto& v) { c.init.kind = parse_initial_kind(v); }},
      {"init.mode",
       [](auto& c, auto& k, auto& v) { c.init.mode = static_cast<int>(parse_integer(k, v)); }},
      {"init.amplitude", [](auto& c, auto& k, auto& v) { c.init.amplitude = parse_number(k, v); }},
      {"init.center", [](auto& c, auto&, auto& v) { c.init.center = parse_vec3(v); }},
      {"init.width", [](auto& c, auto& k, auto& v) { c.init.width = parse_number(k, v); }},
      {"init.file", [](auto& c, auto&, auto& v) { c.init.file = v; }},
      {"time.dt", [](auto& c, auto& k, auto& v) { c.dt = parse_number(k, v); }},
      {"time.t_max", [](auto& c, auto& k, auto& v) { c.t_max = parse_number(k, v); }},
      {"time.sample_stride",
       [](auto& c, auto& k, auto& v) { c.sample_stride = static_cast<int>(parse_integer(k, v)); }},
      {"decay.T0", [](auto& c, auto& k, auto& v) { c.T0 = parse_auto_number(k, v); }},
      {"decay.dt_ode", [](auto& c, auto& k, auto& v) { c.dt_ode = parse_number(k, v); }},
      {"output.dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
      {"run.seed",
       [](auto& c, auto& k, auto& v) {
         const auto n = parse_integer(k, v);
         if (n < 0) throw ConfigError("run.seed must be nonnegative");
         c.seed = static_cast<std::uint64_t>(n);
       }},
      {"diagnostics.snapshots", [](auto& c, auto& k, auto& v) { c.snapshots = parse_bool(k, v); }},
      {"diagnostics.multiplier", [](auto& c, auto& k, auto& v) { c.multiplier = parse_bool(k, v); }},
  };
  return table;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Vec3 parse_vec3(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw ConfigError("expected x,y,z, got '" + text + "'");
  return {parse_number("x,y,z", parts[0]), parse_number("x,y,z", parts[1]),
          parse_number("x,y,z", parts[2])};
}

std::string to_string(PatchMode mode) {
  switch (mode) {
    case PatchMode::none: return "none";
    case PatchMode::all_m0: return "all_m0";
    case PatchMode::m0_component: return "m0_component";
    case PatchMode::admissible_component: return "admissible_component";
  }
  return "none";
}

PatchMode parse_patch_mode(const std::string& text) {
  for (auto m : {PatchMode::none, PatchMode::all_m0, PatchMode::m0_component,
                 PatchMode::admissible_component})
    if (text == to_string(m)) return m;
  throw ConfigError("patches.mode: expected none|all_m0|m0_component|admissible_component, got '" +
                    text + "'");
}

std::string to_string(InitialKind kind) {
  switch (kind) {
    case InitialKind::mode: return "mode";
    case InitialKind::random: return "random";
    case InitialKind::bump: return "bump";
    case InitialKind::file: return "file";
  }
  return "random";
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = " at line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header" + where);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value" + where);
    std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key" + where);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    if (out.count(key)) throw ConfigError("duplicate key '" + key + "'" + where);
    out.emplace(std::move(key), std::string(value));
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_key_values(in);
}

ExperimentConfig apply_keys(ExperimentConfig base, const KeyValues& keys) {
  for (const auto& [key, value] : keys) {
    bool found = false;
    for (const auto& [name, set] : setters()) {
      if (name != key) continue;
      set(base, key, value);
      found = true;
      break;
    }
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const auto keys = read_key_values(path);
  ExperimentConfig base;
  if (const auto it = keys.find("preset"); it != keys.end()) {
    base = preset(it->second);
    auto rest = keys;
    rest.erase("preset");
    return apply_keys(base, rest);
  }
  return apply_keys(base, keys);
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  auto finite = [](double x) { return std::isfinite(x); };
  require(!c.mesh_source.empty(), "mesh.source is empty");
  require(c.x0.allFinite(), "observer.x0 must be finite");
  require(finite(c.eps_umb) && c.eps_umb > 0.0, "patches.eps_umb must be > 0");
  require(!c.tol_H || (finite(*c.tol_H) && *c.tol_H >= 0.0), "patches.tol_H must be >= 0");
  for (const auto& p : c.patch_seed_points) require(p.allFinite(), "seed points must be finite");
  for (int s : c.patch_seeds) require(s >= 0, "patches.seeds must be nonnegative");
  const bool seeded = c.patch_mode == PatchMode::m0_component ||
                      c.patch_mode == PatchMode::admissible_component;
  require(!seeded || !c.patch_seeds.empty() || !c.patch_seed_points.empty(),
          "patches.mode " + to_string(c.patch_mode) + " needs seeds or seed_points");
  require(finite(c.eps_tube) && c.eps_tube > 0.0, "damping.eps_tube must be > 0");
  require(finite(c.a0) && c.a0 > 0.0, "damping.a0 must be > 0");
  require(finite(c.a_max) && c.a_max >= c.a0, "damping.a_max must be >= damping.a0");
  try {
    (void)parse_feedback(c.feedback);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid config: feedback.spec: ") + e.what());
  }
  require(c.init.mode >= 1, "init.mode must be >= 1");
  require(finite(c.init.amplitude), "init.amplitude must be finite");
  require(c.init.center.allFinite(), "init.center must be finite");
  require(finite(c.init.width) && c.init.width > 0.0, "init.width must be > 0");
  require(c.init.kind != InitialKind::file || !c.init.file.empty(),
          "init.kind = file needs init.file");
  require(finite(c.dt) && c.dt > 0.0, "time.dt must be > 0");
  require(finite(c.t_max) && c.t_max > 0.0, "time.t_max must be > 0");
  require(c.sample_stride >= 1, "time.sample_stride must be >= 1");
  require(!c.T0 || (finite(*c.T0) && *c.T0 > 0.0), "decay.T0 must be > 0");
  require(finite(c.dt_ode) && c.dt_ode > 0.0, "decay.dt_ode must be > 0");
  require(!c.output_dir.empty(), "output.dir is empty");
  require(c.seed.has_value(), "run.seed is required");
}

KeyValues to_key_values(const ExperimentConfig& c) {
  KeyValues kv;
  kv["mesh.source"] = c.mesh_source;
  kv["observer.x0"] = render_vec3(c.x0);
  kv["patches.mode"] = to_string(c.patch_mode);
  std::string seeds;
  for (std::size_t i = 0; i < c.patch_seeds.size(); ++i)
    seeds += (i ? "," : "") + std::to_string(c.patch_seeds[i]);
  kv["patches.seeds"] = seeds;
  std::string points;
  for (std::size_t i = 0; i < c.patch_seed_points.size(); ++i)
    points += (i ? ";" : "") + render_vec3(c.patch_seed_points[i]);
  kv["patches.seed_points"] = points;
  kv["patches.eps_umb"] = shortest(c.eps_umb);
  kv["patches.tol_H"] = c.tol_H ? shortest(*c.tol_H) : "auto";
  kv["patches.waive_admissibility"] = c.waive_admissibility ? "true" : "false";
  kv["damping.eps_tube"] = shortest(c.eps_tube);
  kv["damping.a0"] = shortest(c.a0);
  kv["damping.a_max"] = shortest(c.a_max);
  kv["feedback.spec"] = c.feedback;
  kv["init.kind"] = to_string(c.init.kind);
  kv["init.mode"] = std::to_string(c.init.mode);
  kv["init.amplitude"] = shortest(c.init.amplitude);
  kv["init.center"] = render_vec3(c.init.center);
  kv["init.width"] = shortest(c.init.width);
  kv["init.file"] = c.init.file;
  kv["time.dt"] = shortest(c.dt);
  kv["time.t_max"] = shortest(c.t_max);
  kv["time.sample_stride"] = std::to_string(c.sample_stride);
  kv["decay.T0"] = c.T0 ? shortest(*c.T0) : "auto";
  kv["decay.dt_ode"] = shortest(c.dt_ode);
  kv["output.dir"] = c.output_dir;
  if (c.seed) kv["run.seed"] = std::to_string(*c.seed);
  kv["diagnostics.snapshots"] = c.snapshots ? "true" : "false";
  kv["diagnostics.multiplier"] = c.multiplier ? "true" : "false";
  return kv;
}

std::string render_config(const ExperimentConfig& config) {
  std::ostringstream out;
  for (const auto& [key, value] : to_key_values(config)) {
    const bool quote = value.empty() || value.find_first_of("#\"") != std::string::npos ||
                       value != trim(value);
    out << key << " = " << (quote ? "\"" + value + "\"" : value) << '\n';
  }
  return out.str();
}

std::vector<std::string> preset_names() { return {"sphere-full", "sphere-cap", "torus-outer"}; }

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.seed = 1;
  c.output_dir = "runs/" + name;
  if (name == "sphere-full") {
    c.mesh_source = "icosphere:1:3";
    c.patch_mode = PatchMode::none;
    c.t_max = 20.0;
    return c;
  }
  if (name == "sphere-cap") {
    // Observer below the sphere; the undamped patch is the cap facing it.
    c.mesh_source = "icosphere:1:3";
    c.x0 = Vec3(0.0, 0.0, -2.0);
    c.patch_mode = PatchMode::m0_component;
    c.patch_seed_points = {Vec3(0.0, 0.0, -1.0)};
    c.eps_umb = 0.5;
    c.t_max = 30.0;
    return c;
  }
  if (name == "torus-outer") {
    // Undamped patch around the outer equator facing the observer; the inner
    // band, where |k1 - k2| is largest, lies in the damped region.
    c.mesh_source = "torus:2:1:96:48";
    c.x0 = Vec3(10.0, 0.0, 0.0);
    c.patch_mode = PatchMode::admissible_component;
    c.patch_seed_points = {Vec3(3.0, 0.0, 0.0)};
    c.eps_umb = 0.9;
    c.eps_tube = 0.5;
    c.t_max = 40.0;
    return c;
  }
  std::string names;
  for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "' (known: " + names + ")");
}

}  // namespace dampsurf
