#include "dampsurf/csv.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "dampsurf/config.hpp"
#include "dampsurf/error.hpp"

namespace dampsurf {
namespace {

std::vector<double> residual_column(const Trajectory& trajectory) {
  std::vector<double> out{0.0};
  if (trajectory.samples.size() >= 2) {
    const auto r = dissipation_residual(trajectory);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

void write_row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    out << format_double(v);
    first = false;
  }
  out << '\n';
}

}  // namespace

void write_fields_csv(std::ostream& out, const CurvatureField& curv,
                      const RegionDecomposition& decomp,
                      std::span<const double> eta, std::span<const double> a) {
  const std::size_t n = curv.H.size();
  if (decomp.in_M1.size() != n || eta.size() != n || a.size() != n)
    throw DomainError("fields CSV: per-vertex arrays differ in length");
  out << "vertex_id,k1,k2,H,in_M1,eta,a\n";
  for (std::size_t v = 0; v < n; ++v) {
    out << v << ',';
    write_row(out, {curv.k1[v], curv.k2[v], curv.H[v],
                    decomp.in_M1[v] ? 1.0 : 0.0, eta[v], a[v]});
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const auto residual = residual_column(trajectory);
  out << "t,E,kinetic,potential,dissipated_increment,dissipation_residual\n";
  for (std::size_t i = 0; i < trajectory.samples.size(); ++i) {
    const auto& s = trajectory.samples[i];
    write_row(out, {s.t, s.E, s.kinetic, s.potential, s.dissipated, residual[i]});
  }
}

void write_envelope_csv(std::ostream& out, const Trajectory& trajectory,
                        const EnvelopeCurve& envelope, double T0) {
  const auto residual = residual_column(trajectory);
  const double t_start = trajectory.samples.empty() ? 0.0 : trajectory.samples.front().t;
  out << "t,S,S_shifted,E,kinetic,potential,dissipated_increment,dissipation_residual\n";
  for (std::size_t i = 0; i < trajectory.samples.size(); ++i) {
    const auto& s = trajectory.samples[i];
    const double periods = std::min((s.t - t_start) / T0, envelope.t_max());
    const double shifted = std::max(0.0, periods - 1.0);
    write_row(out, {s.t, envelope.at(periods), envelope.at(shifted), s.E, s.kinetic,
                    s.potential, s.dissipated, residual[i]});
  }
}

void write_snapshots_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t,vertex_id,u,v\n";
  for (const auto& snap : trajectory.snapshots) {
    const std::string t = format_double(snap.t);
    for (Eigen::Index v = 0; v < snap.u.size(); ++v)
      out << t << ',' << v << ',' << format_double(snap.u[v]) << ','
          << format_double(snap.v[v]) << '\n';
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DomainError("CSV column '" + name + "' missing");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[c]);
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw DomainError("CSV: empty input");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto end = std::min(line.find(',', start), line.size());
      double value = 0.0;
      const char* b = line.data() + start;
      const char* e = line.data() + end;
      const auto [ptr, ec] = std::from_chars(b, e, value);
      if (ec != std::errc() || ptr != e || b == e)
        throw DomainError("CSV: non-numeric cell at line " + std::to_string(line_no));
      row.push_back(value);
      start = end + 1;
    }
    if (row.size() != table.header.size())
      throw DomainError("CSV: ragged row at line " + std::to_string(line_no));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace dampsurf
