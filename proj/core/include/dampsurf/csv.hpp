#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dampsurf/decay.hpp"
#include "dampsurf/dynamics.hpp"
#include "dampsurf/geometry.hpp"

namespace dampsurf {

/// Per-vertex fields: vertex_id, k1, k2, H, in_M1, eta, a.
void write_fields_csv(std::ostream& out, const CurvatureField& curv,
                      const RegionDecomposition& decomp,
                      std::span<const double> eta, std::span<const double> a);

/// t, E, kinetic, potential, dissipated_increment, dissipation_residual.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/// t, S, S_shifted, then the trajectory columns. S = S(t / T0) and
/// S_shifted = S(max(0, t / T0 - 1)), the bound certified for t > T0.
void write_envelope_csv(std::ostream& out, const Trajectory& trajectory,
                        const EnvelopeCurve& envelope, double T0);

/// Long format: t, vertex_id, u, v.
void write_snapshots_csv(std::ostream& out, const Trajectory& trajectory);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a column; throws DomainError when absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};

/// Numeric CSV with a header line. Throws DomainError on ragged rows or
/// non-numeric cells.
CsvTable read_csv(std::istream& in);

}  // namespace dampsurf
