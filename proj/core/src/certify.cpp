#include <algorithm>
#include <cmath>
#include <limits>

#include "dampsurf/decay.hpp"
#include "dampsurf/error.hpp"

namespace dampsurf {

bool sequence_condition(std::span<const double> s, const MonotoneFn& p) {
  for (std::size_t m = 0; m + 1 < s.size(); ++m)
    if (!(s[m + 1] + p(s[m + 1]) <= s[m])) return false;
  return true;
}

double fit_L(std::span<const double> s, const MonotoneFn& h, ChainParams params) {
  // With p = 0 the condition is s_{m+1} <= s_m; a positive L additionally
  // needs strict decrease wherever s_{m+1} > 0.
  for (std::size_t m = 0; m + 1 < s.size(); ++m) {
    if (s[m + 1] > s[m]) return 0.0;
    if (s[m + 1] > 0.0 && !(s[m + 1] < s[m])) return 0.0;
  }
  if (std::all_of(s.begin(), s.end(), [](double x) { return x == 0.0; }))
    return std::numeric_limits<double>::infinity();

  auto holds = [&](double L) {
    params.L = L;
    return sequence_condition(s, build_chain(h, params).p);
  };
  double lo = 1.0;
  double hi = 1.0;
  if (holds(1.0)) {
    do {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e300) return lo;
    } while (holds(hi));
  } else {
    do {
      hi = lo;
      lo *= 0.5;
      if (lo < 1e-300) return 0.0;
    } while (!holds(lo));
  }
  while (hi > 1.01 * lo) {
    const double mid = std::sqrt(lo * hi);
    if (holds(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

CertificationReport certify(std::span<const double> times,
                            std::span<const double> energies,
                            const CertifyInputs& inputs, double T0) {
  if (times.size() != energies.size() || times.size() < 2)
    throw DomainError("certify needs matching time/energy samples");
  if (!(T0 > 0.0)) throw DomainError("certify needs T0 > 0");
  const double spacing = times[1] - times[0];
  const auto stride = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(T0 / spacing)));

  CertificationReport report;
  report.T0 = times[std::min(stride, times.size() - 1)] - times[0];
  report.periods = static_cast<int>((times.size() - 1) / stride);
  report.t_end = times.back() - times.front();
  if (report.periods < 3)
    throw DomainError("trajectory too short: covers " + std::to_string(report.periods) +
                      " periods of T0, need at least 3");
  for (int m = 0; m <= report.periods; ++m)
    report.sequence.push_back(energies[static_cast<std::size_t>(m) * stride]);

  ChainParams params;
  params.meas_sigma = inputs.area * report.T0;
  params.a_inf = inputs.a_inf;
  params.K0 = inputs.K0;
  report.meas_sigma = params.meas_sigma;
  report.c = chain_constant_c(params);

  report.fitted_L = fit_L(report.sequence, inputs.h, params);
  report.sequence_ok = report.fitted_L > 0.0;
  if (!report.sequence_ok) return report;

  if (std::isinf(report.fitted_L)) {  // identically zero energy
    report.envelope_ok = report.sequence_below_envelope =
        std::all_of(energies.begin(), energies.end(), [](double e) { return e == 0.0; });
    return report;
  }

  const EnvelopeCurve S = certified_envelope(report, inputs);
  const double slack = 1.0 + 1e-9;
  report.sequence_below_envelope = true;
  for (int m = 0; m <= report.periods; ++m)
    if (!(report.sequence[m] <= S.at(m) + 1e-12)) report.sequence_below_envelope = false;

  report.envelope_ok = true;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i] - times[0];
    if (!(t > report.T0)) continue;
    const double bound = S.at(t / report.T0 - 1.0);
    const double ratio = bound > 0.0 ? energies[i] / bound
                                     : (energies[i] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    report.max_envelope_ratio = std::max(report.max_envelope_ratio, ratio);
    if (!(energies[i] <= bound * slack)) report.envelope_ok = false;
  }
  return report;
}

EnvelopeCurve certified_envelope(const CertificationReport& report,
                                 const CertifyInputs& inputs) {
  ChainParams params;
  params.meas_sigma = report.meas_sigma;
  params.a_inf = inputs.a_inf;
  params.K0 = inputs.K0;
  params.L = report.fitted_L;
  const DecayChain chain = build_chain(inputs.h, params);
  return solve_envelope(chain.q, report.sequence.front(),
                        std::max<double>(report.periods, report.t_end / report.T0) +
                            inputs.dt_ode,
                        inputs.dt_ode);
}

}  // namespace dampsurf
