#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dampsurf/feedback.hpp"

namespace dampsurf {

/// Strictly increasing function on [0, inf). Either a closed form (linear,
/// power), a tabulated curve (linear interpolation, linear extrapolation with
/// the last slope), or a composite built by inversion.
class MonotoneFn {
 public:
  static MonotoneFn linear(double slope);
  /// coefficient * x^exponent
  static MonotoneFn power(double coefficient, double exponent);
  static MonotoneFn tabulated(std::vector<double> xs, std::vector<double> ys);
  static MonotoneFn composite(std::string tag, std::function<double(double)> fn);

  double operator()(double x) const { return fn_(x); }
  const std::string& tag() const { return tag_; }

  /// Sampled check of strict monotonicity on [0, x_max].
  bool is_increasing(double x_max, int samples = 1000) const;

 private:
  MonotoneFn(std::string tag, std::function<double(double)> fn)
      : tag_(std::move(tag)), fn_(std::move(fn)) {}

  std::string tag_;
  std::function<double(double)> fn_;
};

/// Solves f(y) = target for y >= 0 with f increasing and f(0) = 0. The
/// bracket starts at the target and grows or shrinks by factors of 2;
/// bisection stops at width 1e-12 * min(1, hi) or when the midpoint stops
/// moving. Throws SolverError on bracket failure.
double invert_increasing(const std::function<double(double)>& f, double target);

/// Concave, increasing h with h(0) = 0 and h(s g(s)) >= s^2 + g(s)^2 on
/// |s| <= 1. Closed forms for the built-in families:
///   linear slope k:  h(y) = (1 + k^2) / k * y
///   power p:         h(y) = 2 y^(2 / (p + 1))
MonotoneFn construct_h(const FeedbackLaw& g);

/// General route: least concave majorant of the samples of
/// (s g(s), s^2 + g(s)^2), s in [0, 1], built as an upper hull.
MonotoneFn construct_h_hull(const FeedbackLaw& g, int samples = 20000);

/// max over the grid s_i = i / n, i = 0..n, of (s^2 + g^2) - h(s g(s)).
/// Nonpositive when the majorant inequality holds.
double h_majorant_violation(const MonotoneFn& h, const FeedbackLaw& g,
                            int n = 10000);

struct ChainParams {
  double meas_sigma = 1.0;  // area(M) * T
  double a_inf = 0.0;       // sup a
  double K0 = 2.0;          // 1/k + K
  double L = 1.0;
};

struct DecayChain {
  MonotoneFn h;
  MonotoneFn r;  // r(y) = h(y / meas_sigma)
  MonotoneFn p;  // p(x) = (c I + r)^{-1}(L x)
  MonotoneFn q;  // q(x) = x - (I + p)^{-1}(x)
  double c = 0.0;  // K0 / (meas_sigma (1 + a_inf))
  ChainParams params;
};

double chain_constant_c(const ChainParams& params);

DecayChain build_chain(const MonotoneFn& h, const ChainParams& params);

/// q(x) = x - (I + p)^{-1}(x) for an arbitrary increasing p with p(0) = 0.
MonotoneFn make_q(const MonotoneFn& p);

/// Sampled solution of S' + q(S) = 0, S(0) = S0 (classical RK4, clipped at 0
/// and forced nonincreasing).
class EnvelopeCurve {
 public:
  EnvelopeCurve(MonotoneFn q, double S0, double t_max, double dt_ode);

  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& values() const { return S_; }
  double S0() const { return S_.front(); }
  double t_max() const { return t_.back(); }

  /// S(t) for t in [0, t_max]: one partial RK4 step from the grid point below.
  double at(double t) const;

 private:
  double rk4(double S, double h) const;

  MonotoneFn q_;
  double dt_;
  std::vector<double> t_;
  std::vector<double> S_;
};

EnvelopeCurve solve_envelope(const MonotoneFn& q, double S0, double t_max,
                             double dt_ode);

/// Closed-form decay bounds.
///   exponential:  C e^{-k t} E0
///   polynomial:   C [E0^{(1-p)/2} + t (p - 1)]^{2/(1-p)}
struct ClosedFormEnvelope {
  enum class Kind { exponential, polynomial };
  Kind kind = Kind::exponential;
  double C = 1.0;
  double rate = 1.0;      // k, exponential only
  double exponent = 3.0;  // p, polynomial only
  double E0 = 1.0;

  double operator()(double t) const;
};

ClosedFormEnvelope closed_form_envelope_exponential(double C, double k, double E0);
ClosedFormEnvelope closed_form_envelope_polynomial(double C, double p, double E0);

// -- certification ---------------------------------------------------------

/// True when s_{m+1} + p(s_{m+1}) <= s_m for every m.
bool sequence_condition(std::span<const double> s, const MonotoneFn& p);

/// Largest L (to 1% relative, lower end of the final bracket) for which the
/// sequence satisfies the contraction condition with p_L from build_chain.
/// Returns 0 when no positive L works.
double fit_L(std::span<const double> s, const MonotoneFn& h, ChainParams params);

struct CertificationReport {
  bool sequence_ok = false;
  bool envelope_ok = false;
  bool sequence_below_envelope = false;  // s_m <= S(m) + 1e-12 at every period
  double fitted_L = 0.0;
  double T0 = 0.0;          // effective period (multiple of the sample spacing)
  int periods = 0;
  double t_end = 0.0;       // last sample time relative to the first
  double c = 0.0;
  double meas_sigma = 0.0;
  double max_envelope_ratio = 0.0;  // max over t > T0 of E(t) / S(t/T0 - 1)
  std::vector<double> sequence;     // E(m T0)
};

struct CertifyInputs {
  MonotoneFn h;
  double area = 1.0;   // area(M); meas_sigma = area * T0
  double a_inf = 0.0;
  double K0 = 2.0;
  double dt_ode = 1e-3;
};

/// Samples s_m = E(m T0) from (t, E) pairs (uniformly spaced, starting at 0),
/// fits L, solves S for the fitted chain and checks E(t) <= S(t/T0 - 1) for
/// every sample with t > T0. Throws DomainError when fewer than 3 periods fit.
CertificationReport certify(std::span<const double> times,
                            std::span<const double> energies,
                            const CertifyInputs& inputs, double T0);

/// Envelope for the fitted chain of a report (for CSV export).
EnvelopeCurve certified_envelope(const CertificationReport& report,
                                 const CertifyInputs& inputs);

}  // namespace dampsurf
