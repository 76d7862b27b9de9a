#include "dampsurf/decay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dampsurf/error.hpp"

namespace dampsurf {

namespace {

std::string fmt_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

MonotoneFn MonotoneFn::linear(double slope) {
  if (!(slope > 0.0)) throw DomainError("linear MonotoneFn needs a positive slope");
  return {"linear(" + fmt_number(slope) + ")", [slope](double x) { return slope * x; }};
}

MonotoneFn MonotoneFn::power(double coefficient, double exponent) {
  if (!(coefficient > 0.0) || !(exponent > 0.0))
    throw DomainError("power MonotoneFn needs positive coefficient and exponent");
  return {"power(" + fmt_number(coefficient) + "," + fmt_number(exponent) + ")",
          [coefficient, exponent](double x) {
            return x >= 0.0 ? coefficient * std::pow(x, exponent)
                            : -coefficient * std::pow(-x, exponent);
          }};
}

MonotoneFn MonotoneFn::tabulated(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() < 2 || xs.size() != ys.size())
    throw DomainError("tabulated MonotoneFn needs >= 2 matching samples");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1]) || !(ys[i] > ys[i - 1]))
      throw DomainError("tabulated MonotoneFn samples must be strictly increasing");
  auto table = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>(
      std::move(xs), std::move(ys));
  return {"tabulated", [table](double x) {
            const auto& [X, Y] = *table;
            std::size_t hi;
            if (x >= X.back()) {
              hi = X.size() - 1;
            } else if (x <= X.front()) {
              hi = 1;
            } else {
              hi = static_cast<std::size_t>(std::upper_bound(X.begin(), X.end(), x) - X.begin());
            }
            const std::size_t lo = hi - 1;
            const double slope = (Y[hi] - Y[lo]) / (X[hi] - X[lo]);
            return Y[lo] + slope * (x - X[lo]);
          }};
}

MonotoneFn MonotoneFn::composite(std::string tag, std::function<double(double)> fn) {
  return {std::move(tag), std::move(fn)};
}

bool MonotoneFn::is_increasing(double x_max, int samples) const {
  double previous = (*this)(0.0);
  for (int i = 1; i <= samples; ++i) {
    const double value = (*this)(x_max * i / samples);
    if (!(value > previous)) return false;
    previous = value;
  }
  return true;
}

double invert_increasing(const std::function<double(double)>& f, double target) {
  if (!(target > 0.0)) return 0.0;
  // Bracket [lo, hi] of ratio 2 around the root, starting from hi = target.
  double lo = 0.0;
  double hi = target;
  int doublings = 0;
  if (f(hi) < target) {
    do {
      lo = hi;
      hi *= 2.0;
      if (++doublings > 2000 || !std::isfinite(hi))
        throw SolverError("inversion bracket failure for target " + fmt_number(target));
    } while (f(hi) < target);
  } else {
    for (double next = 0.5 * hi; next > 0.0 && f(next) >= target; next *= 0.5) hi = next;
    lo = 0.5 * hi;
  }
  for (;;) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-12 * std::min(1.0, hi) || mid <= lo || mid >= hi) break;
    if (f(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

MonotoneFn construct_h(const FeedbackLaw& g) {
  switch (g.kind()) {
    case FeedbackKind::linear: {
      const double k = g.slope();
      return MonotoneFn::linear((1.0 + k * k) / k);
    }
    case FeedbackKind::power:
    case FeedbackKind::saturated_power:
      return MonotoneFn::power(2.0, 2.0 / (g.exponent() + 1.0));
  }
  return construct_h_hull(g);
}

MonotoneFn construct_h_hull(const FeedbackLaw& g, int samples) {
  if (samples < 2) throw DomainError("construct_h_hull needs >= 2 samples");
  // (y, z) = (s g(s), s^2 + g^2) for s in [0, 1]; even in s, so s >= 0 suffices.
  std::vector<double> ys{0.0};
  std::vector<double> zs{0.0};
  for (int i = 1; i <= samples; ++i) {
    const double s = static_cast<double>(i) / samples;
    const double gs = g(s);
    const double y = s * gs;
    const double z = s * s + gs * gs;
    // Upper concave hull by monotone chain.
    while (ys.size() >= 2) {
      const std::size_t n = ys.size();
      const double cross = (ys[n - 1] - ys[n - 2]) * (z - zs[n - 2]) -
                           (zs[n - 1] - zs[n - 2]) * (y - ys[n - 2]);
      if (cross >= 0.0)
        ys.pop_back(), zs.pop_back();
      else
        break;
    }
    if (y > ys.back()) {
      ys.push_back(y);
      zs.push_back(z);
    }
  }
  return MonotoneFn::tabulated(std::move(ys), std::move(zs));
}

double h_majorant_violation(const MonotoneFn& h, const FeedbackLaw& g, int n) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = -n; i <= n; ++i) {
    const double s = static_cast<double>(i) / n;
    const double gs = g(s);
    worst = std::max(worst, (s * s + gs * gs) - h(s * gs));
  }
  return worst;
}

double chain_constant_c(const ChainParams& params) {
  return params.K0 / (params.meas_sigma * (1.0 + params.a_inf));
}

MonotoneFn make_q(const MonotoneFn& p) {
  return MonotoneFn::composite("q[" + p.tag() + "]", [p](double x) {
    if (!(x > 0.0)) return 0.0;
    const double y = invert_increasing([&p](double z) { return z + p(z); }, x);
    return std::max(0.0, x - y);
  });
}

DecayChain build_chain(const MonotoneFn& h, const ChainParams& params) {
  if (!(params.L > 0.0)) throw DomainError("chain constant L must be positive");
  if (!(params.meas_sigma > 0.0)) throw DomainError("meas_sigma must be positive");
  if (!(params.a_inf >= 0.0)) throw DomainError("a_inf must be nonnegative");
  if (!(params.K0 > 0.0)) throw DomainError("K0 must be positive");
  const double c = chain_constant_c(params);
  const double meas = params.meas_sigma;
  const double L = params.L;

  MonotoneFn r = MonotoneFn::composite(
      "r[" + h.tag() + "]", [h, meas](double y) { return h(y / meas); });
  MonotoneFn p = MonotoneFn::composite("p[" + r.tag() + "]", [r, c, L](double x) {
    if (!(x > 0.0)) return 0.0;
    return invert_increasing([&](double y) { return c * y + r(y); }, L * x);
  });
  MonotoneFn q = make_q(p);
  return DecayChain{h, std::move(r), std::move(p), std::move(q), c, params};
}

EnvelopeCurve::EnvelopeCurve(MonotoneFn q, double S0, double t_max, double dt_ode)
    : q_(std::move(q)), dt_(dt_ode) {
  if (!(S0 >= 0.0)) throw DomainError("envelope needs S0 >= 0");
  if (!(dt_ode > 0.0) || !(t_max >= 0.0)) throw DomainError("bad envelope time grid");
  const long steps = std::max(1L, static_cast<long>(std::ceil(t_max / dt_ode - 1e-9)));
  t_.reserve(steps + 1);
  S_.reserve(steps + 1);
  t_.push_back(0.0);
  S_.push_back(S0);
  for (long n = 1; n <= steps; ++n) {
    const double next = std::min(S_.back(), rk4(S_.back(), dt_));
    t_.push_back(static_cast<double>(n) * dt_);
    S_.push_back(std::max(0.0, next));
  }
}

double EnvelopeCurve::rk4(double S, double h) const {
  auto f = [this](double x) { return -q_(std::max(0.0, x)); };
  const double k1 = f(S);
  const double k2 = f(S + 0.5 * h * k1);
  const double k3 = f(S + 0.5 * h * k2);
  const double k4 = f(S + h * k3);
  return S + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double EnvelopeCurve::at(double t) const {
  if (t <= 0.0) return S_.front();
  if (t >= t_.back()) {
    if (t - t_.back() <= 1e-12 * std::max(1.0, t)) return S_.back();
    throw DomainError("envelope evaluated beyond its time grid");
  }
  const auto n = static_cast<std::size_t>(std::floor(t / dt_));
  const std::size_t i = std::min(n, t_.size() - 1);
  const double h = t - t_[i];
  if (h <= 0.0) return S_[i];
  return std::clamp(rk4(S_[i], h), 0.0, S_[i]);
}

EnvelopeCurve solve_envelope(const MonotoneFn& q, double S0, double t_max,
                             double dt_ode) {
  return EnvelopeCurve(q, S0, t_max, dt_ode);
}

double ClosedFormEnvelope::operator()(double t) const {
  if (kind == Kind::exponential) return C * std::exp(-rate * t) * E0;
  const double p = exponent;
  return C * std::pow(std::pow(E0, (1.0 - p) / 2.0) + t * (p - 1.0), 2.0 / (1.0 - p));
}

ClosedFormEnvelope closed_form_envelope_exponential(double C, double k, double E0) {
  if (!(C > 0.0) || !(k > 0.0)) throw DomainError("exponential envelope needs C, k > 0");
  return {ClosedFormEnvelope::Kind::exponential, C, k, 0.0, E0};
}

ClosedFormEnvelope closed_form_envelope_polynomial(double C, double p, double E0) {
  if (!(p > 1.0)) throw DomainError("polynomial envelope needs p > 1");
  if (!(C > 0.0) || !(E0 > 0.0)) throw DomainError("polynomial envelope needs C, E0 > 0");
  return {ClosedFormEnvelope::Kind::polynomial, C, 0.0, p, E0};
}

}  // namespace dampsurf
