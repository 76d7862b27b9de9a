#include "dampsurf/feedback.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "dampsurf/error.hpp"

namespace dampsurf {

double FeedbackLaw::operator()(double s) const {
  const double a = std::abs(s);
  const double sign = s < 0.0 ? -1.0 : 1.0;
  switch (kind_) {
    case FeedbackKind::linear:
      return slope_ * s;
    case FeedbackKind::power:
      return a <= 1.0 ? sign * std::pow(a, exponent_) : s;
    case FeedbackKind::saturated_power:
      return a <= 1.0 ? sign * std::pow(a, exponent_)
                      : sign * (1.0 + slope_ * (a - 1.0));
  }
  return 0.0;
}

double FeedbackLaw::derivative(double s) const {
  const double a = std::abs(s);
  switch (kind_) {
    case FeedbackKind::linear:
      return slope_;
    case FeedbackKind::power:
      return a <= 1.0 ? exponent_ * std::pow(a, exponent_ - 1.0) : 1.0;
    case FeedbackKind::saturated_power:
      return a <= 1.0 ? exponent_ * std::pow(a, exponent_ - 1.0) : slope_;
  }
  return 0.0;
}

std::string FeedbackLaw::spec() const {
  char buf[96];
  switch (kind_) {
    case FeedbackKind::linear:
      std::snprintf(buf, sizeof buf, "linear:%.17g", slope_);
      break;
    case FeedbackKind::power:
      std::snprintf(buf, sizeof buf, "power:%.17g", exponent_);
      break;
    case FeedbackKind::saturated_power:
      std::snprintf(buf, sizeof buf, "saturated:%.17g:%.17g", exponent_, slope_);
      break;
  }
  return buf;
}

FeedbackLaw make_feedback(FeedbackKind kind, double slope, double exponent) {
  FeedbackLaw g;
  g.kind_ = kind;
  g.slope_ = slope;
  g.exponent_ = exponent;
  if (kind != FeedbackKind::power && !(slope > 0.0 && std::isfinite(slope)))
    throw DomainError("feedback slope must be positive");
  if (kind != FeedbackKind::linear && !(exponent > 1.0 && std::isfinite(exponent)))
    throw DomainError("feedback exponent must satisfy p > 1");

  switch (kind) {
    case FeedbackKind::linear:
      g.k_low_ = g.K_high_ = slope;
      break;
    case FeedbackKind::power:
      g.k_low_ = g.K_high_ = 1.0;
      break;
    case FeedbackKind::saturated_power:
      // (1 + slope (|s| - 1)) / |s| moves monotonically from 1 towards slope.
      g.k_low_ = std::min(1.0, slope);
      g.K_high_ = std::max(1.0, slope);
      g.exponent_ = exponent;
      break;
  }

  constexpr int kGrid = 10000;
  const double tol = 1e-12;
  constexpr double kStep = 20.0 / kGrid;
  double previous = g(-10.0);
  double previous_slope = g.derivative(-10.0);
  for (int i = 1; i <= kGrid; ++i) {
    const double s = -10.0 + kStep * i;
    const double value = g(s);
    const double slope_here = g.derivative(s);
    if (value < previous - tol) throw DomainError("feedback is not monotone");
    // A jump larger than the local Lipschitz bound allows is a discontinuity.
    if (value - previous > 2.0 * std::max(slope_here, previous_slope) * kStep + tol)
      throw DomainError("feedback is not continuous");
    previous = value;
    previous_slope = slope_here;
    if (s != 0.0 && !(value * s > 0.0)) throw DomainError("feedback violates g(s) s > 0");
    const double a = std::abs(s);
    if (a > 1.0) {
      const double ratio = std::abs(value) / a;
      if (ratio < g.k_low_ * (1 - tol) || ratio > g.K_high_ * (1 + tol))
        throw DomainError("feedback violates the linear growth bounds");
    }
  }
  if (g(0.0) != 0.0) throw DomainError("feedback must vanish at 0");
  return g;
}

FeedbackLaw parse_feedback(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream in(spec);
  std::string item;
  while (std::getline(in, item, ':')) parts.push_back(item);
  auto number = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      const double v = std::stod(parts.at(i), &used);
      if (used != parts.at(i).size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad feedback spec '" + spec + "'");
    }
  };
  if (parts.empty()) throw ConfigError("empty feedback spec");
  if (parts[0] == "linear" && parts.size() <= 2)
    return make_feedback(FeedbackKind::linear, parts.size() == 2 ? number(1) : 1.0);
  if (parts[0] == "power" && parts.size() == 2)
    return make_feedback(FeedbackKind::power, 1.0, number(1));
  if (parts[0] == "saturated" && parts.size() == 3)
    return make_feedback(FeedbackKind::saturated_power, number(2), number(1));
  throw ConfigError("bad feedback spec '" + spec +
                    "' (expected linear[:slope], power:p or saturated:p:slope)");
}

}  // namespace dampsurf
