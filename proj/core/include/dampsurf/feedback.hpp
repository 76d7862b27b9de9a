#pragma once

#include <string>

namespace dampsurf {

enum class FeedbackKind { linear, power, saturated_power };

/// Monotone velocity feedback g.
///
///   linear:           g(s) = slope * s
///   power:            g(s) = sign(s) |s|^p for |s| <= 1, g(s) = s beyond
///   saturated_power:  g(s) = sign(s) |s|^p for |s| <= 1,
///                     g(s) = sign(s) (1 + slope (|s| - 1)) beyond
///
/// k_low and K_high bound |g(s)| / |s| for |s| > 1.
class FeedbackLaw {
 public:
  FeedbackKind kind() const { return kind_; }
  double slope() const { return slope_; }
  double exponent() const { return exponent_; }
  double k_low() const { return k_low_; }
  double K_high() const { return K_high_; }
  bool is_linear() const { return kind_ == FeedbackKind::linear; }

  double operator()(double s) const;
  double derivative(double s) const;

  /// Canonical text form, parseable by `parse_feedback`.
  std::string spec() const;

  friend FeedbackLaw make_feedback(FeedbackKind kind, double slope,
                                   double exponent);

 private:
  FeedbackLaw() = default;

  FeedbackKind kind_ = FeedbackKind::linear;
  double slope_ = 1.0;
  double exponent_ = 1.0;
  double k_low_ = 1.0;
  double K_high_ = 1.0;
};

/// Builds the law and checks continuity, monotonicity, sign and the linear
/// growth bounds on 10^4 points of [-10, 10]. Throws DomainError otherwise.
FeedbackLaw make_feedback(FeedbackKind kind, double slope = 1.0,
                          double exponent = 3.0);

/// "linear[:slope]", "power:p", "saturated:p:slope".
FeedbackLaw parse_feedback(const std::string& spec);

}  // namespace dampsurf
