#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "dampsurf/decay.hpp"
#include "dampsurf/error.hpp"
#include "dampsurf/feedback.hpp"

using namespace dampsurf;

namespace {

// h(y) = 2y with meas_sigma = 4, a_inf = 0, K0 = 2: c = 1/2 and r has slope
// 1/2, so cI + r is the identity and at L = 1 the chain is p(x) = x, q = x/2.
ChainParams unit_params() { return {.meas_sigma = 4.0, .a_inf = 0.0, .K0 = 2.0, .L = 1.0}; }

MonotoneFn linear_h() { return construct_h(parse_feedback("linear")); }

double max_abs_error(const EnvelopeCurve& S, const std::function<double(double)>& exact, double t_max) {
  double err = 0.0;
  for (double t = 0.0; t <= t_max; t += 0.01) err = std::max(err, std::abs(S.at(t) - exact(t)));
  for (std::size_t i = 0; i < S.times().size(); ++i)
    err = std::max(err, std::abs(S.values()[i] - exact(S.times()[i])));
  return err;
}

struct Samples {
  std::vector<double> t, E;
};

Samples sampled(double spacing, int n, const std::function<double(double)>& E) {
  Samples s;
  for (int i = 0; i <= n; ++i) {
    s.t.push_back(i * spacing);
    s.E.push_back(E(i * spacing));
  }
  return s;
}

}  // namespace

TEST_CASE("h majorant") {
  SUBCASE("linear feedback gives h(y) = 2y") {
    const MonotoneFn h = linear_h();
    for (double y : {0.0, 0.25, 1.0, 3.0}) CHECK(h(y) == doctest::Approx(2.0 * y).epsilon(1e-15));
    CHECK(h_majorant_violation(h, parse_feedback("linear"), 10000) <= 1e-15);
  }
  SUBCASE("linear slope k") {
    const FeedbackLaw g = parse_feedback("linear:3");
    CHECK(construct_h(g)(1.0) == doctest::Approx(10.0 / 3.0));
    CHECK(h_majorant_violation(construct_h(g), g, 10000) <= 1e-14);
  }
  SUBCASE("cubic feedback gives h(y) = 2 sqrt(y)") {
    const FeedbackLaw g = parse_feedback("power:3");
    const MonotoneFn h = construct_h(g);
    for (double y : {0.0, 0.04, 0.5, 1.0}) CHECK(h(y) == doctest::Approx(2.0 * std::sqrt(y)).epsilon(1e-15));
    CHECK(h_majorant_violation(h, g, 10000) <= 0.0);
  }
  SUBCASE("every construction vanishes at 0 and is increasing") {
    for (const char* spec : {"linear", "linear:0.2", "power:2", "power:3", "power:5", "saturated:3:2"}) {
      const FeedbackLaw g = parse_feedback(spec);
      for (const MonotoneFn& h : {construct_h(g), construct_h_hull(g)}) {
        CHECK(h(0.0) == 0.0);
        CHECK(h.is_increasing(4.0));
        CHECK(h_majorant_violation(h, g, 10000) <= 1e-12);
      }
    }
  }
  SUBCASE("the hull is concave and close to the closed form") {
    const FeedbackLaw g = parse_feedback("power:3");
    const MonotoneFn hull = construct_h_hull(g);
    const MonotoneFn exact = construct_h(g);
    for (int i = 1; i < 100; ++i) {
      const double y = i / 100.0;
      CHECK(hull(y) <= exact(y) + 1e-9);
      CHECK(hull(y - 0.005) + hull(y + 0.005) <= 2.0 * hull(y) + 1e-12);
    }
    const double s = std::pow(0.5, 0.25);
    CHECK(hull(0.5) >= s * s + std::pow(s, 6) - 1e-12);
    CHECK(hull(0.5) <= 1.1);
  }
  SUBCASE("an undersized h is reported") {
    CHECK(h_majorant_violation(MonotoneFn::linear(1.0), parse_feedback("linear"), 10000) > 0.5);
  }
}

TEST_CASE("monotone functions") {
  CHECK(MonotoneFn::power(2.0, 0.5)(4.0) == 4.0);
  const MonotoneFn tab = MonotoneFn::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 4.0});
  CHECK(tab(0.5) == 0.5);
  CHECK(tab(1.5) == 2.5);
  CHECK(tab(3.0) == 7.0);
  CHECK(tab.is_increasing(5.0));
  CHECK_FALSE(MonotoneFn::composite("flat", [](double) { return 1.0; }).is_increasing(1.0));
  CHECK(invert_increasing([](double x) { return x * x * x; }, 27.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(invert_increasing([](double x) { return x; }, 0.0) == 0.0);
  const double tiny = invert_increasing([](double x) { return x * x; }, 1e-30);
  CHECK(tiny == doctest::Approx(1e-15).epsilon(1e-10));
  CHECK_THROWS_AS(invert_increasing([](double) { return 0.0; }, 1.0), SolverError);
}

TEST_CASE("decay chain") {
  SUBCASE("unit-slope linear chain") {
    const DecayChain chain = build_chain(linear_h(), unit_params());
    CHECK(chain.c == doctest::Approx(0.5));
    CHECK(chain.p(3.0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(chain.q(4.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(chain.q(0.0) == 0.0);
  }
  SUBCASE("constant c on the unit sphere") {
    const ChainParams params{.meas_sigma = 4.0 * std::numbers::pi, .a_inf = 1.0, .K0 = 2.0, .L = 1.0};
    CHECK(chain_constant_c(params) == doctest::Approx(1.0 / (4.0 * std::numbers::pi)).epsilon(1e-15));
  }
  SUBCASE("inversions round-trip") {
    for (const char* spec : {"linear", "power:3", "saturated:2:2"}) {
      const FeedbackLaw g = parse_feedback(spec);
      const ChainParams params{.meas_sigma = 12.5, .a_inf = 1.0, .K0 = 2.0, .L = 0.7};
      const DecayChain chain = build_chain(construct_h(g), params);
      CHECK(chain.q(0.0) == 0.0);
      for (int i = 0; i <= 1000; ++i) {
        const double x = 10.0 * i / 1000.0;
        const double px = chain.p(x);
        CHECK(std::abs(chain.c * px + chain.r(px) - params.L * x) <= 1e-10 * (1.0 + params.L * x));
        const double qx = chain.q(x);
        const double y = x - qx;
        CHECK(std::abs(y + chain.p(y) - x) <= 1e-10 * (1.0 + x));
        CHECK(qx >= 0.0);
        CHECK(qx <= x);
      }
      CHECK(chain.q.is_increasing(10.0));
      CHECK(chain.p.is_increasing(10.0));
    }
  }
  SUBCASE("make_q on a known p") {
    const MonotoneFn q = make_q(MonotoneFn::linear(3.0));
    CHECK(q(8.0) == doctest::Approx(6.0).epsilon(1e-12));
  }
}

TEST_CASE("comparison ODE") {
  SUBCASE("linear q gives an exponential") {
    const EnvelopeCurve S = solve_envelope(MonotoneFn::linear(0.5), 1.0, 10.0, 1e-3);
    CHECK(max_abs_error(S, [](double t) { return std::exp(-t / 2.0); }, 10.0) <= 1e-8);
    CHECK(S.S0() == 1.0);
  }
  SUBCASE("quadratic q gives 1 / (1 + t)") {
    const EnvelopeCurve S = solve_envelope(MonotoneFn::power(1.0, 2.0), 1.0, 10.0, 1e-3);
    CHECK(max_abs_error(S, [](double t) { return 1.0 / (1.0 + t); }, 10.0) <= 1e-8);
  }
  SUBCASE("q = 0 keeps S constant") {
    const EnvelopeCurve S = solve_envelope(MonotoneFn::composite("zero", [](double) { return 0.0; }), 3.0, 5.0, 1e-2);
    for (double v : S.values()) CHECK(v == 3.0);
  }
  SUBCASE("S is nonincreasing and clipped at zero") {
    // q(x) = sqrt(x) reaches zero in finite time.
    const EnvelopeCurve S = solve_envelope(MonotoneFn::power(1.0, 0.5), 1.0, 5.0, 1e-3);
    for (std::size_t i = 1; i < S.values().size(); ++i) {
      CHECK(S.values()[i] <= S.values()[i - 1]);
      CHECK(S.values()[i] >= 0.0);
    }
    CHECK(S.values().back() == 0.0);
  }
  SUBCASE("larger initial values dominate") {
    const DecayChain chain = build_chain(construct_h(parse_feedback("power:3")),
                                         {.meas_sigma = 4.0, .a_inf = 1.0, .K0 = 2.0, .L = 1.0});
    const EnvelopeCurve lo = solve_envelope(chain.q, 1.0, 20.0, 1e-2);
    const EnvelopeCurve hi = solve_envelope(chain.q, 1.5, 20.0, 1e-2);
    for (std::size_t i = 0; i < lo.values().size(); ++i) CHECK(lo.values()[i] <= hi.values()[i]);
  }
  SUBCASE("linear chain matches its exponential") {
    const FeedbackLaw g = parse_feedback("linear:2");
    const ChainParams params{.meas_sigma = 6.0, .a_inf = 2.0, .K0 = 1.5, .L = 0.8};
    const DecayChain chain = build_chain(construct_h(g), params);
    // p(x) = gamma x with gamma = L / (c + slope(r)), q(x) = gamma / (1 + gamma) x.
    const double slope_r = construct_h(g)(1.0) / params.meas_sigma;
    const double gamma = params.L / (chain.c + slope_r);
    const EnvelopeCurve S = solve_envelope(chain.q, 2.0, 10.0, 1e-3);
    for (double t = 0.0; t <= 10.0; t += 0.25) {
      const double exact = 2.0 * std::exp(-gamma / (1.0 + gamma) * t);
      CHECK(std::abs(S.at(t) - exact) <= 1e-6 * exact);
    }
  }
}

TEST_CASE("closed-form envelopes") {
  SUBCASE("exponential") {
    const ClosedFormEnvelope b = closed_form_envelope_exponential(1.0, 0.5, 4.0);
    CHECK(b(2.0) == doctest::Approx(4.0 * std::exp(-1.0)).epsilon(1e-15));
    CHECK(b(2.0) == doctest::Approx(1.4715).epsilon(1e-4));
    CHECK(b(0.0) == 4.0);
    CHECK(closed_form_envelope_exponential(2.5, 0.1, 3.0)(0.0) == doctest::Approx(7.5));
  }
  SUBCASE("polynomial, p = 3") {
    const ClosedFormEnvelope b = closed_form_envelope_polynomial(1.0, 3.0, 1.0);
    CHECK(b(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    for (double t : {0.0, 0.3, 2.0, 7.0}) CHECK(b(t) == doctest::Approx(1.0 / (1.0 + 2.0 * t)).epsilon(1e-14));
    CHECK(closed_form_envelope_polynomial(3.0, 5.0, 2.0)(0.0) == doctest::Approx(6.0).epsilon(1e-14));
  }
  SUBCASE("the polynomial form solves S' = -2 S^((p+1)/2)") {
    for (double p : {2.0, 3.0, 5.0}) {
      const ClosedFormEnvelope b = closed_form_envelope_polynomial(1.0, p, 1.7);
      // Substitution: central difference of the bound against the right side.
      for (double t : {0.1, 1.0, 4.0}) {
        const double dS = (b(t + 1e-5) - b(t - 1e-5)) / 2e-5;
        CHECK(dS == doctest::Approx(-2.0 * std::pow(b(t), (p + 1.0) / 2.0)).epsilon(1e-8));
      }
      const EnvelopeCurve S = solve_envelope(MonotoneFn::power(2.0, (p + 1.0) / 2.0), 1.7, 10.0, 1e-3);
      for (double t = 0.0; t <= 10.0; t += 0.5) CHECK(std::abs(S.at(t) - b(t)) <= 1e-8);
    }
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(closed_form_envelope_polynomial(1.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(closed_form_envelope_polynomial(1.0, 0.5, 1.0), DomainError);
    CHECK_THROWS_AS(closed_form_envelope_exponential(1.0, 0.0, 1.0), DomainError);
  }
}

TEST_CASE("discrete comparison on a halving sequence") {
  const DecayChain chain = build_chain(linear_h(), unit_params());
  std::vector<double> s;
  for (int m = 0; m <= 12; ++m) s.push_back(std::ldexp(1.0, -m));
  CHECK(sequence_condition(s, chain.p));
  const EnvelopeCurve S = solve_envelope(chain.q, s[0], 12.0, 1e-3);
  for (int m = 0; m <= 12; ++m) {
    CHECK(s[m] <= S.at(m) + 1e-12);
    CHECK(s[m] <= std::exp(-m / 2.0));
  }
}

TEST_CASE("certification") {
  const CertifyInputs inputs{.h = linear_h(), .area = 4.0, .a_inf = 0.0, .K0 = 2.0, .dt_ode = 1e-3};
  SUBCASE("halving energy certifies") {
    const Samples x = sampled(0.25, 40, [](double t) { return std::exp2(-t); });
    const CertificationReport r = certify(x.t, x.E, inputs, 1.0);
    CHECK(r.sequence_ok);
    CHECK(r.envelope_ok);
    CHECK(r.sequence_below_envelope);
    CHECK(r.fitted_L > 0.0);
    CHECK(r.periods == 10);
    CHECK(r.T0 == 1.0);
    CHECK(r.meas_sigma == 4.0);
    CHECK(r.sequence.size() == 11);
    CHECK(r.max_envelope_ratio <= 1.0);
    // The fitted L holds and 1% more does not.
    const MonotoneFn h = linear_h();
    ChainParams params{.meas_sigma = 4.0, .a_inf = 0.0, .K0 = 2.0, .L = r.fitted_L};
    CHECK(sequence_condition(r.sequence, build_chain(h, params).p));
    params.L = r.fitted_L * 1.02;
    CHECK_FALSE(sequence_condition(r.sequence, build_chain(h, params).p));
    const EnvelopeCurve S = certified_envelope(r, inputs);
    CHECK(S.S0() == 1.0);
    CHECK(S.t_max() >= 10.0);
  }
  SUBCASE("increasing energy fails") {
    const Samples x = sampled(0.5, 20, [](double t) { return 1.0 + t; });
    const CertificationReport r = certify(x.t, x.E, inputs, 1.0);
    CHECK_FALSE(r.sequence_ok);
    CHECK(r.fitted_L == 0.0);
    CHECK(fit_L(r.sequence, inputs.h, {.meas_sigma = 4.0}) == 0.0);
  }
  SUBCASE("stalled energy fails") {
    const Samples x = sampled(0.5, 20, [](double t) { return t < 4.0 ? std::exp(-t) : std::exp(-4.0); });
    CHECK_FALSE(certify(x.t, x.E, inputs, 1.0).sequence_ok);
  }
  SUBCASE("zero energy certifies trivially") {
    const Samples x = sampled(0.5, 20, [](double) { return 0.0; });
    const CertificationReport r = certify(x.t, x.E, inputs, 1.0);
    CHECK(r.sequence_ok);
    CHECK(r.envelope_ok);
    CHECK(std::isinf(r.fitted_L));
  }
  SUBCASE("T0 snaps to the sample grid") {
    const Samples x = sampled(0.1, 100, [](double t) { return std::exp(-t); });
    const CertificationReport r = certify(x.t, x.E, inputs, 1.23);
    CHECK(r.T0 == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(r.periods == 8);
  }
  SUBCASE("too short") {
    const Samples x = sampled(0.5, 5, [](double t) { return std::exp(-t); });
    CHECK_THROWS_WITH_AS(certify(x.t, x.E, inputs, 1.0), doctest::Contains("too short"), DomainError);
  }
  SUBCASE("accepted sequences sit below the envelope") {
    // Any sequence certify accepts satisfies the discrete comparison.
    for (double rate : {0.2, 0.7, 1.5}) {
      const Samples x = sampled(0.5, 40, [rate](double t) { return 3.0 * std::exp(-rate * t) * (1.0 + 0.1 * std::cos(5.0 * t)); });
      const CertificationReport r = certify(x.t, x.E, inputs, 2.0);
      if (!r.sequence_ok) continue;
      CHECK(r.sequence_below_envelope);
    }
  }
}
