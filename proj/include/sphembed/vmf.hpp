#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "sphembed/sphere.hpp"

namespace sphembed {

// von Mises-Fisher machinery: Bessel function, normalization constant,
// log-density, sin-power integrals, and a quadrature oracle for the
// normalizer. All quantities are kept in log space where they can underflow.

namespace detail {

// Adaptive Simpson quadrature with an absolute/relative mixed tolerance.
inline double simpson_step(const std::function<double(double)>& f, double a, double b,
                           double fa, double fm, double fb, double whole, double tol,
                           int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int max_depth = 48) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace detail

// log Gamma(x) for x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: requires x > 0");
  return std::lgamma(x);
}

// Modified Bessel function of the first kind I_r(kappa), r >= 0, kappa >= 0,
// by the ascending power series
//   sum_m (kappa/2)^{2m+r} / (m! Gamma(m+r+1)),
// truncated once a term falls below 1e-16 of the running sum. The model only
// ever needs small kappa, where the series converges in a handful of terms.
inline double bessel_i(double r, double kappa) {
  if (r < 0.0 || kappa < 0.0) throw std::domain_error("bessel_i: requires r >= 0 and kappa >= 0");
  if (kappa == 0.0) return r == 0.0 ? 1.0 : 0.0;
  const double half = 0.5 * kappa;
  // leading term (kappa/2)^r / Gamma(r+1)
  double term = std::exp(r * std::log(half) - log_gamma(r + 1.0));
  double sum = term;
  const double h2 = half * half;
  for (int m = 0; m < 1000; ++m) {
    term *= h2 / ((m + 1.0) * (m + 1.0 + r));
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

// log c_p(kappa) with c_p(kappa) = kappa^{p/2-1} / ((2 pi)^{p/2} I_{p/2-1}(kappa)).
// kappa = 0 (the uniform-sphere limit) is out of domain.
inline double log_norm_const(int p, double kappa) {
  if (p < 2) throw std::domain_error("log_norm_const: requires p >= 2");
  if (!(kappa > 0.0)) throw std::domain_error("log_norm_const: requires kappa > 0");
  const double r = 0.5 * p - 1.0;
  return r * std::log(kappa) - (0.5 * p) * std::log(2.0 * M_PI) - std::log(bessel_i(r, kappa));
}

struct VmfParams {
  UnitVector<double> mu;  // mean direction
  double kappa = 1.0;     // concentration, >= 0
  int p = 0;              // ambient dimension

  VmfParams(UnitVector<double> mean, double concentration)
      : mu(std::move(mean)), kappa(concentration), p(static_cast<int>(mu.dim())) {
    if (kappa < 0.0) throw std::invalid_argument("VmfParams: kappa must be >= 0");
  }
};

// log f(x; mu, kappa) = log c_p(kappa) + kappa * (x . mu)
inline double vmf_log_density(const VmfParams& params, const UnitVector<double>& x) {
  if (static_cast<int>(x.dim()) != params.p)
    throw std::invalid_argument("vmf_log_density: dimension mismatch");
  return log_norm_const(params.p, params.kappa) + params.kappa * dot<double>(x.span(), params.mu.span());
}

// J_p = integral of sin^p over [0, pi] = sqrt(pi) Gamma((1+p)/2) / Gamma(1+p/2).
inline double sin_power_integral(int p) {
  if (p < 0) throw std::domain_error("sin_power_integral: requires p >= 0");
  return std::exp(0.5 * std::log(M_PI) + log_gamma(0.5 * (1.0 + p)) - log_gamma(1.0 + 0.5 * p));
}

// Surface integral Z(p, kappa) of exp(kappa * cos theta_1) over S^{p-1},
// computed by 1-D quadrature of the polar-angle integral times the closed-form
// area factor of the remaining angles:
//   Z = 2 pi^{(p-1)/2} / Gamma((p-1)/2) * integral_0^pi exp(kappa cos t) sin^{p-2} t dt.
// Deliberately shares nothing with bessel_i / log_norm_const so the two can be
// checked against each other: exp(log c_p(kappa)) * Z(p, kappa) == 1.
inline double numeric_normalization_oracle(int p, double kappa) {
  if (p < 2) throw std::domain_error("numeric_normalization_oracle: requires p >= 2");
  if (!(kappa > 0.0)) throw std::domain_error("numeric_normalization_oracle: requires kappa > 0");
  const double area_factor =
      2.0 * std::exp(0.5 * (p - 1.0) * std::log(M_PI) - log_gamma(0.5 * (p - 1.0)));
  auto integrand = [p, kappa](double t) {
    const double s = std::sin(t);
    const double base = (p == 2) ? 1.0 : std::pow(s, p - 2.0);
    return std::exp(kappa * std::cos(t)) * base;
  };
  const double integral = detail::adaptive_simpson(integrand, 0.0, M_PI, 1e-12);
  return area_factor * integral;
}

}  // namespace sphembed
