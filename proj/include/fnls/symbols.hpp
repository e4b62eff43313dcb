#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <complex>
#include <string>

#include "fnls/errors.hpp"
#include "fnls/params.hpp"

namespace fnls {

namespace detail {

/// (1+y)^s - 1 - s y by its binomial series; valid for |y| < 1, used for |y| <= 0.1.
template <class T>
T binomial_tail(T y, double s) {
  T term = y * y * (0.5 * s * (s - 1.0));
  T sum = term;
  for (int k = 2; k < 80; ++k) {
    term *= y * ((s - k) / (k + 1.0));
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

inline void check_order(double s) { require(s > 1.0 && s <= 2.0, "s must lie in (1, 2]"); }

}  // namespace detail

/// |xi+1|^s - s xi - 1, accurate near xi = 0.
inline double symbol_n(double xi, double s) {
  detail::check_order(s);
  if (std::abs(xi) <= 0.1) return detail::binomial_tail(xi, s);
  return std::pow(std::abs(xi + 1.0), s) - s * xi - 1.0;
}

/// Principal-branch continuation (1+y)^s - s y - 1 for complex y (cut along y <= -1).
inline std::complex<double> symbol_n_complex(std::complex<double> y, double s) {
  if (std::abs(y) <= 0.1) return detail::binomial_tail(y, s);
  return std::pow(1.0 + y, s) - s * y - 1.0;
}

/// Rescaled symbol 2 n(kappa xi)/(s(s-1) kappa^2).
inline double symbol_nN(double xi, const ModelParams& p) {
  const double k = p.kappa;
  return 2.0 * symbol_n(k * xi, p.s) / (p.s * (p.s - 1.0) * k * k);
}

/// |xi|^s - 2 beta xi.
inline double symbol_mbeta(double xi, const ModelParams& p) {
  return std::pow(std::abs(xi), p.s) - 2.0 * p.beta * xi;
}

struct StationaryPoint {
  double xi;
  double value;
};

/// Minimizer of the symbol |xi|^s - 2 beta xi and its value -(xi*)^s (s-1).
inline StationaryPoint stationary_point(const ModelParams& p) {
  if (!(p.beta > 0.0)) throw DomainError("stationary point is degenerate at beta = 0");
  const double xs = std::pow(2.0 * p.beta / p.s, 1.0 / (p.s - 1.0));
  return {xs, -std::pow(xs, p.s) * (p.s - 1.0)};
}

struct LowerBoundReport {
  double constant = 0.0;  ///< C(A) = (A+1) c1^s
  double c1 = 0.0;
  double min_margin = 0.0;  ///< min over samples of n - A|xi|^s - (1/2)(1-A)|xi|^s + C
  std::size_t samples = 0;
  bool verified = false;
};

/// Checks n(xi) - A|xi|^s >= (1/2)(1-A)|xi|^s - C(A) on a dense sample of |xi| <= 10 c1(A).
inline LowerBoundReport check_lower_bound(double A, double s, std::size_t samples = 400001) {
  detail::check_order(s);
  require(A >= 0.0 && A < 1.0, "lower-bound parameter A must lie in [0, 1)");
  LowerBoundReport r;
  r.c1 = std::pow(std::pow(2.0, s + 3.0) / (1.0 - A), 1.0 / (s - 1.0));
  r.constant = (A + 1.0) * std::pow(r.c1, s);
  r.samples = samples;
  const double span = 10.0 * r.c1;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples; ++i) {
    const double xi = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double a = std::pow(std::abs(xi), s);
    const double margin = symbol_n(xi, s) - A * a - 0.5 * (1.0 - A) * a + r.constant;
    worst = std::min(worst, margin);
  }
  r.min_margin = worst;
  r.verified = worst >= 0.0;
  return r;
}

}  // namespace fnls
