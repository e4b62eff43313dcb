#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "fnls/errors.hpp"

namespace fnls {

inline constexpr double kPi = std::numbers::pi;
inline const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

/// Mass of the unit local ground state, (s+1)^{1/s} B(1/s, 1/2) / s.
inline double local_unit_mass(double s) {
  return std::pow(s + 1.0, 1.0 / s) * std::beta(1.0 / s, 0.5) / s;
}

/// Normalized mass s0 = (s(s-1)/2)^{-1/s}.
inline double normalized_mass(double s) { return std::pow(0.5 * s * (s - 1.0), -1.0 / s); }

/// Limiting multiplier (s(s-1)/2 rho0^s)^{-2/(2-s)} for a given unit mass rho0.
inline double limit_multiplier(double s, double rho0) {
  return std::pow(0.5 * s * (s - 1.0) * std::pow(rho0, s), -2.0 / (2.0 - s));
}

/// Exponent of N in the algebraic tail coefficient, s(2+s)/(2-s).
inline double algebraic_mass_exponent(double s) { return s * (2.0 + s) / (2.0 - s); }

/// Exponential-tail kernel constant sqrt(pi/(2 lambda)).
inline double kernel_exp_constant(double lambda) { return std::sqrt(std::numbers::pi / (2.0 * lambda)); }

/// Envelope of the algebraic kernel tail as derived from the branch-cut integral:
/// s^2 Gamma(s) sin(pi s/2) / ((s-1) sqrt(2 pi)).
inline double kernel_alg_envelope(double s) {
  return s * s * std::tgamma(s) * std::sin(0.5 * std::numbers::pi * s) /
         ((s - 1.0) * std::sqrt(2.0 * std::numbers::pi));
}

/// Modulus of the printed algebraic constant |s i^{s+1} + (-i)^{s+1}| Gamma(s) / (2 sqrt(2 pi)(s-1)).
inline double kernel_alg_envelope_printed(double s) {
  const double a = 0.5 * std::numbers::pi * (s + 1.0);
  const double re = s * std::cos(a) + std::cos(a);
  const double im = s * std::sin(a) - std::sin(a);
  return std::hypot(re, im) * std::tgamma(s) / (2.0 * std::sqrt(2.0 * std::numbers::pi) * (s - 1.0));
}

/// Parameter bundle (s, beta, N) with its derived scalars.
struct ModelParams {
  double s = 1.5;
  double beta = 0.0;
  double N = 0.1;
  double xi_star = 0.0;  ///< (2 beta/s)^{1/(s-1)}
  double kappa = 0.0;    ///< N^{s/(2-s)}
  double s0 = 0.0;
  double lambda = 0.0;
  double rho0 = 0.0;
  double mass_threshold = std::numeric_limits<double>::quiet_NaN();
  bool validation = false;  ///< s = 2; only symbol identities and local oracles are meaningful

  static ModelParams make(double s, double beta, double N, bool allow_validation = false) {
    require(std::isfinite(s) && s > 1.0 && s <= 2.0, "s must lie in (1, 2]");
    require(s < 2.0 || allow_validation, "s = 2 is accepted only in validation mode");
    require(std::isfinite(beta) && beta >= 0.0, "beta must be nonnegative");
    require(std::isfinite(N) && N > 0.0, "mass N must be positive");
    ModelParams p;
    p.s = s;
    p.beta = beta;
    p.N = N;
    p.validation = s == 2.0;
    p.xi_star = beta > 0.0 ? std::pow(2.0 * beta / s, 1.0 / (s - 1.0)) : 0.0;
    p.s0 = normalized_mass(s);
    p.rho0 = local_unit_mass(s);
    if (p.validation) {
      p.kappa = std::numeric_limits<double>::quiet_NaN();
      p.lambda = std::numeric_limits<double>::quiet_NaN();
    } else {
      p.kappa = std::pow(N, s / (2.0 - s));
      p.lambda = limit_multiplier(s, p.rho0);
    }
    return p;
  }

  ModelParams with_mass(double n) const {
    ModelParams p = make(s, beta, n, validation);
    p.mass_threshold = mass_threshold;
    return p;
  }

  /// Constant term s(s-1)/2 kappa^2 theta of the rescaled dispersion relation.
  double root_shift(double theta) const { return 0.5 * s * (s - 1.0) * kappa * kappa * theta; }
};

/// Power-of-two grid length near 57/sqrt(lambda), wide enough that the profile tail
/// e^{-sqrt(lambda) L/2} is below double precision.
inline double default_length(double s) {
  const double lam = limit_multiplier(s, local_unit_mass(s));
  return std::exp2(std::round(std::log2(57.0 / std::sqrt(lam))));
}

}  // namespace fnls
