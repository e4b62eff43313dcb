#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include "fnls/errors.hpp"
#include "fnls/params.hpp"
#include "fnls/symbols.hpp"

namespace fnls {

enum class Branch { upper, lower };

inline double branch_sign(Branch b) { return b == Branch::upper ? 1.0 : -1.0; }

/// Raised when the polar equation has no sign change, i.e. the mass is above the
/// range where the root exists.
class RootBracketError : public std::runtime_error {
 public:
  RootBracketError(double g_lo, double g_hi)
      : std::runtime_error("no sign change of the polar root equation: g(lo) = " + std::to_string(g_lo) +
                           ", g(hi) = " + std::to_string(g_hi)),
        g_lo(g_lo), g_hi(g_hi) {}
  double g_lo, g_hi;
};

struct RootResult {
  Branch sign = Branch::upper;
  std::complex<double> y;  ///< root in the original variable
  double phi = 0.0;        ///< polar angle of y + 1
  double r = 0.0;          ///< modulus of y + 1
  double residual = 0.0;   ///< |f(y)|
  double bracket = 0.0;    ///< final bisection bracket width
  int bisections = 0;
  ModelParams params;
};

/// (1+y)^s - s y - 1 + c, with c = s(s-1)/2 kappa^2 theta.
inline std::complex<double> dispersion_f1(std::complex<double> y, double s, double c) {
  return symbol_n_complex(y, s) + c;
}

/// Derivative s((1+y)^{s-1} - 1), accurate for small y.
inline std::complex<double> dispersion_f1_prime(std::complex<double> y, double s) {
  if (std::abs(y) <= 0.1) return s * ((s - 1.0) * y + detail::binomial_tail(y, s - 1.0));
  return s * (std::pow(1.0 + y, s - 1.0) - 1.0);
}

/// Translated second family y^s + s y + s - 1 + c on the closed right half-plane.
inline std::complex<double> dispersion_f2_shifted(std::complex<double> y, double s, double c) {
  return std::pow(y, s) + s * y + (s - 1.0 + c);
}

/// Modulus of y + 1 on the zero set of the imaginary part, (s sin phi / sin(s phi))^{1/(s-1)}.
inline double polar_radius(double phi, double s) {
  return std::pow(s * std::sin(phi) / std::sin(s * phi), 1.0 / (s - 1.0));
}

namespace detail {

/// y = r(phi) e^{i phi} - 1 with the small-phi cancellation handled.
inline std::complex<double> polar_point(double phi, double s, double sign) {
  const double ratio = s * std::sin(phi) / std::sin(s * phi);
  const double rm1 = std::expm1(std::log(ratio) / (s - 1.0));
  const double r = 1.0 + rm1;
  // e^{i phi} - 1 = -2 sin^2(phi/2) + i sin(phi)
  const double h = std::sin(0.5 * phi);
  return {rm1 + r * (-2.0 * h * h), sign * r * std::sin(phi)};
}

}  // namespace detail

/// Root of f1 in the upper (or lower) half-plane by bisection in the polar angle
/// followed by complex Newton polishing.
inline RootResult find_root_f1(Branch sign, const ModelParams& p, double theta) {
  require(!p.validation, "root finding needs s < 2");
  require(theta > 0.0, "multiplier must be positive");
  const double s = p.s;
  const double c = p.root_shift(theta);
  const double sg = branch_sign(sign);
  auto g = [&](double phi) { return dispersion_f1(detail::polar_point(phi, s, sg), s, c).real(); };

  double lo = 1e-6;
  double hi = 0.5 * kPi - 1e-6;
  double glo = g(lo);
  double ghi = g(hi);
  // The equation is c > 0 at phi = 0; a tiny shift can leave the root below the default bracket.
  while (glo <= 0.0 && lo > 1e-300) {
    lo *= 1e-3;
    glo = g(lo);
  }
  if (!(glo > 0.0 && ghi < 0.0)) throw RootBracketError(glo, ghi);

  RootResult res;
  res.sign = sign;
  res.params = p;
  while (hi - lo > 1e-14 * std::max(1.0, hi) && res.bisections < 400) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) > 0.0 ? lo : hi) = mid;
    ++res.bisections;
  }
  res.bracket = hi - lo;
  const double phi = 0.5 * (lo + hi);
  std::complex<double> y = detail::polar_point(phi, s, sg);
  for (int it = 0; it < 6; ++it) {
    const auto f = dispersion_f1(y, s, c);
    const auto step = f / dispersion_f1_prime(y, s);
    y -= step;
    if (std::abs(step) <= 1e-17 * std::abs(y)) break;
  }
  res.y = y;
  res.r = std::abs(1.0 + y);
  res.phi = sg * std::arg(1.0 + y);
  res.residual = std::abs(dispersion_f1(y, s, c));
  return res;
}

/// Winding number of f around the boundary of [x0,x1] x [y0,y1], traversed counter-clockwise.
template <class F>
double winding_number(F&& f, double x0, double x1, double y0, double y1, int per_side = 4000) {
  std::complex<double> corners[5] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
  double total = 0.0;
  std::complex<double> prev = f(corners[0]);
  for (int side = 0; side < 4; ++side) {
    const auto a = corners[side];
    const auto b = corners[side + 1];
    for (int k = 1; k <= per_side; ++k) {
      const auto z = a + (b - a) * (static_cast<double>(k) / per_side);
      const auto cur = f(z);
      double d = std::arg(cur / prev);
      total += d;
      prev = cur;
    }
  }
  return total / (2.0 * kPi);
}

struct RootlessReport {
  Branch sign = Branch::upper;
  double min_axis_real = 0.0;      ///< min of Re f2 on the real axis, |y| in [0, radius]
  double min_offaxis_imag = 0.0;   ///< min of +-Im f2 / |y| for phi in (0, pi/2]
  double min_imag_quarter = 0.0;   ///< min of +-Im f2 at phi = pi/4
  double winding = 0.0;            ///< raw contour winding of f2 around the test rectangle
  int winding_count = 0;
  bool rootless = false;
};

/// Polar sampling plus an argument-principle count for the second family on its
/// translated quarter plane.
inline RootlessReport verify_f2_rootless(Branch sign, const ModelParams& p, double theta,
                                         double radius = 10.0, int radial = 2001, int angular = 401) {
  require(!p.validation, "root analysis needs s < 2");
  const double s = p.s;
  const double c = p.root_shift(theta);
  require(s - 1.0 + c > 0.0, "constant term of the second family must be positive");
  const double sg = branch_sign(sign);
  auto f = [&](std::complex<double> y) { return dispersion_f2_shifted(y, s, c); };

  RootlessReport rep;
  rep.sign = sign;
  rep.min_axis_real = std::numeric_limits<double>::infinity();
  rep.min_offaxis_imag = std::numeric_limits<double>::infinity();
  rep.min_imag_quarter = std::numeric_limits<double>::infinity();
  for (int i = 0; i < radial; ++i) {
    const double rho = radius * static_cast<double>(i) / (radial - 1);
    rep.min_axis_real = std::min(rep.min_axis_real, f({rho, 0.0}).real());
    if (rho == 0.0) continue;
    for (int j = 1; j < angular; ++j) {
      const double phi = 0.5 * kPi * static_cast<double>(j) / (angular - 1);
      const auto v = f(std::polar(rho, sg * phi));
      rep.min_offaxis_imag = std::min(rep.min_offaxis_imag, sg * v.imag() / rho);
    }
    const auto q = f(std::polar(rho, sg * 0.25 * kPi));
    rep.min_imag_quarter = std::min(rep.min_imag_quarter, sg * q.imag());
  }
  if (sign == Branch::upper) {
    rep.winding = winding_number(f, 0.0, radius, 0.0, radius);
  } else {
    rep.winding = winding_number(f, 0.0, radius, -radius, 0.0);
  }
  rep.winding_count = static_cast<int>(std::lround(rep.winding));
  rep.rootless = rep.winding_count == 0 && rep.min_axis_real > 0.0 && rep.min_offaxis_imag > 0.0;
  return rep;
}

}  // namespace fnls
