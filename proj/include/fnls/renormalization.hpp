#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>

#include "fnls/errors.hpp"
#include "fnls/params.hpp"
#include "fnls/solvers.hpp"
#include "fnls/spectral.hpp"
#include "fnls/symbols.hpp"

namespace fnls {

// ---- multipliers ----------------------------------------------------------------

enum class MultiplierKind { gamma, eta, theta };

/// The three multiplier parametrizations: gamma (traveling-wave equation), eta (beta-free
/// equation at mass N) and theta (normalized equation).
struct MultiplierTriple {
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double eta = 0.0;
  double theta = 0.0;
  ModelParams params;
};

inline MultiplierTriple convert_multipliers(MultiplierKind kind, double value, const ModelParams& p) {
  const double s = p.s;
  const double half = 0.5 * s * (s - 1.0);
  MultiplierTriple t;
  t.params = p;
  const bool moving = p.beta > 0.0;
  const double xs = moving ? std::pow(p.xi_star, s) : 0.0;
  switch (kind) {
    case MultiplierKind::theta:
      t.theta = value;
      t.eta = half * value;
      break;
    case MultiplierKind::eta:
      t.eta = value;
      t.theta = value / half;
      break;
    case MultiplierKind::gamma:
      require(moving, "gamma conversions need beta > 0");
      t.gamma = value;
      t.eta = value / xs - (s - 1.0);
      t.theta = t.eta / half;
      break;
  }
  if (moving && kind != MultiplierKind::gamma) t.gamma = xs * (t.eta + s - 1.0);
  return t;
}

/// theta from gamma in the closed form (2/s)((s-1)^{-1}(2 beta/s)^{-s/(s-1)} gamma - 1).
inline double theta_from_gamma(double gamma, const ModelParams& p) {
  require(p.beta > 0.0, "gamma conversions need beta > 0");
  const double s = p.s;
  return (2.0 / s) * (std::pow(2.0 * p.beta / s, -s / (s - 1.0)) * gamma / (s - 1.0) - 1.0);
}

// ---- rescalings by grid metadata -----------------------------------------------

/// Same samples on a grid of length c L (the function x -> u(x/c)).
inline Profile stretch(const Profile& u, double c) {
  require(c > 0.0, "stretch factor must be positive");
  return Profile(make_grid(u.grid().length() * c, u.size()), u.values(), u.gauge());
}

/// s0^{1/2} N^{-1/(2-s)} S(x/kappa).
inline Profile scale_S_to_R(const Profile& s_prof, const ModelParams& p) {
  require(!p.validation, "mass scaling needs s < 2");
  const double amp = std::sqrt(p.s0) * std::pow(p.N, -1.0 / (2.0 - p.s));
  return amp * stretch(s_prof, p.kappa);
}

inline Profile scale_R_to_S(const Profile& r_prof, const ModelParams& p) {
  require(!p.validation, "mass scaling needs s < 2");
  const double amp = std::sqrt(p.s0) * std::pow(p.N, -1.0 / (2.0 - p.s));
  return (1.0 / amp) * stretch(r_prof, 1.0 / p.kappa);
}

/// Length near `target` for the normalized-problem grid such that the reduced-problem grid
/// (length divided by kappa) is a multiple of 2 pi.
inline double lattice_length(double target, const ModelParams& p) {
  const double unit = 2.0 * kPi * p.kappa;
  return unit * std::max(1.0, std::round(target / unit));
}

namespace detail {

inline long lattice_shift(double length) {
  const double k = length / (2.0 * kPi);
  const double kr = std::round(k);
  if (std::abs(k - kr) > 1e-9 * std::max(1.0, k)) {
    throw DomainError("grid length " + std::to_string(length) +
                      " is not a multiple of 2 pi; the modulation would leave the frequency lattice");
  }
  return static_cast<long>(kr);
}

/// Moves every Fourier mode by `shift` lattice steps onto a grid with `points` nodes and the
/// same length, multiplying by `factor`. Modes landing outside the band are dropped.
inline Profile shift_modes(const Profile& u, long shift, std::size_t points, cplx factor) {
  const auto& g = u.grid();
  auto target = make_grid(g.length(), points);
  const CVec c = spectrum(u);
  CVec d(points);
  const double scale = static_cast<double>(points) / static_cast<double>(g.size());
  const auto half_out = static_cast<long>(points / 2);
  for (std::size_t k = 0; k < c.size(); ++k) {
    const long m = static_cast<long>(g.mode(k)) + shift;
    if (m < -half_out || m >= half_out) continue;
    d[target->slot(m)] = factor * scale * c[k];
  }
  return from_spectrum(target, d);
}

inline std::size_t modulated_points(std::size_t m, long k0) {
  std::size_t out = m;
  while (out < m + 2 * static_cast<std::size_t>(std::abs(k0))) out *= 2;
  return out;
}

}  // namespace detail

/// (xi*)^{1/2} e^{i xi* x} S(xi* x) on the grid of length L/xi*, refined so that the shifted
/// spectrum fits. Needs L in 2 pi Z.
inline Profile tau_beta(const Profile& s_prof, const ModelParams& p) {
  require(p.beta > 0.0, "tau_beta needs beta > 0");
  const long k0 = detail::lattice_shift(s_prof.grid().length());
  const Profile squeezed = stretch(s_prof, 1.0 / p.xi_star);
  const double sign = (k0 % 2 == 0) ? 1.0 : -1.0;
  return detail::shift_modes(squeezed, k0, detail::modulated_points(s_prof.size(), k0),
                             sign * std::sqrt(p.xi_star));
}

/// Inverse of tau_beta, S(y) = (xi*)^{-1/2} e^{-i y} Q(y/xi*), returned with `points` nodes.
inline Profile tau_beta_inverse(const Profile& q_prof, const ModelParams& p, std::size_t points) {
  require(p.beta > 0.0, "tau_beta needs beta > 0");
  const Profile widened = stretch(q_prof, p.xi_star);
  const long k0 = detail::lattice_shift(widened.grid().length());
  const double sign = (k0 % 2 == 0) ? 1.0 : -1.0;
  return detail::shift_modes(widened, -k0, points, sign / std::sqrt(p.xi_star));
}

/// Traveling-wave minimizer to the normalized profile through the two elementary maps.
inline Profile full_map_Q_to_R(const Profile& q_prof, const ModelParams& p, std::size_t points) {
  return scale_S_to_R(tau_beta_inverse(q_prof, p, points), p);
}

/// The same map written as one formula with demodulation e^{-i xi* x / kappa}; it agrees
/// with full_map_Q_to_R when xi* = 1.
inline Profile full_map_direct(const Profile& q_prof, const ModelParams& p, std::size_t points) {
  require(p.beta > 0.0 && !p.validation, "the direct map needs beta > 0 and s < 2");
  const double amp = std::pow(0.5 * p.s * (p.s - 1.0), -1.0 / (2.0 * p.s)) * std::pow(p.N, -1.0 / (2.0 - p.s)) /
                     std::sqrt(p.xi_star);
  const Profile widened = stretch(q_prof, p.kappa * p.xi_star);
  // e^{-i xi* x/kappa} = lattice mode -k with k = xi* L_R / (2 pi kappa)
  const double k = p.xi_star * widened.grid().length() / (2.0 * kPi * p.kappa);
  const long kr = std::lround(k);
  if (std::abs(k - static_cast<double>(kr)) > 1e-9 * std::max(1.0, k)) {
    throw DomainError("direct map demodulation is off the frequency lattice");
  }
  const double sign = (kr % 2 == 0) ? 1.0 : -1.0;
  return detail::shift_modes(widened, -kr, points, sign * amp);
}

// ---- gauge ------------------------------------------------------------------------

struct GaugeResult {
  Profile profile;
  double shift = 0.0;  ///< input(x) = e^{i phase} output(x - shift)
  double phase = 0.0;
};

/// Translates the circular mass centroid to 0 and rotates the zero mode onto the positive axis.
inline GaugeResult gauge_fix(const Profile& u) {
  const double m = mass(u);
  require(m > 0.0, "cannot gauge-fix a zero profile");
  const auto& g = u.grid();
  const double L = g.length();
  auto centroid = [&](const Profile& v) {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) acc += std::norm(v[j]) * std::polar(1.0, 2.0 * kPi * g.nodes()[j] / L);
    return std::arg(acc) * L / (2.0 * kPi);
  };
  double shift = centroid(u);
  Profile v = translate(u, -shift);
  const double refine = centroid(v);
  v = translate(v, -refine);
  shift += refine;

  cplx zero = 0.0;
  double total = 0.0;
  for (const auto& z : v.values()) {
    zero += z;
    total += std::abs(z);
  }
  require(std::abs(zero) > 1e-12 * total, "zero Fourier mode vanishes; phase is undefined");
  const double phase = std::arg(zero);
  v = std::polar(1.0, -phase) * v;
  return {v.with_gauge(Gauge::fixed), shift, phase};
}

/// Applies the symmetry x -> e^{i phase} u(x - shift).
inline Profile apply_symmetry(const Profile& u, double shift, double phase) {
  return std::polar(1.0, phase) * translate(u, shift);
}

// ---- energies tied together by the maps -----------------------------------------

/// 1/2 <u, n(D) u> - 1/(2s+2) int |u|^{2s+2}.
inline double reduced_energy(const Profile& u, const ModelParams& p) {
  return make_functional(Problem::reduced, u.grid_ptr(), p).energy(u);
}

/// Same functional with n_N.
inline double rescaled_energy(const Profile& u, const ModelParams& p) {
  return make_functional(Problem::rescaled, u.grid_ptr(), p).energy(u);
}

/// 1/2 <u, |D|^s u> - beta <u, D u> - 1/(2s+2) int |u|^{2s+2}.
inline double traveling_energy(const Profile& u, const ModelParams& p) {
  return make_functional(Problem::traveling, u.grid_ptr(), p).energy(u);
}

}  // namespace fnls
