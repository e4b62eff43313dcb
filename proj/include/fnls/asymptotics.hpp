#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "fnls/errors.hpp"
#include "fnls/kernel.hpp"
#include "fnls/params.hpp"
#include "fnls/renormalization.hpp"
#include "fnls/solvers.hpp"
#include "fnls/spectral.hpp"

namespace fnls {

// ---- small fitting helpers -------------------------------------------------------

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;  ///< max |y - fit|
  std::size_t samples = 0;
};

/// Least-squares line through (x, y).
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "line fit needs at least two samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, "line fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.samples = x.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    f.max_residual = std::max(f.max_residual, std::abs(y[i] - f.intercept - f.slope * x[i]));
  }
  return f;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

inline std::vector<double> logspace(double a, double b, std::size_t n) {
  std::vector<double> v = linspace(std::log(a), std::log(b), n);
  for (auto& x : v) x = std::exp(x);
  return v;
}

/// Slope of log y against log x.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  std::transform(x.begin(), x.end(), lx.begin(), [](double v) { return std::log(v); });
  std::transform(y.begin(), y.end(), ly.begin(), [](double v) { return std::log(v); });
  return fit_line(lx, ly).slope;
}

// ---- two-scale model of the kernel -------------------------------------------------

/// C1 e^{-sqrt(lambda)|x|} + C2 N^{s(2+s)/(2-s)} |x|^{-(s+1)} with C2 carrying e^{-ix/kappa}.
struct TwoScaleModel {
  double s = 1.5;
  double lambda = 0.0;
  double kappa = 0.0;
  double c1 = 0.0;
  double algebraic_scale = 0.0;  ///< N^{s(2+s)/(2-s)}
  double envelope = 0.0;         ///< |C2| used by the model
  double envelope_printed = 0.0; ///< |C2| as printed

  explicit TwoScaleModel(const ModelParams& p)
      : s(p.s), lambda(p.lambda), kappa(p.kappa), c1(kernel_exp_constant(p.lambda)),
        algebraic_scale(std::pow(p.N, algebraic_mass_exponent(p.s))), envelope(kernel_alg_envelope(p.s)),
        envelope_printed(kernel_alg_envelope_printed(p.s)) {}

  double exponential(double x) const { return c1 * std::exp(-std::sqrt(lambda) * std::abs(x)); }
  double algebraic_modulus(double x) const { return envelope * algebraic_scale / std::pow(std::abs(x), s + 1.0); }

  /// Full model for x > 0 (the algebraic term oscillates as e^{-ix/kappa}).
  cplx value(double x) const { return exponential(x) + algebraic_modulus(x) * std::polar(1.0, -x / kappa); }

  /// Where the exponential term equals `ratio` times the algebraic term (bisection in x > 0).
  double crossover(double ratio = 1.0) const {
    auto g = [&](double x) { return std::log(exponential(x)) - std::log(ratio * algebraic_modulus(x)); };
    // the log-ratio peaks at x = (s+1)/sqrt(lambda) and decreases beyond
    double lo = (s + 1.0) / std::sqrt(lambda), hi = 2.0 * lo;
    if (g(lo) <= 0.0) return 0.0;
    while (g(hi) > 0.0) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

struct ExpansionOptions {
  double exp_start = 3.0;       ///< start of the exponential window
  double exp_ratio = 100.0;     ///< the window ends where exponential / algebraic drops to this
  double far_factor = 3.0;      ///< far window starts at far_factor * crossover
  double far_span = 4.0;        ///< and ends at far_span times its start
  std::size_t samples = 40;
  std::size_t phase_samples = 64;  ///< phase samples for the frequency estimate (16 per period)
};

struct KernelExpansionReport {
  double exp_lo = 0.0, exp_hi = 0.0;
  double exp_max_deviation = 0.0;  ///< max |m / (C1 e^{-sqrt(lambda) x}) - 1| on the window
  double crossover_model = 0.0;
  double crossover_detected = 0.0;
  double far_lo = 0.0, far_hi = 0.0;
  double fitted_exponent = 0.0;         ///< from log |m| against log x on the far window
  double envelope_coefficient = 0.0;    ///< median of |m| x^{s+1} on the far window
  double envelope_predicted = 0.0;      ///< |C2| N^{s(2+s)/(2-s)} with the derived |C2|
  double envelope_printed = 0.0;        ///< same with the printed |C2|
  double frequency = 0.0;               ///< from the unwrapped phase on the far window
  double frequency_predicted = 0.0;     ///< 1/kappa
  double max_cut_error = 0.0;
  std::size_t samples = 0;
};

/// Compares pointwise kernel values with the two-scale model on model-derived windows.
inline KernelExpansionReport kernel_expansion_check(const ModelParams& p, double theta,
                                                    const ExpansionOptions& opt = {}) {
  require(!p.validation, "kernel expansion needs s < 2");
  const TwoScaleModel model(p);
  const RootResult root = find_root_f1(Branch::upper, p, theta);
  KernelExpansionReport rep;
  rep.crossover_model = model.crossover(1.0);
  rep.exp_lo = opt.exp_start;
  rep.exp_hi = model.crossover(opt.exp_ratio);
  if (!(rep.exp_hi > 2.0 * rep.exp_lo)) {
    throw DomainError("exponential and algebraic windows do not separate (crossover at x = " +
                      std::to_string(rep.crossover_model) + ")");
  }
  rep.samples = opt.samples;
  auto eval = [&](double x) {
    const KernelTerms t = kernel_terms(x, p, theta, root);
    rep.max_cut_error = std::max(rep.max_cut_error, t.cut_error);
    return t.total();
  };

  for (double x : linspace(rep.exp_lo, rep.exp_hi, opt.samples)) {
    rep.exp_max_deviation = std::max(rep.exp_max_deviation, std::abs(eval(x) / model.exponential(x) - 1.0));
  }

  // first x where the kernel leaves the exponential model by a factor 2
  rep.crossover_detected = std::numeric_limits<double>::quiet_NaN();
  for (double x : linspace(rep.exp_lo, 4.0 * rep.crossover_model, 400)) {
    if (std::abs(std::abs(eval(x)) / model.exponential(x) - 1.0) > 1.0) {
      rep.crossover_detected = x;
      break;
    }
  }

  rep.far_lo = opt.far_factor * rep.crossover_model;
  rep.far_hi = opt.far_span * rep.far_lo;
  std::vector<double> lx, lm, env;
  for (double x : logspace(rep.far_lo, rep.far_hi, opt.samples)) {
    const double a = std::abs(eval(x));
    lx.push_back(std::log(x));
    lm.push_back(std::log(a));
    env.push_back(a * std::pow(x, p.s + 1.0));
  }
  rep.fitted_exponent = -fit_line(lx, lm).slope;
  std::nth_element(env.begin(), env.begin() + env.size() / 2, env.end());
  rep.envelope_coefficient = env[env.size() / 2];
  rep.envelope_predicted = model.envelope * model.algebraic_scale;
  rep.envelope_printed = model.envelope_printed * model.algebraic_scale;

  const double step = 2.0 * kPi * p.kappa / 16.0;
  std::vector<double> xs, phase;
  double last = 0.0, offset = 0.0;
  for (std::size_t i = 0; i < opt.phase_samples; ++i) {
    const double x = rep.far_lo + step * static_cast<double>(i);
    double ph = std::arg(eval(x));
    if (i > 0) {
      while (ph + offset - last > kPi) offset -= 2.0 * kPi;
      while (ph + offset - last < -kPi) offset += 2.0 * kPi;
    }
    last = ph + offset;
    xs.push_back(x);
    phase.push_back(last);
  }
  rep.frequency = -fit_line(xs, phase).slope;
  rep.frequency_predicted = 1.0 / p.kappa;
  return rep;
}

/// |m - model| / (C1 e^{-sqrt(lambda) x} + |C2| N^{...} x^{-(s+1)}) at one point.
inline double expansion_remainder(double x, const ModelParams& p, double theta, const RootResult& root) {
  const TwoScaleModel model(p);
  const cplx m = kernel_terms(x, p, theta, root).total();
  return std::abs(m - model.value(x)) / (model.exponential(x) + model.algebraic_modulus(x));
}

// ---- profile tails -----------------------------------------------------------------

/// int e^{sqrt(lambda) y} R(y)^{2s+1} dy for the closed-form local profile, by quadrature.
inline double local_tail_integral(double s, double lambda) {
  const double r = std::sqrt(lambda);
  const double amp = std::pow((s + 1.0) * lambda, 0.5 / s);
  const double p = (2.0 * s + 1.0) / s;
  // e^{+-r y} R(y)^{2s+1} for y > 0 with the sech power written in exponentials
  auto g = [&](double y, double sign) {
    const double e = std::exp(-2.0 * s * r * y);
    return std::pow(amp, 2.0 * s + 1.0) * std::pow(2.0, p) * std::exp((sign - (2.0 * s + 1.0)) * r * y) * std::pow(1.0 + e, -p);
  };
  boost::math::quadrature::exp_sinh<double> quad;
  const double right = quad.integrate([&](double y) { return g(y, 1.0); }, 1e-14);
  const double left = quad.integrate([&](double y) { return g(y, -1.0); }, 1e-14);
  return right + left;
}

/// R(x) from the fixed-point form R = (2 pi)^{-1/2} m * (|R|^{2s} R), with the nonlinearity on
/// the grid and the kernel evaluated off the grid; nodes where |f| is below cutoff * max |f|
/// are skipped.
inline cplx reconstruct_far_field(const Profile& u, const ModelParams& p, double theta, const RootResult& root,
                                  double x, double cutoff = 1e-18) {
  const Profile f = nonlinearity(u, p.s);
  const auto& nodes = u.grid().nodes();
  double fmax = 0.0;
  for (const auto& z : f.values()) fmax = std::max(fmax, std::abs(z));
  cplx acc = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (std::abs(f[j]) <= cutoff * fmax) continue;
    const double d = x - nodes[j];
    if (d == 0.0) continue;  // only reached where f is below the cutoff scale anyway
    acc += kernel_pointwise(d, p, theta, root) * f[j];
  }
  return acc * (u.grid().spacing() / kSqrt2Pi);
}

struct TailOptions {
  double settle = 1e-4;   ///< window starts where e^{-2s sqrt(lambda) x} drops below this
  double span = 20.0;     ///< window length in units of 1/sqrt(lambda)
  double shift = 0.0;     ///< relative shift of both window ends (robustness probes)
  std::size_t samples = 40;
  std::size_t far_samples = 24;
};

struct TailFit {
  double lo = 0.0, hi = 0.0;
  double rate = 0.0;                 ///< fitted decay rate of |R_N|
  double rate_predicted = 0.0;       ///< sqrt(lambda)
  double amplitude = 0.0;            ///< fitted |A| in |R_N| ~ A e^{-rate x}
  double amplitude_predicted = 0.0;  ///< C1 (2 pi)^{-1/2} int e^{sqrt(lambda) y} R^{2s+1}
  double amplitude_literal = 0.0;    ///< C1 int e^{sqrt(lambda) y} R^{2s+1}
  double fit_residual = 0.0;         ///< max relative deviation of data from the fitted exponential
  bool window_ok = false;
  std::size_t reconstructed = 0;     ///< window samples obtained off the grid
  double far_lo = 0.0, far_hi = 0.0;
  std::vector<double> far_x;
  std::vector<double> far_measured;   ///< |R_N| on the far window
  std::vector<double> far_literal;    ///< |C2| N^{...} |int |R|^{2s} R| / x^{s+1}
  double far_max_ratio = 0.0;         ///< max measured / literal prediction
  std::vector<double> x;             ///< window samples and values (plot data)
  std::vector<double> value;
};

/// Fits the exponential tail of a converged normalized-problem profile for x > 0.
inline TailFit tail_fit(const SolveResult& result, const ModelParams& p, const TailOptions& opt = {}) {
  require(result.converged, "tail fit needs a converged solve");
  const double s = p.s;
  const double r = std::sqrt(p.lambda);
  const Profile u = gauge_fix(result.profile).profile;
  const double theta = result.multiplier;
  const RootResult root = find_root_f1(Branch::upper, p, theta);
  const double quarter = 0.25 * u.grid().length();

  TailFit tf;
  tf.lo = std::log(1.0 / opt.settle) / (2.0 * s * r) * (1.0 + opt.shift);
  tf.hi = (tf.lo / (1.0 + opt.shift) + opt.span / r) * (1.0 + opt.shift);
  std::vector<double> lv;
  for (double x : linspace(tf.lo, tf.hi, opt.samples)) {
    double a;
    if (x <= quarter) {
      a = std::abs(interpolate(u, x));
    } else {
      a = std::abs(reconstruct_far_field(u, p, theta, root, x));
      ++tf.reconstructed;
    }
    tf.x.push_back(x);
    tf.value.push_back(a);
    lv.push_back(std::log(a));
  }
  const LineFit line = fit_line(tf.x, lv);
  tf.rate = -line.slope;
  tf.amplitude = std::exp(line.intercept);
  tf.rate_predicted = r;
  for (std::size_t i = 0; i < tf.x.size(); ++i) {
    const double model = tf.amplitude * std::exp(-tf.rate * tf.x[i]);
    tf.fit_residual = std::max(tf.fit_residual, std::abs(tf.value[i] / model - 1.0));
  }
  tf.window_ok = tf.fit_residual <= 0.1;
  const double integral = local_tail_integral(s, p.lambda);
  tf.amplitude_literal = kernel_exp_constant(p.lambda) * integral;
  tf.amplitude_predicted = tf.amplitude_literal / kSqrt2Pi;

  // far window: the literal algebraic term against the reconstructed profile
  const TwoScaleModel model(p);
  cplx total = 0.0;
  const Profile f = nonlinearity(u, s);
  for (const auto& z : f.values()) total += z;
  total *= u.grid().spacing();
  tf.far_lo = std::max(3.0 * model.crossover(1.0), 2.0 * tf.hi);
  tf.far_hi = 4.0 * tf.far_lo;
  for (double x : logspace(tf.far_lo, tf.far_hi, opt.far_samples)) {
    const double measured = std::abs(reconstruct_far_field(u, p, theta, root, x));
    const double literal = model.envelope_printed * model.algebraic_scale * std::abs(total) / std::pow(x, s + 1.0);
    tf.far_x.push_back(x);
    tf.far_measured.push_back(measured);
    tf.far_literal.push_back(literal);
    tf.far_max_ratio = std::max(tf.far_max_ratio, measured / literal);
  }
  return tf;
}

struct DecayBoundReport {
  double constant = 0.0;  ///< minimal C with |R_N| <= C (e^{-sqrt(lambda)|x|} + N^{...}/(1+|x|^{s+1}))
  double argmax = 0.0;
  std::size_t samples = 0;
};

/// Minimal constant of the two-scale decay bound over grid nodes with |x| <= L/4 and any extra
/// (reconstructed) samples.
inline DecayBoundReport decay_bound_check(const Profile& u, const ModelParams& p,
                                          const std::vector<double>& extra_x = {},
                                          const std::vector<double>& extra_value = {}) {
  require(extra_x.size() == extra_value.size(), "extra samples are unpaired");
  const double r = std::sqrt(p.lambda);
  const double alg = std::pow(p.N, algebraic_mass_exponent(p.s));
  auto bound = [&](double x) {
    return std::exp(-r * std::abs(x)) + alg / (1.0 + std::pow(std::abs(x), p.s + 1.0));
  };
  DecayBoundReport rep;
  auto visit = [&](double x, double v) {
    const double c = v / bound(x);
    if (c > rep.constant) {
      rep.constant = c;
      rep.argmax = x;
    }
    ++rep.samples;
  };
  // nodes beyond L/4 carry the periodic image of the opposite tail
  const Profile g = gauge_fix(u).profile;
  const double quarter = 0.25 * g.grid().length();
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.grid().nodes()[j];
    if (std::abs(x) <= quarter) visit(x, std::abs(g[j]));
  }
  for (std::size_t i = 0; i < extra_x.size(); ++i) visit(extra_x[i], extra_value[i]);
  return rep;
}

/// ((s+1) lambda)^{1/(2s)} 2^{1/s}: |R(x)| <= this * e^{-sqrt(lambda)|x|} for the closed form.
inline double local_decay_constant(double s, double lambda) {
  return std::pow((s + 1.0) * lambda, 0.5 / s) * std::pow(2.0, 1.0 / s);
}

}  // namespace fnls
