#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "fnls/errors.hpp"
#include "fnls/params.hpp"
#include "fnls/roots.hpp"
#include "fnls/spectral.hpp"
#include "fnls/symbols.hpp"

namespace fnls {

/// Samples 1/(n_N(xi) + theta) on the grid and checks the denominator.
inline RVec kernel_symbol(const SpectralGrid& grid, const ModelParams& p, double theta) {
  require(!p.validation, "kernel needs s < 2");
  RVec inv(grid.size());
  const auto& xi = grid.frequencies();
  for (std::size_t k = 0; k < inv.size(); ++k) {
    const double d = symbol_nN(xi[k], p) + theta;
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw DomainError("kernel denominator is not positive at frequency " + std::to_string(xi[k]));
    }
    inv[k] = 1.0 / d;
  }
  return inv;
}

struct KernelTerms {
  std::complex<double> pole;  ///< residue at the upper root
  std::complex<double> cut;   ///< branch-cut contribution
  double cut_error = 0.0;     ///< quadrature error estimate of the cut integral
  std::complex<double> total() const { return pole + cut; }
};

/// Pole and branch-cut pieces of the kernel at x > 0.
///
/// Closing the inversion integral in the upper half-plane picks up the residue at the
/// root xi = y+/kappa and the cut from -1/kappa upward. The cut integral is
/// int_0^inf e^{-(x/kappa) t} t^s / (D+(t) D-(t)) dt with
/// D+-(t) = t^s e^{+-i pi s/2} - i s t + s - 1 + c.
inline KernelTerms kernel_terms(double x, const ModelParams& p, double theta, const RootResult& root) {
  require(x > 0.0, "kernel terms need x > 0");
  const double s = p.s;
  const double k = p.kappa;
  const double c = p.root_shift(theta);
  KernelTerms out;

  const auto y = root.y;
  const std::complex<double> dn = dispersion_f1_prime(y, s) / s;  // (1+y)^{s-1} - 1
  out.pole = kSqrt2Pi * std::complex<double>(0.0, 0.5 * (s - 1.0) * k) *
             std::exp(std::complex<double>(0.0, 1.0) * (y / k) * x) / dn;

  const double a = x / k;
  const std::complex<double> ep = std::polar(1.0, 0.5 * kPi * s);
  const std::complex<double> em = std::conj(ep);
  const std::complex<double> is(0.0, s);
  auto integrand = [&](double u) {
    const double t = u / a;
    const double ts = std::pow(t, s);
    if (ts <= 1.0) {
      const auto dp = ts * ep - is * t + (s - 1.0 + c);
      const auto dm = ts * em - is * t + (s - 1.0 + c);
      return std::exp(-u) * ts / (dp * dm) / a;
    }
    // divided through by t^{2s} so that large t cannot overflow
    const double w = 1.0 / ts;
    const double q = std::pow(t, 1.0 - s);
    const auto dp = ep - is * q + (s - 1.0 + c) * w;
    const auto dm = em - is * q + (s - 1.0 + c) * w;
    return std::exp(-u) * w / (dp * dm) / a;
  };
  thread_local boost::math::quadrature::exp_sinh<double> quad;
  double er = 0.0, ei = 0.0;
  const double re = quad.integrate([&](double u) { return integrand(u).real(); }, 1e-13, &er);
  const double im = quad.integrate([&](double u) { return integrand(u).imag(); }, 1e-13, &ei);
  const double pref = s * (s - 1.0) * std::sin(0.5 * kPi * s) * k / kSqrt2Pi;
  out.cut = pref * std::polar(1.0, -x / k) * std::complex<double>(re, im);
  out.cut_error = pref * std::hypot(er, ei);
  return out;
}

/// Off-grid kernel value on the whole line; m(-x) = conj(m(x)).
inline std::complex<double> kernel_pointwise(double x, const ModelParams& p, double theta,
                                             const RootResult& root) {
  require(x != 0.0 && std::isfinite(x), "pointwise kernel needs finite |x| > 0");
  const auto v = kernel_terms(std::abs(x), p, theta, root).total();
  return x > 0.0 ? v : std::conj(v);
}

inline std::complex<double> kernel_pointwise(double x, const ModelParams& p, double theta) {
  return kernel_pointwise(x, p, theta, find_root_f1(Branch::upper, p, theta));
}

/// Kernel of (n_N(D) + theta)^{-1}: grid samples plus the off-grid evaluator.
class KernelField {
 public:
  KernelField(GridPtr grid, const ModelParams& p, double theta)
      : grid_(std::move(grid)), params_(p), theta_(theta) {
    require(theta > 0.0, "kernel multiplier must be positive");
    inverse_symbol_ = kernel_symbol(*grid_, p, theta);
    const std::size_t m = grid_->size();
    CVec c(m);
    for (std::size_t k = 0; k < m; ++k) {
      const double sign = (grid_->mode(k) % 2 == 0) ? 1.0 : -1.0;
      c[k] = sign * inverse_symbol_[k];
    }
    samples_ = fft::inverse(c);
    const double scale = kSqrt2Pi * static_cast<double>(m) / grid_->length();
    for (auto& z : samples_) z *= scale;
    root_ = find_root_f1(Branch::upper, p, theta);
  }

  const SpectralGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const ModelParams& params() const { return params_; }
  double theta() const { return theta_; }
  const CVec& samples() const { return samples_; }
  const RVec& inverse_symbol() const { return inverse_symbol_; }
  const RootResult& root() const { return root_; }

  /// (n_N(D) + theta)^{-1} f, which is (2 pi)^{-1/2} (m * f) for the unitary transform.
  Profile apply(const Profile& f) const {
    require(f.grid().same_as(*grid_), "kernel and profile grids differ");
    return apply_sampled(f, inverse_symbol_);
  }

  /// Direct periodic sum (2 pi)^{-1/2} h sum_j m(x_i - x_j) f(x_j), O(M^2).
  Profile convolve_direct(const Profile& f) const {
    require(f.grid().same_as(*grid_), "kernel and profile grids differ");
    const std::size_t m = grid_->size();
    const std::size_t center = m / 2;  // node x = 0
    CVec out(m);
    const double w = grid_->spacing() / kSqrt2Pi;
    for (std::size_t i = 0; i < m; ++i) {
      cplx acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t d = (i + m - j + center) % m;
        acc += samples_[d] * f[j];
      }
      out[i] = w * acc;
    }
    return Profile(grid_, std::move(out));
  }

  /// Sample at the node closest to x = 0 offset by index.
  cplx at_node(std::size_t j) const { return samples_[j]; }

  /// Non-periodic value at any x != 0.
  cplx value(double x) const { return kernel_pointwise(x, params_, theta_, root_); }

  /// max_j |m(x_j) - conj(m(-x_j))| / max |m|, the Hermitian symmetry defect.
  double hermitian_defect() const {
    const std::size_t m = grid_->size();
    const std::size_t center = m / 2;
    double worst = 0.0, scale = 0.0;
    for (std::size_t j = 1; j < m; ++j) {
      const std::size_t mirror = (2 * center + m - j) % m;
      worst = std::max(worst, std::abs(samples_[j] - std::conj(samples_[mirror])));
      scale = std::max(scale, std::abs(samples_[j]));
    }
    return worst / scale;
  }

  /// Two-column (x, Re m, Im m) plot data.
  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write " + path);
    out << "x,re,im\n" << std::setprecision(17);
    for (std::size_t j = 0; j < samples_.size(); ++j) {
      out << grid_->nodes()[j] << ',' << samples_[j].real() << ',' << samples_[j].imag() << '\n';
    }
  }

 private:
  GridPtr grid_;
  ModelParams params_;
  double theta_;
  RVec inverse_symbol_;
  CVec samples_;
  RootResult root_;
};

inline KernelField build_kernel(GridPtr grid, const ModelParams& p, double theta) {
  return KernelField(std::move(grid), p, theta);
}

}  // namespace fnls
