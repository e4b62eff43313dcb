#pragma once

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "fnls/errors.hpp"
#include "fnls/params.hpp"

namespace fnls {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;


namespace fft {
namespace detail {

class PlanCache {
 public:
  struct Plans {
    fftw_plan forward;
    fftw_plan backward;
  };

  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  Plans get(std::size_t n) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(n); it != plans_.end()) return it->second;
    fftw_complex* a = fftw_alloc_complex(n);
    fftw_complex* b = fftw_alloc_complex(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p{fftw_plan_dft_1d(static_cast<int>(n), a, b, FFTW_FORWARD, flags),
            fftw_plan_dft_1d(static_cast<int>(n), a, b, FFTW_BACKWARD, flags)};
    fftw_free(a);
    fftw_free(b);
    plans_.emplace(n, p);
    return p;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::size_t, Plans> plans_;
};

inline CVec run(std::span<const cplx> in, bool forward) {
  auto plans = PlanCache::instance().get(in.size());
  CVec out(in.size());
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(forward ? plans.forward : plans.backward, src, dst);
  return out;
}

}  // namespace detail

/// Unnormalized DFT, X_k = sum_j x_j e^{-2 pi i jk/n}.
inline CVec forward(std::span<const cplx> in) { return detail::run(in, true); }

/// Inverse DFT including the 1/n factor.
inline CVec inverse(std::span<const cplx> in) {
  CVec out = detail::run(in, false);
  const double scale = 1.0 / static_cast<double>(in.size());
  for (auto& z : out) z *= scale;
  return out;
}

}  // namespace fft

/// Uniform periodic grid on [-L/2, L/2) with its dual frequency lattice.
/// Frequencies are stored in FFT order; index M/2 holds the Nyquist value -pi M/L.
class SpectralGrid {
 public:
  SpectralGrid(double length, std::size_t points) : length_(length), points_(points) {
    require(std::isfinite(length) && length > 0.0, "grid length must be positive");
    require(points >= 16, "grid needs at least 16 points");
    require(std::has_single_bit(points), "M must be a power of two");
    spacing_ = length_ / static_cast<double>(points_);
    nodes_.resize(points_);
    freqs_.resize(points_);
    const double dk = 2.0 * kPi / length_;
    const auto m = static_cast<std::ptrdiff_t>(points_);
    for (std::ptrdiff_t j = 0; j < m; ++j) {
      nodes_[j] = -0.5 * length_ + static_cast<double>(j) * spacing_;
      freqs_[j] = dk * static_cast<double>(j < m / 2 ? j : j - m);
    }
  }

  double length() const { return length_; }
  std::size_t size() const { return points_; }
  double spacing() const { return spacing_; }
  double frequency_step() const { return 2.0 * kPi / length_; }
  double max_frequency() const { return kPi * static_cast<double>(points_) / length_; }
  const RVec& nodes() const { return nodes_; }
  const RVec& frequencies() const { return freqs_; }

  /// Integer lattice index of FFT slot k, in [-M/2, M/2).
  std::ptrdiff_t mode(std::size_t k) const {
    const auto m = static_cast<std::ptrdiff_t>(points_);
    const auto kk = static_cast<std::ptrdiff_t>(k);
    return kk < m / 2 ? kk : kk - m;
  }

  /// FFT slot for a lattice index in [-M/2, M/2).
  std::size_t slot(std::ptrdiff_t mode) const {
    const auto m = static_cast<std::ptrdiff_t>(points_);
    return static_cast<std::size_t>(mode >= 0 ? mode : mode + m);
  }

  bool same_as(const SpectralGrid& other) const {
    return points_ == other.points_ && length_ == other.length_;
  }

 private:
  double length_;
  std::size_t points_;
  double spacing_;
  RVec nodes_;
  RVec freqs_;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

inline GridPtr make_grid(double length, std::size_t points) {
  return std::make_shared<const SpectralGrid>(length, points);
}

enum class Gauge { raw, fixed };

/// Complex field sampled on a SpectralGrid.
class Profile {
 public:
  Profile() = default;
  Profile(GridPtr grid, CVec values, Gauge gauge = Gauge::raw)
      : grid_(std::move(grid)), values_(std::move(values)), gauge_(gauge) {
    require(grid_ != nullptr, "profile needs a grid");
    require(values_.size() == grid_->size(), "profile length must equal grid size");
  }

  template <class F>
  static Profile sample(GridPtr grid, F&& f) {
    CVec v(grid->size());
    const auto& x = grid->nodes();
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = cplx(f(x[j]));
    return Profile(std::move(grid), std::move(v));
  }

  static Profile zeros(GridPtr grid) {
    const auto n = grid->size();
    return Profile(std::move(grid), CVec(n));
  }

  const SpectralGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const CVec& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  const cplx& operator[](std::size_t j) const { return values_[j]; }
  Gauge gauge() const { return gauge_; }
  bool empty() const { return grid_ == nullptr; }

  Profile with_gauge(Gauge g) const { return Profile(grid_, values_, g); }

 private:
  GridPtr grid_;
  CVec values_;
  Gauge gauge_ = Gauge::raw;
};

inline void require_same_grid(const Profile& a, const Profile& b) {
  if (!a.grid().same_as(b.grid())) throw GridMismatch();
}

// ---- arithmetic --------------------------------------------------------------

inline Profile operator+(const Profile& a, const Profile& b) {
  require_same_grid(a, b);
  CVec v(a.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = a[j] + b[j];
  return Profile(a.grid_ptr(), std::move(v));
}

inline Profile operator-(const Profile& a, const Profile& b) {
  require_same_grid(a, b);
  CVec v(a.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = a[j] - b[j];
  return Profile(a.grid_ptr(), std::move(v));
}

inline Profile operator*(cplx c, const Profile& a) {
  CVec v(a.values());
  for (auto& z : v) z *= c;
  return Profile(a.grid_ptr(), std::move(v));
}

inline Profile operator*(double c, const Profile& a) { return cplx(c) * a; }

/// a + c b
inline Profile axpy(const Profile& a, cplx c, const Profile& b) {
  require_same_grid(a, b);
  CVec v(a.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = a[j] + c * b[j];
  return Profile(a.grid_ptr(), std::move(v));
}

inline Profile conj(const Profile& a) {
  CVec v(a.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::conj(a[j]);
  return Profile(a.grid_ptr(), std::move(v));
}

// ---- transforms and multipliers --------------------------------------------

inline CVec spectrum(const Profile& u) { return fft::forward(u.values()); }

inline Profile from_spectrum(const GridPtr& grid, std::span<const cplx> coeffs) {
  require(coeffs.size() == grid->size(), "spectrum length must equal grid size");
  return Profile(grid, fft::inverse(coeffs));
}

/// Samples a frequency function in FFT order and rejects non-finite values.
template <class Symbol>
auto sample_symbol(const SpectralGrid& grid, Symbol&& sigma) {
  using R = std::decay_t<decltype(sigma(0.0))>;
  std::vector<R> out(grid.size());
  const auto& xi = grid.frequencies();
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = sigma(xi[k]);
    bool finite;
    if constexpr (std::is_arithmetic_v<R>) {
      finite = std::isfinite(static_cast<double>(out[k]));
    } else {
      finite = std::isfinite(out[k].real()) && std::isfinite(out[k].imag());
    }
    if (!finite) {
      throw DomainError("multiplier is not finite at frequency " + std::to_string(xi[k]));
    }
  }
  return out;
}

template <class T>
Profile apply_sampled(const Profile& u, std::span<const T> sigma) {
  require(sigma.size() == u.size(), "sampled symbol length must equal grid size");
  CVec c = spectrum(u);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= sigma[k];
  return from_spectrum(u.grid_ptr(), c);
}

template <class T>
Profile apply_sampled(const Profile& u, const std::vector<T>& sigma) {
  return apply_sampled(u, std::span<const T>(sigma));
}

/// Fourier multiplier: returns F^{-1}(sigma F u) on the grid.
template <class Symbol>
  requires std::is_invocable_v<Symbol, double>
Profile apply_multiplier(const Profile& u, Symbol&& sigma) {
  auto samples = sample_symbol(u.grid(), std::forward<Symbol>(sigma));
  return apply_sampled(u, samples);
}

inline Profile derivative(const Profile& u) {
  const auto& g = u.grid();
  CVec c = spectrum(u);
  for (std::size_t k = 0; k < c.size(); ++k) {
    c[k] *= (g.mode(k) == -static_cast<std::ptrdiff_t>(g.size() / 2))
                ? cplx(0.0)
                : cplx(0.0, g.frequencies()[k]);
  }
  return from_spectrum(u.grid_ptr(), c);
}

/// u(x - y) by spectral phase shift.
inline Profile translate(const Profile& u, double y) {
  const auto& xi = u.grid().frequencies();
  CVec c = spectrum(u);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= std::polar(1.0, -xi[k] * y);
  return from_spectrum(u.grid_ptr(), c);
}

/// Trigonometric interpolation onto a grid of the same length with a different point count.
inline Profile resample(const Profile& u, std::size_t points) {
  const auto& g = u.grid();
  auto target = make_grid(g.length(), points);
  CVec c = spectrum(u);
  CVec d(points);
  const auto m = static_cast<std::ptrdiff_t>(std::min(points, g.size()));
  for (std::ptrdiff_t mode = -m / 2; mode < m / 2; ++mode) {
    d[target->slot(mode)] = c[g.slot(mode)];
  }
  const double scale = static_cast<double>(points) / static_cast<double>(g.size());
  for (auto& z : d) z *= scale;
  return from_spectrum(target, d);
}

/// Value of the trigonometric interpolant at an arbitrary point.
inline cplx interpolate(const Profile& u, double x) {
  const auto& g = u.grid();
  CVec c = spectrum(u);
  cplx acc = 0.0;
  const double x0 = g.nodes()[0];
  for (std::size_t k = 0; k < c.size(); ++k) {
    acc += c[k] * std::polar(1.0, g.frequencies()[k] * (x - x0));
  }
  return acc / static_cast<double>(g.size());
}

// ---- quadrature -------------------------------------------------------------

/// Integral of conj(u) v by the periodic trapezoid rule.
inline cplx inner(const Profile& u, const Profile& v) {
  require_same_grid(u, v);
  cplx acc = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) acc += std::conj(u[j]) * v[j];
  return acc * u.grid().spacing();
}

/// Real pairing Re int u conj(v).
inline double pairing(const Profile& u, const Profile& v) { return inner(u, v).real(); }

inline double mass(const Profile& u) {
  double acc = 0.0;
  for (const auto& z : u.values()) acc += std::norm(z);
  return acc * u.grid().spacing();
}

inline double l2_norm(const Profile& u) { return std::sqrt(mass(u)); }

inline double l2_distance(const Profile& u, const Profile& v) { return l2_norm(u - v); }

inline double linf_norm(const Profile& u) {
  double m = 0.0;
  for (const auto& z : u.values()) m = std::max(m, std::abs(z));
  return m;
}

inline double lp_norm(const Profile& u, double p) {
  require(p >= 1.0, "Lp exponent must be at least 1");
  double acc = 0.0;
  for (const auto& z : u.values()) acc += std::pow(std::abs(z), p);
  return std::pow(acc * u.grid().spacing(), 1.0 / p);
}

/// Mass computed on the Fourier side; equals mass(u) by Parseval.
inline double spectral_mass(const Profile& u) {
  const CVec c = spectrum(u);
  double acc = 0.0;
  for (const auto& z : c) acc += std::norm(z);
  return acc * u.grid().spacing() / static_cast<double>(u.size());
}

/// H^r norm with weight (1 + xi^2)^{r/2}.
inline double sobolev_norm(const Profile& u, double r) {
  const auto& xi = u.grid().frequencies();
  const CVec c = spectrum(u);
  double acc = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) acc += std::pow(1.0 + xi[k] * xi[k], r) * std::norm(c[k]);
  return std::sqrt(acc * u.grid().spacing() / static_cast<double>(u.size()));
}

/// <u, sigma(D) u> evaluated in physical space; real up to roundoff for real sigma.
template <class Symbol>
  requires std::is_invocable_v<Symbol, double>
cplx quadratic_form(const Profile& u, Symbol&& sigma) {
  return inner(u, apply_multiplier(u, std::forward<Symbol>(sigma)));
}

/// <u, sigma(D) u> for a real sampled symbol, evaluated spectrally.
inline double quadratic_form_sampled(const Profile& u, std::span<const double> sigma) {
  const CVec c = spectrum(u);
  double acc = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) acc += sigma[k] * std::norm(c[k]);
  return acc * u.grid().spacing() / static_cast<double>(u.size());
}

struct NormBundle {
  cplx inner_uv;
  double l2_u = 0, l2_v = 0;
  double lp_u = 0;  ///< L^{2s+2}
  double h0 = 0, h_half_s = 0, h1 = 0, h2 = 0;
  double quadratic = 0;  ///< <u, |D|^s u>
};

inline NormBundle norms_and_products(const Profile& u, const Profile& v, double s) {
  require_same_grid(u, v);
  NormBundle b;
  b.inner_uv = inner(u, v);
  b.l2_u = l2_norm(u);
  b.l2_v = l2_norm(v);
  b.lp_u = lp_norm(u, 2.0 * s + 2.0);
  b.h0 = sobolev_norm(u, 0.0);
  b.h_half_s = sobolev_norm(u, 0.5 * s);
  b.h1 = sobolev_norm(u, 1.0);
  b.h2 = sobolev_norm(u, 2.0);
  b.quadratic = quadratic_form(u, [s](double xi) { return std::pow(std::abs(xi), s); }).real();
  return b;
}

// ---- nonlinearity -------------------------------------------------------------

namespace detail {

inline CVec pad_twice(const SpectralGrid& g, const CVec& coeffs) {
  const std::size_t m = g.size();
  CVec padded(2 * m);
  const auto half = static_cast<std::ptrdiff_t>(m / 2);
  for (std::ptrdiff_t mode = -half; mode < half; ++mode) {
    const std::size_t dst = mode >= 0 ? static_cast<std::size_t>(mode)
                                      : static_cast<std::size_t>(mode + 2 * static_cast<std::ptrdiff_t>(m));
    padded[dst] = 2.0 * coeffs[g.slot(mode)];
  }
  return fft::inverse(padded);
}

inline CVec truncate_half(const SpectralGrid& g, const CVec& fine) {
  const std::size_t m = g.size();
  const CVec big = fft::forward(fine);
  CVec c(m);
  const auto half = static_cast<std::ptrdiff_t>(m / 2);
  for (std::ptrdiff_t mode = -half; mode < half; ++mode) {
    const std::size_t src = mode >= 0 ? static_cast<std::size_t>(mode)
                                      : static_cast<std::size_t>(mode + 2 * static_cast<std::ptrdiff_t>(m));
    c[g.slot(mode)] = 0.5 * big[src];
  }
  return c;
}

}  // namespace detail

/// Samples of u on the twice-refined grid (band-limited interpolation).
inline CVec refined_samples(const Profile& u) { return detail::pad_twice(u.grid(), spectrum(u)); }

/// |u|^{2s} u evaluated on the refined grid and projected back to the grid band.
inline Profile nonlinearity(const Profile& u, double s) {
  CVec fine = refined_samples(u);
  for (auto& z : fine) {
    const double a = std::abs(z);
    z = a > 0.0 ? std::pow(a, 2.0 * s) * z : cplx(0.0);
  }
  return from_spectrum(u.grid_ptr(), detail::truncate_half(u.grid(), fine));
}

/// Integral of |u|^{2s+2} on the refined grid; its gradient is nonlinearity(u, s).
inline double potential_integral(const Profile& u, double s) {
  const CVec fine = refined_samples(u);
  double acc = 0.0;
  for (const auto& z : fine) acc += std::pow(std::abs(z), 2.0 * s + 2.0);
  return acc * 0.5 * u.grid().spacing();
}

}  // namespace fnls
