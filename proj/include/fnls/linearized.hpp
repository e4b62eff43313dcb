#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fnls/errors.hpp"
#include "fnls/solvers.hpp"
#include "fnls/spectral.hpp"

namespace fnls {

struct SymmetricEigen {
  Eigen::VectorXd values;   ///< ascending unless stated otherwise
  Eigen::MatrixXd vectors;  ///< columns, empty when not requested
};

/// Dense symmetric eigendecomposition.
inline SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a, bool vectors = true) {
  require(a.rows() == a.cols(), "matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver did not converge", 0.0);
  SymmetricEigen out;
  out.values = es.eigenvalues();
  if (vectors) out.vectors = es.eigenvectors();
  return out;
}

/// The `count` eigenpairs closest to `shift` by shift-invert subspace iteration, ordered by
/// distance to the shift. Converges when each Ritz residual is below tol * |a|.
inline SymmetricEigen eigenpairs_near(const Eigen::MatrixXd& a, double shift, int count, double tol = 1e-12,
                                      int max_iter = 60) {
  const Eigen::Index n = a.rows();
  const int block = std::min<int>(count + 2, static_cast<int>(n));
  const Eigen::MatrixXd shifted = a - shift * Eigen::MatrixXd::Identity(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd x(n, block);
  for (Eigen::Index j = 0; j < x.size(); ++j) x.data()[j] = gauss(rng);
  const double scale = a.cwiseAbs().rowwise().sum().maxCoeff();
  SymmetricEigen out;
  for (int it = 0; it < max_iter; ++it) {
    x = lu.solve(x);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    x = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    const Eigen::MatrixXd ax = a * x;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(x.transpose() * ax);
    std::vector<int> order(block);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      return std::abs(small.eigenvalues()[i] - shift) < std::abs(small.eigenvalues()[j] - shift);
    });
    out.values.resize(count);
    out.vectors.resize(n, count);
    double worst = 0.0;
    for (int k = 0; k < count; ++k) {
      out.values[k] = small.eigenvalues()[order[k]];
      out.vectors.col(k) = x * small.eigenvectors().col(order[k]);
      worst = std::max(worst, (a * out.vectors.col(k) - out.values[k] * out.vectors.col(k)).norm());
    }
    if (worst <= tol * scale) return out;
  }
  throw ConvergenceError("shift-invert iteration did not converge", 0.0);
}

/// Real-linear operator f -> sigma(D) f + theta f - (s+1)|R|^{2s} f - s |R|^{2s-2} R^2 conj(f),
/// with a dense form on stacked (Re f, Im f) coordinates.
class LinearizedOperator {
 public:
  LinearizedOperator(Profile base, double theta, RVec symbol, double s)
      : base_(std::move(base)), theta_(theta), symbol_(std::move(symbol)), s_(s) {
    require(symbol_.size() == base_.size(), "symbol and profile sizes differ");
    const std::size_t m = base_.size();
    diag_.resize(m);
    coupling_.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double a = std::abs(base_[j]);
      diag_[j] = (s_ + 1.0) * std::pow(a, 2.0 * s_);
      coupling_[j] = a > 0.0 ? s_ * std::pow(a, 2.0 * s_ - 2.0) * base_[j] * base_[j] : cplx(0.0);
    }
    assemble();
  }

  const Profile& base() const { return base_; }
  double theta() const { return theta_; }
  double s() const { return s_; }
  std::size_t points() const { return base_.size(); }
  const Eigen::MatrixXd& matrix() const { return dense_; }
  const RVec& symbol() const { return symbol_; }

  Profile apply(const Profile& f) const {
    require_same_grid(f, base_);
    Profile lin = apply_sampled(f, symbol_);
    CVec out(f.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] = lin[j] + (theta_ - diag_[j]) * f[j] - coupling_[j] * std::conj(f[j]);
    }
    return Profile(f.grid_ptr(), std::move(out));
  }

  Eigen::VectorXd stack(const Profile& f) const {
    const std::size_t m = f.size();
    Eigen::VectorXd v(2 * m);
    for (std::size_t j = 0; j < m; ++j) {
      v[j] = f[j].real();
      v[m + j] = f[j].imag();
    }
    return v;
  }

  Profile unstack(const Eigen::VectorXd& v) const {
    const std::size_t m = base_.size();
    CVec out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = cplx(v[j], v[m + j]);
    return Profile(base_.grid_ptr(), std::move(out));
  }

  Profile apply_dense(const Profile& f) const { return unstack(dense_ * stack(f)); }

  Profile phase_direction() const { return cplx(0.0, 1.0) * base_; }
  Profile translation_direction() const { return derivative(base_); }

  /// Adds a real potential to both diagonal blocks (used for sensitivity probes).
  LinearizedOperator perturbed(const RVec& potential) const {
    LinearizedOperator copy = *this;
    const std::size_t m = points();
    for (std::size_t j = 0; j < m; ++j) {
      copy.diag_[j] -= potential[j];
      copy.dense_(j, j) += potential[j];
      copy.dense_(m + j, m + j) += potential[j];
    }
    return copy;
  }

 private:
  void assemble() {
    const std::size_t m = base_.size();
    // circulant rows of sigma(D): c[d] with (sigma(D) a)_j = sum_l c[j-l] a_l
    CVec sym(m);
    for (std::size_t k = 0; k < m; ++k) sym[k] = symbol_[k];
    const CVec c = fft::inverse(sym);
    dense_.resize(2 * m, 2 * m);
    for (std::size_t l = 0; l < m; ++l) {
      for (std::size_t j = 0; j < m; ++j) {
        const cplx v = c[(j + m - l) % m];
        dense_(j, l) = v.real();
        dense_(m + j, m + l) = v.real();
        dense_(m + j, l) = v.imag();
        dense_(j, m + l) = -v.imag();
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double d = theta_ - diag_[j];
      dense_(j, j) += d - coupling_[j].real();
      dense_(m + j, m + j) += d + coupling_[j].real();
      dense_(j, m + j) -= coupling_[j].imag();
      dense_(m + j, j) -= coupling_[j].imag();
    }
  }

  Profile base_;
  double theta_;
  RVec symbol_;
  double s_;
  RVec diag_;
  CVec coupling_;
  Eigen::MatrixXd dense_;
};

/// Linearization of the normalized problem around a converged solve.
inline LinearizedOperator build_linearized(const SolveResult& result, const ModelParams& p) {
  if (!result.converged) throw DomainError("linearization needs a converged solve");
  const Functional f = make_functional(Problem::rescaled, result.profile.grid_ptr(), p);
  return LinearizedOperator(result.profile, result.multiplier, f.symbol, p.s);
}

/// Local-limit pair acting on real fields:
/// plus h = -h'' + lambda h - (2s+1) R^{2s} h, minus g = -g'' + lambda g - R^{2s} g.
struct LocalLimitOperators {
  Profile R;
  double lambda = 0.0;
  double s = 1.5;
  RVec symbol;

  Profile plus(const Profile& h) const { return apply_potential(h, 2.0 * s + 1.0); }
  Profile minus(const Profile& g) const { return apply_potential(g, 1.0); }

  /// -2s(|D|^2 + lambda) R, the closed form of plus(R).
  Profile plus_on_profile_closed_form() const {
    RVec shifted(symbol);
    for (auto& v : shifted) v = -2.0 * s * (v + lambda);
    return apply_sampled(R, shifted);
  }

  Eigen::MatrixXd plus_matrix() const { return dense(2.0 * s + 1.0); }
  Eigen::MatrixXd minus_matrix() const { return dense(1.0); }

 private:
  Profile apply_potential(const Profile& h, double factor) const {
    Profile lin = apply_sampled(h, symbol);
    CVec out(h.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] = lin[j] + (lambda - factor * std::pow(std::abs(R[j]), 2.0 * s)) * h[j];
    }
    return Profile(h.grid_ptr(), std::move(out));
  }

  Eigen::MatrixXd dense(double factor) const {
    const std::size_t m = R.size();
    CVec sym(m);
    for (std::size_t k = 0; k < m; ++k) sym[k] = symbol[k];
    const CVec c = fft::inverse(sym);
    Eigen::MatrixXd a(m, m);
    for (std::size_t l = 0; l < m; ++l)
      for (std::size_t j = 0; j < m; ++j) a(j, l) = c[(j + m - l) % m].real();
    for (std::size_t j = 0; j < m; ++j) a(j, j) += lambda - factor * std::pow(std::abs(R[j]), 2.0 * s);
    return a;
  }
};

inline LocalLimitOperators local_limit_operators(double s, double lambda, const GridPtr& grid) {
  LocalLimitOperators ops;
  ops.R = local_ground_state(s, lambda, grid);
  ops.lambda = lambda;
  ops.s = s;
  ops.symbol = sample_symbol(*grid, [](double xi) { return xi * xi; });
  return ops;
}

// ---- diagnostics --------------------------------------------------------------------

struct LinearizedReport {
  std::vector<double> lowest;       ///< lowest six eigenvalues, ascending
  double norm_estimate = 0.0;       ///< max |eigenvalue|
  int near_zero = 0;                ///< eigenvalues with |mu| <= 1e-6 norm_estimate
  int negative = 0;                 ///< eigenvalues below -1e-6 norm_estimate
  std::vector<double> kernel_values;  ///< the two eigenvalues closest to 0
  double subspace_cosine = 0.0;     ///< smallest principal-angle cosine vs span{iR, R'}
  double phase_correlation = 0.0;   ///< |projection of iR/|iR| onto the kernel pair|
  double translation_correlation = 0.0;
  double gap = 0.0;                 ///< smallest |mu| outside the kernel pair
  double coercivity = 0.0;          ///< min of <Lf,f>/|f|^2 over f orthogonal to R, iR, R'
  double length = 0.0;
  std::size_t points = 0;
};

namespace detail {

inline Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
}

}  // namespace detail

inline LinearizedReport kernel_diagnostics(const LinearizedOperator& op, double zero_fraction = 1e-6) {
  const Eigen::VectorXd values = symmetric_eigen(op.matrix(), false).values;
  const auto n = values.size();
  LinearizedReport rep;
  rep.length = op.base().grid().length();
  rep.points = op.points();
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(6, n); ++i) rep.lowest.push_back(values[i]);
  rep.norm_estimate = std::max(std::abs(values[0]), std::abs(values[n - 1]));
  const double thr = zero_fraction * rep.norm_estimate;
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(values[a]) < std::abs(values[b]); });
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(values[i]) <= thr) ++rep.near_zero;
    if (values[i] < -thr) ++rep.negative;
  }
  rep.gap = std::abs(values[order[2]]);

  // eigenvectors of the two eigenvalues closest to zero
  const SymmetricEigen pair = eigenpairs_near(op.matrix(), -1e-3 * rep.gap, 2);
  rep.kernel_values = {pair.values[0], pair.values[1]};
  const Eigen::MatrixXd& kern = pair.vectors;
  Eigen::MatrixXd sym(2 * op.points(), 2);
  sym.col(0) = op.stack(op.phase_direction());
  sym.col(1) = op.stack(op.translation_direction());
  const Eigen::MatrixXd qs = detail::orthonormal_columns(sym);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(kern.transpose() * qs);
  rep.subspace_cosine = svd.singularValues().minCoeff();
  rep.phase_correlation = (kern.transpose() * sym.col(0)).norm() / sym.col(0).norm();
  rep.translation_correlation = (kern.transpose() * sym.col(1)).norm() / sym.col(1).norm();

  // coercivity on the complement of {R, iR, R'}: shift those directions far up
  Eigen::MatrixXd dirs(2 * op.points(), 3);
  dirs.col(0) = op.stack(op.base());
  dirs.col(1) = sym.col(0);
  dirs.col(2) = sym.col(1);
  const Eigen::MatrixXd q = detail::orthonormal_columns(dirs);
  // P A P + c Q Q^T with P = I - Q Q^T, assembled by rank-3 updates
  const Eigen::MatrixXd aq = op.matrix() * q;
  const Eigen::MatrixXd qaq = q.transpose() * aq;
  Eigen::MatrixXd restricted = op.matrix() - aq * q.transpose() - q * aq.transpose() +
                               q * (qaq + 10.0 * rep.norm_estimate * Eigen::MatrixXd::Identity(3, 3)) * q.transpose();
  rep.coercivity = symmetric_eigen(restricted, false).values[0];
  return rep;
}

struct ConstrainedSolution {
  Profile solution;
  double removed_fraction = 0.0;  ///< |projected part of F| / |F|
  double constraint_error = 0.0;  ///< max |<f, e>| / |f| over the two kernel directions
  double stability_ratio = 0.0;   ///< |f|_{H^{s/2}} / |F|_{H^{-s/2}}
};

/// Solves L f = F with f orthogonal to {iR, R'} through the bordered system
/// [[A, B], [B^T, 0]] [f; mu] = [F; 0].
inline ConstrainedSolution constrained_solve(const LinearizedOperator& op, const Profile& rhs) {
  require_same_grid(rhs, op.base());
  const std::size_t m = op.points();
  Eigen::MatrixXd b(2 * m, 2);
  b.col(0) = op.stack(op.phase_direction());
  b.col(1) = op.stack(op.translation_direction());
  const Eigen::MatrixXd q = detail::orthonormal_columns(b);

  Eigen::VectorXd f = op.stack(rhs);
  const double fnorm = f.norm();
  const Eigen::VectorXd removed = q * (q.transpose() * f);
  ConstrainedSolution out;
  out.removed_fraction = fnorm > 0.0 ? removed.norm() / fnorm : 0.0;
  f -= removed;

  const Eigen::Index n = static_cast<Eigen::Index>(2 * m);
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 2, n + 2);
  aug.topLeftCorner(n, n) = op.matrix();
  aug.topRightCorner(n, 2) = q;
  aug.bottomLeftCorner(2, n) = q.transpose();
  Eigen::VectorXd rhs_aug = Eigen::VectorXd::Zero(n + 2);
  rhs_aug.head(n) = f;
  if (f.norm() == 0.0) {
    out.solution = Profile::zeros(op.base().grid_ptr());
    return out;
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(aug);
  if (!(lu.rcond() > 1e-13)) {
    throw DomainError("bordered system is singular: kernel dimension differs from 2");
  }
  const Eigen::VectorXd sol = lu.solve(rhs_aug);
  out.solution = op.unstack(sol.head(n));
  const double sn = sol.head(n).norm();
  out.constraint_error = sn > 0.0 ? (q.transpose() * sol.head(n)).cwiseAbs().maxCoeff() / sn : 0.0;
  const Profile fp = op.unstack(f);
  out.stability_ratio = sobolev_norm(out.solution, 0.5 * op.s()) / sobolev_norm(fp, -0.5 * op.s());
  return out;
}

}  // namespace fnls
