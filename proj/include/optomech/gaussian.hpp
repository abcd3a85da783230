#pragma once

// Zero-mean Gaussian states described by their quadrature covariance matrix.
//
// Conventions used throughout the library:
//   x = (a + a^dag)/sqrt(2),  p = i(a^dag - a)/sqrt(2),  [x, p] = i,
//   vacuum variance 1/2 per quadrature,
//   ordering (x1, p1, x2, p2, ..., x_b, p_b) with quadratures interleaved.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "optomech/errors.hpp"
#include "optomech/tolerances.hpp"

namespace optomech {

using Matrix = Eigen::MatrixXd;
using Matrix2 = Eigen::Matrix2d;
using Matrix4 = Eigen::Matrix4d;

/// Standard symplectic form: block-diagonal with [[0, 1], [-1, 0]] per mode.
inline Matrix symplectic_form(int n_modes) {
  if (n_modes < 1) {
    throw PreconditionError(fmt::format("symplectic_form: n_modes must be >= 1, got {}", n_modes));
  }
  Matrix omega = Matrix::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

/// Real symmetric 2n x 2n quadrature covariance matrix.
///
/// Construction checks shape and symmetry only; physicality is checked by the
/// operations that need it so that non-physical input can be rejected with a
/// PhysicalityError carrying the offending eigenvalue.
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(Matrix entries) : v_(std::move(entries)) {
    if (v_.rows() != v_.cols() || v_.rows() == 0 || v_.rows() % 2 != 0) {
      throw PreconditionError(
          fmt::format("covariance matrix must be square with even dimension, got {}x{}", v_.rows(), v_.cols()));
    }
    if (!v_.allFinite()) {
      throw NumericalDomainError("covariance matrix has non-finite entries");
    }
    const double asym = (v_ - v_.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol::kSymmetry) {
      throw PreconditionError(fmt::format("covariance matrix not symmetric (max asymmetry {:.3e})", asym));
    }
  }

  /// Symmetrizes (V + V^T)/2 before the symmetry check.
  static CovarianceMatrix symmetrized(const Matrix& entries) {
    return CovarianceMatrix(0.5 * (entries + entries.transpose()));
  }

  int n_modes() const noexcept { return static_cast<int>(v_.rows() / 2); }
  const Matrix& matrix() const noexcept { return v_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return v_(i, j); }

  /// Covariance of the modes [first, first + count).
  CovarianceMatrix submodes(int first, int count) const {
    if (first < 0 || count < 1 || first + count > n_modes()) {
      throw PreconditionError("submodes: mode range out of bounds");
    }
    return CovarianceMatrix(v_.block(2 * first, 2 * first, 2 * count, 2 * count));
  }

 private:
  Matrix v_;
};

/// The 2x2 blocks of a two-mode covariance [[A, C], [C^T, B]].
struct TwoModeBlocks {
  Matrix2 a;
  Matrix2 b;
  Matrix2 c;

  static TwoModeBlocks of(const CovarianceMatrix& v) {
    if (v.n_modes() != 2) {
      throw PreconditionError(fmt::format("expected a two-mode covariance, got {} modes", v.n_modes()));
    }
    const Matrix& m = v.matrix();
    return {m.block<2, 2>(0, 0), m.block<2, 2>(2, 2), m.block<2, 2>(0, 2)};
  }

  CovarianceMatrix reassemble() const {
    Matrix m(4, 4);
    m << a, c, c.transpose(), b;
    return CovarianceMatrix(m);
  }
};

struct NegativityResult {
  double eta_minus;  // smallest symplectic eigenvalue of the partial transpose
  double e_n;        // logarithmic negativity in bits
};

/// Smallest symplectic eigenvalue, i.e. the smallest |lambda| over the
/// eigenvalues of i*Omega*V.
///
/// For positive definite V the spectrum is obtained from the Hermitian matrix
/// i L^T Omega L (V = L L^T), which keeps small eigenvalues accurate when V
/// has entries many orders of magnitude larger than 1/2. Computed in extended
/// precision.
inline double min_symplectic_eigenvalue(const CovarianceMatrix& v) {
  using Wide = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using WideComplex = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;
  const Wide m = v.matrix().cast<long double>();
  const Wide omega = symplectic_form(v.n_modes()).cast<long double>();
  Eigen::LLT<Wide> llt(m);
  if (llt.info() == Eigen::Success) {
    const Wide l = llt.matrixL();
    const WideComplex h = std::complex<long double>(0.0L, 1.0L) * (l.transpose() * omega * l).cast<std::complex<long double>>();
    Eigen::SelfAdjointEigenSolver<WideComplex> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
      throw NumericalDomainError("min_symplectic_eigenvalue: Hermitian eigensolver failed");
    }
    return static_cast<double>(es.eigenvalues().cwiseAbs().minCoeff());
  }
  // Not positive definite: report what the general eigensolver sees.
  Eigen::EigenSolver<Matrix> es(symplectic_form(v.n_modes()) * v.matrix(), false);
  if (es.info() != Eigen::Success) {
    throw NumericalDomainError("min_symplectic_eigenvalue: eigensolver failed");
  }
  return es.eigenvalues().cwiseAbs().minCoeff();
}

inline void require_physical(const CovarianceMatrix& v, double tolerance = tol::kPhysicality,
                             const std::string& context = "covariance") {
  const double nu = min_symplectic_eigenvalue(v);
  if (nu < 0.5 - tolerance) {
    throw PhysicalityError(
        fmt::format("{} is not physical: symplectic eigenvalue {:.12g} < 1/2 - {:.1e}", context, nu, tolerance), nu);
  }
}

/// Logarithmic negativity of a two-mode Gaussian state.
///
/// eta^- is evaluated as sqrt(2 det V / (Sigma + sqrt(Sigma^2 - 4 det V))),
/// algebraically equal to sqrt((Sigma - sqrt(Sigma^2 - 4 det V)) / 2) but free
/// of cancellation for strongly squeezed states. The invariants are formed in
/// extended precision.
inline NegativityResult log_negativity(const CovarianceMatrix& v, double physicality_tolerance = tol::kPhysicality) {
  const TwoModeBlocks blocks = TwoModeBlocks::of(v);
  require_physical(v, physicality_tolerance, "log_negativity input");

  const long double sigma = blocks.a.cast<long double>().determinant() + blocks.b.cast<long double>().determinant() -
                            2.0L * blocks.c.cast<long double>().determinant();
  const long double det_v =
      Eigen::FullPivLU<Eigen::Matrix<long double, 4, 4>>(v.matrix().cast<long double>()).determinant();
  long double disc = sigma * sigma - 4.0L * det_v;
  if (disc < 0.0L) {
    if (disc < -tol::kDiscriminantClamp * std::max(1.0L, sigma * sigma)) {
      throw NumericalDomainError(
          fmt::format("log_negativity: Sigma^2 - 4 det V = {:.6e} < 0", static_cast<double>(disc)));
    }
    disc = 0.0L;
  }
  const long double denom = sigma + std::sqrt(disc);
  if (!(denom > 0.0L) || !(det_v > 0.0L)) {
    throw NumericalDomainError(fmt::format("log_negativity: degenerate invariants (Sigma={}, det V={})",
                                           static_cast<double>(sigma), static_cast<double>(det_v)));
  }
  const double eta_minus = static_cast<double>(std::sqrt(2.0L * det_v / denom));
  const double e_n = std::max(0.0, -std::log2(2.0 * eta_minus));
  return {eta_minus, e_n};
}

/// Optical vacuum on modes 1, 2 and a thermal mechanical mode.
inline CovarianceMatrix thermal_vacuum_initial(double n_th) {
  if (!(n_th >= 0.0) || !std::isfinite(n_th)) {
    throw PreconditionError(fmt::format("thermal occupation must be finite and >= 0, got {}", n_th));
  }
  Eigen::VectorXd diag(6);
  diag << 0.5, 0.5, 0.5, 0.5, n_th + 0.5, n_th + 0.5;
  return CovarianceMatrix(diag.asDiagonal().toDenseMatrix());
}

}  // namespace optomech
