#pragma once

// Exact lossless solution for equal couplings g1 = g2 = g:
//   U(t) = exp(-i A) exp(-i F x_b) exp(-i G p_b)
// with F, G linear and A quadratic in the commuting EPR variables
// x = x1 + x2 and p = p2 - p1. Only coefficient functions are evaluated.

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "optomech/errors.hpp"
#include "optomech/gaussian.hpp"
#include "optomech/tolerances.hpp"

namespace optomech {

/// F = f_x x + f_p p,  G = g_x x + g_p p,  A = a_xx x^2 + a_pp p^2 + a_xp p x.
struct PropagatorCoefficients {
  double f_x = 0.0;
  double f_p = 0.0;
  double g_x = 0.0;
  double g_p = 0.0;
  double a_xx = 0.0;
  double a_pp = 0.0;
  double a_xp = 0.0;
};

inline PropagatorCoefficients coefficient_functions(double g, double delta, double t) {
  if (delta == 0.0 || !std::isfinite(delta)) {
    throw PreconditionError("coefficient_functions: delta must be finite and nonzero");
  }
  if (!(t >= 0.0)) {
    throw PreconditionError(fmt::format("coefficient_functions: t must be >= 0, got {}", t));
  }
  const double phase = delta * t;
  const double s = std::sin(phase);
  const double c = std::cos(phase);
  const double ratio = g / delta;
  const double scale = -ratio * ratio;

  PropagatorCoefficients k;
  k.f_x = ratio * s;
  k.f_p = ratio * (1.0 - c);
  k.g_x = ratio * (1.0 - c);
  k.g_p = -ratio * s;
  k.a_xx = scale * (0.5 * phase - 0.25 * std::sin(2.0 * phase));
  k.a_pp = scale * (0.5 * phase + 0.25 * std::sin(2.0 * phase) - s);
  k.a_xp = scale * (0.5 * (std::cos(2.0 * phase) - 1.0) - (c - 1.0));
  return k;
}

/// Mode map a_i -> mu a_i + nu a_j^dag on the two optical modes.
struct BogoliubovMap {
  std::complex<double> mu{1.0, 0.0};
  std::complex<double> nu{0.0, 0.0};
  double r = 0.0;

  /// mu = 1 + i r, nu = i r.
  static BogoliubovMap from_squeezing(double r) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw PreconditionError(fmt::format("squeezing parameter must be finite and >= 0, got {}", r));
    }
    return {{1.0, r}, {0.0, r}, r};
  }

  /// 4x4 real symplectic matrix acting on (x1, p1, x2, p2).
  Matrix4 symplectic_matrix() const {
    const double mr = mu.real(), mi = mu.imag(), nr = nu.real(), ni = nu.imag();
    Matrix4 s;
    // clang-format off
    s << mr, -mi,  nr,  ni,
         mi,  mr,  ni, -nr,
         nr,  ni,  mr, -mi,
         ni, -nr,  mi,  mr;
    // clang-format on
    const Matrix omega = symplectic_form(2);
    const double defect = (s.transpose() * omega * s - omega).cwiseAbs().maxCoeff();
    if (defect > tol::kSymplecticity * std::max(1.0, s.squaredNorm())) {
      throw NumericalDomainError(fmt::format("Bogoliubov map is not symplectic (defect {:.3e})", defect));
    }
    return s;
  }
};

/// Optical mode map produced by the lossless evolution at t_n = 2 pi n / delta.
///
/// The propagator there is exp(i R (x^2 + p^2)) with R = pi n g^2 / delta^2,
/// whose adjoint action gives a_1 -> a_1 + 2 i R (a_1 + a_2^dag); hence
/// r = 2 pi n g^2 / delta^2 = g^2 t_n / delta.
inline BogoliubovMap bogoliubov_map(double g, double delta, int n) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw PreconditionError("bogoliubov_map: delta must be > 0");
  }
  if (n < 1) {
    throw PreconditionError("bogoliubov_map: n must be a positive integer");
  }
  const double ratio = g / delta;
  return BogoliubovMap::from_squeezing(2.0 * std::numbers::pi * n * ratio * ratio);
}

inline CovarianceMatrix apply_two_mode_map(const BogoliubovMap& map, const CovarianceMatrix& v_in) {
  if (v_in.n_modes() != 2) {
    throw PreconditionError("apply_two_mode_map: expected a two-mode covariance");
  }
  require_physical(v_in, tol::kPhysicality, "apply_two_mode_map input");
  const Matrix4 s = map.symplectic_matrix();
  return CovarianceMatrix::symmetrized(s * v_in.matrix() * s.transpose());
}

/// Closed-form negativity of the vacuum after the map with parameter r.
///
/// With a = 2r^4 + 2r^2 + 1/4 and b = 4r^8 + 8r^6 + 5r^4 + r^2 one has
/// a^2 - b = 1/16, so the log argument a - sqrt(b) is evaluated as
/// (1/16) / (a + sqrt(b)).
inline double closed_form_logneg(double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw PreconditionError(fmt::format("closed_form_logneg: r must be finite and >= 0, got {}", r));
  }
  const double r2 = r * r;
  const double r4 = r2 * r2;
  const double a = 2.0 * r4 + 2.0 * r2 + 0.25;
  const double b = 4.0 * r4 * r4 + 8.0 * r4 * r2 + 5.0 * r4 + r2;
  const double inner = 0.0625 / (a + std::sqrt(b));
  if (!(inner > 0.0) || !std::isfinite(inner)) {
    throw NumericalDomainError(fmt::format("closed_form_logneg: log argument {} not positive", inner));
  }
  return std::max(0.0, -0.5 * std::log2(inner) - 1.0);
}

}  // namespace optomech
