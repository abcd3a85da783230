#pragma once

// Drift and diffusion matrices of the rotating-frame Langevin equations in the
// resolved-sideband limit. All rates are in units of the mechanical linewidth.

#include <algorithm>
#include <cmath>
#include <string_view>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "optomech/errors.hpp"

namespace optomech {

using Matrix6 = Eigen::Matrix<double, 6, 6>;

enum class Scheme { SorensenMolmer, Bogoliubov };

inline std::string_view to_string(Scheme s) {
  return s == Scheme::SorensenMolmer ? "sm" : "bogoliubov";
}

struct SystemParams {
  double g1 = 0.0;
  double g2 = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double delta = 0.0;
  // Unit of all rates. Zero is allowed for lossless reference runs.
  double gamma = 1.0;
  double n_th = 0.0;

  void validate() const {
    for (double r : {g1, g2, kappa1, kappa2, delta, gamma, n_th}) {
      if (!std::isfinite(r) || r < 0.0) {
        throw PreconditionError(
            fmt::format("SystemParams: rates and n_th must be finite and >= 0 (g1={} g2={} kappa1={} kappa2={} "
                        "delta={} gamma={} n_th={})",
                        g1, g2, kappa1, kappa2, delta, gamma, n_th));
      }
    }
  }

  /// Largest rate of the model; sets the integrator's stiffness guard.
  double max_rate() const { return std::max({g1, g2, kappa1, kappa2, delta, gamma}); }
};

/// dV/dt = M V + V M^T + D.
struct DriftDiffusion {
  Matrix6 drift;
  Matrix6 diffusion;
};

// Quadrature indices of the three-mode state.
namespace idx {
inline constexpr int x1 = 0, p1 = 1, x2 = 2, p2 = 3, xb = 4, pb = 5;
}

/// Expands
///   da1/dt    = -kappa1/2 a1 - i g1 b - sqrt(kappa1) a_in1
///   da2^dag/dt = -kappa2/2 a2^dag + i g2 b - sqrt(kappa2) a_in2^dag
///   db/dt     = -(i delta + gamma/2) b - i g1 a1 - i g2 a2^dag - sqrt(gamma) b_in
/// into quadratures, with vacuum optical inputs and a thermal mechanical bath.
inline DriftDiffusion build_drift_diffusion(const SystemParams& p, Scheme scheme) {
  p.validate();
  if (scheme == Scheme::SorensenMolmer && !(p.delta > 0.0)) {
    throw PreconditionError("Sorensen-Molmer scheme requires delta > 0");
  }
  if (scheme == Scheme::Bogoliubov && p.delta != 0.0) {
    throw PreconditionError("Bogoliubov scheme is defined on sideband resonance (delta = 0)");
  }
  using namespace idx;
  Matrix6 m = Matrix6::Zero();
  m(x1, x1) = m(p1, p1) = -0.5 * p.kappa1;
  m(x2, x2) = m(p2, p2) = -0.5 * p.kappa2;
  m(xb, xb) = m(pb, pb) = -0.5 * p.gamma;

  m(x1, pb) = p.g1;
  m(p1, xb) = -p.g1;
  m(x2, pb) = -p.g2;
  m(p2, xb) = -p.g2;

  m(xb, pb) = p.delta;
  m(xb, p1) = p.g1;
  m(xb, p2) = -p.g2;
  m(pb, xb) = -p.delta;
  m(pb, x1) = -p.g1;
  m(pb, x2) = -p.g2;

  Eigen::Matrix<double, 6, 1> d;
  const double thermal = p.gamma * (p.n_th + 0.5);
  d << 0.5 * p.kappa1, 0.5 * p.kappa1, 0.5 * p.kappa2, 0.5 * p.kappa2, thermal, thermal;
  return {m, d.asDiagonal().toDenseMatrix()};
}

/// Largest real part of the drift spectrum; positive means unbounded growth.
inline double stability_margin(const DriftDiffusion& dd) {
  if (!dd.drift.allFinite()) {
    throw NumericalDomainError("stability_margin: drift has non-finite entries");
  }
  Eigen::EigenSolver<Matrix6> es(dd.drift, false);
  if (es.info() != Eigen::Success) {
    throw NumericalDomainError("stability_margin: eigensolver failed");
  }
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace optomech
