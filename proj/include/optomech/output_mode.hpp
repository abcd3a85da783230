#pragma once

// Bad-cavity limit: optical modes adiabatically eliminated, entanglement of
// the flat-top output modes A_i = tau^{-1/2} int_0^tau a_out,i dt.
//
// With G_i = g_i^2 / kappa_i, Gamma = 2 G1 - 2 G2 + gamma/2 and z = Gamma + i delta:
//   db/dt      = -z b + 2i sqrt(G1) a_in1 + 2i sqrt(G2) a_in2^dag - sqrt(gamma) b_in
//   a_out1     = -2i sqrt(G1) b - a_in1
//   a_out2^dag =  2i sqrt(G2) b - a_in2^dag

#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <gsl/gsl_integration.h>

#include "optomech/dynamics.hpp"
#include "optomech/errors.hpp"
#include "optomech/gaussian.hpp"
#include "optomech/model.hpp"
#include "optomech/tolerances.hpp"

namespace optomech {

struct BadCavityParams {
  double G1 = 0.0;
  double G2 = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double delta = 0.0;
  double n_th = 0.0;
  double gamma = 1.0;

  double Gamma() const { return 2.0 * G1 - 2.0 * G2 + 0.5 * gamma; }
  std::complex<double> z() const { return {Gamma(), delta}; }

  void validate() const {
    for (double r : {G1, G2, kappa1, kappa2, delta, n_th, gamma}) {
      if (!std::isfinite(r) || r < 0.0) {
        throw PreconditionError(fmt::format(
            "BadCavityParams: rates and n_th must be finite and >= 0 (G1={} G2={} kappa1={} kappa2={} delta={} "
            "n_th={} gamma={})",
            G1, G2, kappa1, kappa2, delta, n_th, gamma));
      }
    }
  }

  /// Coupling-to-linewidth ratio g_i / kappa_i = sqrt(G_i / kappa_i).
  double coupling_ratio(int mode) const {
    const double big_g = mode == 1 ? G1 : G2;
    const double kappa = mode == 1 ? kappa1 : kappa2;
    if (big_g == 0.0) return 0.0;
    if (kappa <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(big_g / kappa);
  }

  /// Adiabatic elimination accepted for g_i / kappa_i <= 0.5.
  bool bad_cavity_valid() const { return coupling_ratio(1) <= 0.5 && coupling_ratio(2) <= 0.5; }
  /// kappa_i >= 10 g_i.
  bool deep_bad_cavity() const { return coupling_ratio(1) <= 0.1 && coupling_ratio(2) <= 0.1; }

  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    if (!bad_cavity_valid()) {
      out.push_back(fmt::format("bad-cavity approximation questionable: g/kappa = ({:.3g}, {:.3g}) exceeds 0.5",
                                coupling_ratio(1), coupling_ratio(2)));
    } else if (!deep_bad_cavity()) {
      out.push_back(fmt::format("g/kappa = ({:.3g}, {:.3g}) is above 0.1; adiabatic elimination is approximate",
                                coupling_ratio(1), coupling_ratio(2)));
    }
    return out;
  }
};

namespace ext {
// State ordering of the extended system: mechanics, then the quadratures of
// the unnormalized accumulators B_1 = int a_out,1 and B_2 = int a_out,2.
inline constexpr int xb = 0, pb = 1, X1 = 2, P1 = 3, X2 = 4, P2 = 5;
}  // namespace ext

inline DriftDiffusion build_extended_system(const BadCavityParams& p) {
  p.validate();
  using namespace ext;
  const double gam = p.Gamma();
  const double s1 = std::sqrt(p.G1);
  const double s2 = std::sqrt(p.G2);

  Matrix6 m = Matrix6::Zero();
  m(xb, xb) = m(pb, pb) = -gam;
  m(xb, pb) = p.delta;
  m(pb, xb) = -p.delta;
  m(X1, pb) = 2.0 * s1;
  m(P1, xb) = -2.0 * s1;
  m(X2, pb) = -2.0 * s2;
  m(P2, xb) = -2.0 * s2;

  // Noise loadings on (Re a_in1, Im a_in1, Re a_in2, Im a_in2, Re b_in, Im b_in),
  // each scaled by sqrt(2). The same input enters the mechanics and the
  // directly reflected part of the output, which produces the cross blocks.
  Matrix6 loading = Matrix6::Zero();
  const double sg = std::sqrt(p.gamma);
  loading.row(xb) << 0.0, -2.0 * s1, 0.0, 2.0 * s2, -sg, 0.0;
  loading.row(pb) << 2.0 * s1, 0.0, 2.0 * s2, 0.0, 0.0, -sg;
  loading(X1, 0) = -1.0;
  loading(P1, 1) = -1.0;
  loading(X2, 2) = -1.0;
  loading(P2, 3) = -1.0;

  Eigen::Matrix<double, 6, 1> noise;
  noise << 0.5, 0.5, 0.5, 0.5, p.n_th + 0.5, p.n_th + 0.5;
  const Matrix6 d = loading * noise.asDiagonal() * loading.transpose();
  return {m, 0.5 * (d + d.transpose())};
}

struct OutputModeResult {
  double tau;
  CovarianceMatrix covariance;
  double e_n;
  std::vector<std::string> warnings;
};

struct OutputModeOptions {
  // Step size is step_factor / (largest drift entry).
  double step_factor = tol::kStiffnessFactor;
};

/// Output-mode results at every tau of an ascending grid, integrating the
/// extended system once and stopping exactly on each grid point.
inline std::vector<OutputModeResult> output_modes_over(const BadCavityParams& p, const std::vector<double>& tau_grid,
                                                       const OutputModeOptions& opts = {}) {
  if (tau_grid.empty()) {
    throw PreconditionError("output mode: empty tau grid");
  }
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] > 0.0) || (i > 0 && !(tau_grid[i] > tau_grid[i - 1]))) {
      throw PreconditionError("output mode: tau grid must be positive and strictly ascending");
    }
  }
  const DriftDiffusion dd = build_extended_system(p);
  const double gam = p.Gamma();
  if (gam < 0.0 && tau_grid.back() > 1.0 / std::abs(gam)) {
    throw StabilityError(fmt::format("effective damping Gamma = {} < 0 (G2 > G1): tau = {} exceeds 1/|Gamma| = {}",
                                     gam, tau_grid.back(), 1.0 / std::abs(gam)));
  }
  if (!(opts.step_factor > 0.0) || opts.step_factor > tol::kStiffnessFactor) {
    throw PreconditionError("output mode: step_factor must lie in (0, 0.01]");
  }
  const double dt_max = opts.step_factor / std::max(drift_rate_scale(dd.drift), 1e-300);
  const std::vector<std::string> warnings = p.warnings();

  Matrix6 v = Matrix6::Zero();
  v(ext::xb, ext::xb) = v(ext::pb, ext::pb) = p.n_th + 0.5;

  std::vector<OutputModeResult> results;
  results.reserve(tau_grid.size());
  double t = 0.0;
  for (double tau : tau_grid) {
    const double span = tau - t;
    const auto steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(span / dt_max - 1e-9)));
    v = integrate_lyapunov<6>(dd.drift, dd.diffusion, v, span / static_cast<double>(steps), steps, steps,
                              [](std::int64_t, double, const Matrix6&) {});
    t = tau;

    const Matrix4 acc = v.block<4, 4>(2, 2) / tau;
    CovarianceMatrix cov = CovarianceMatrix::symmetrized(acc);
    const double nu = min_symplectic_eigenvalue(cov);
    if (nu < 0.5 - tol::kIntegrationPhysicality) {
      throw PhysicalityError(
          fmt::format("output-mode covariance at tau = {:.9g} is not physical: symplectic eigenvalue {:.12g}", tau, nu),
          nu);
    }
    const double e_n = log_negativity(cov, tol::kIntegrationPhysicality).e_n;
    results.push_back({tau, std::move(cov), e_n, warnings});
  }
  return results;
}

inline OutputModeResult output_mode_covariance(const BadCavityParams& p, double tau, const OutputModeOptions& opts = {}) {
  if (!(tau > 0.0)) {
    throw PreconditionError(fmt::format("output_mode_covariance: tau must be > 0, got {}", tau));
  }
  return output_modes_over(p, {tau}, opts).front();
}

inline EntanglementSeries entanglement_vs_duration(const BadCavityParams& p, const std::vector<double>& tau_grid,
                                                   const OutputModeOptions& opts = {}) {
  const auto results = output_modes_over(p, tau_grid, opts);
  EntanglementSeries series;
  for (const auto& r : results) {
    series.times.push_back(r.tau);
    series.values.push_back(r.e_n);
  }
  series.peaks = find_peaks(series.times, series.values);
  return series;
}

namespace detail {

struct GlTableDeleter {
  void operator()(gsl_integration_glfixed_table* t) const { gsl_integration_glfixed_table_free(t); }
};

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendre gauss_legendre(int n, double a, double b) {
  std::unique_ptr<gsl_integration_glfixed_table, GlTableDeleter> table(
      gsl_integration_glfixed_table_alloc(static_cast<size_t>(n)));
  if (!table) {
    throw NumericalDomainError(fmt::format("could not build a {}-point Gauss-Legendre rule", n));
  }
  GaussLegendre rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(a, b, static_cast<size_t>(i), &rule.nodes[i], &rule.weights[i], table.get());
  }
  return rule;
}

}  // namespace detail

/// Output-mode covariance from the two-time correlations of a_out,i.
///
/// b(t) = b(0) e^{-zt} + int_0^t e^{-z(t-s)} xi(s) ds gives, for t >= t',
///   <b(t) b*(t')>    = e^{-zt - conj(z) t'} [n0 + N (e^{2 Gamma t'} - 1) / (2 Gamma)]
///   <b(t) a_in1*(t')> = i sqrt(G1) e^{-z(t - t')}
///   <b(t) a_in2(t')>  = i sqrt(G2) e^{-z(t - t')}
/// with n0 = n_th + 1/2 and N = 2 G1 + 2 G2 + gamma n0 (symmetrized moments).
/// Inputs are delta-correlated with strength 1/2, which integrates to tau/2.
/// The smooth parts are integrated over [0, tau]^2 split along the diagonal,
/// each triangle with a tensor Gauss-Legendre rule of grid_points nodes per
/// dimension (t' = t u).
inline CovarianceMatrix double_integral_oracle(const BadCavityParams& p, double tau, int grid_points) {
  p.validate();
  if (grid_points < 500) {
    throw PreconditionError("double_integral_oracle: grid_points must be >= 500");
  }
  if (!(tau > 0.0)) {
    throw PreconditionError("double_integral_oracle: tau must be > 0");
  }
  using cd = std::complex<double>;
  const cd i1{0.0, 1.0};
  const cd z = p.z();
  const double gam = p.Gamma();
  const double n0 = p.n_th + 0.5;
  const double drive = 2.0 * p.G1 + 2.0 * p.G2 + p.gamma * n0;

  const auto outer = detail::gauss_legendre(grid_points, 0.0, tau);
  const auto inner = detail::gauss_legendre(grid_points, 0.0, 1.0);

  // Lower-triangle (t > t') integrals of <b(t) b*(t')> and e^{-z(t - t')}.
  cd tri_bb{0.0, 0.0};
  cd tri_kernel{0.0, 0.0};
  for (int i = 0; i < grid_points; ++i) {
    const double t = outer.nodes[i];
    const cd decay_t = std::exp(-z * t);
    cd row_bb{0.0, 0.0};
    cd row_kernel{0.0, 0.0};
    for (int j = 0; j < grid_points; ++j) {
      const double tp = t * inner.nodes[j];
      const cd decay_tp = std::exp(-z * tp);
      const double growth = gam != 0.0 ? std::expm1(2.0 * gam * tp) / (2.0 * gam) : tp;
      row_bb += inner.weights[j] * decay_t * std::conj(decay_tp) * (n0 + drive * growth);
      row_kernel += inner.weights[j] * decay_t / decay_tp;
    }
    tri_bb += outer.weights[i] * t * row_bb;
    tri_kernel += outer.weights[i] * t * row_kernel;
  }

  // Elementary processes: b, b*, a_in1, a_in1*, a_in2, a_in2*.
  enum { B, BC, A1, A1C, A2, A2C, kKinds };
  Eigen::Matrix<cd, kKinds, kKinds> lower = Eigen::Matrix<cd, kKinds, kKinds>::Zero();
  const double s1 = std::sqrt(p.G1);
  const double s2 = std::sqrt(p.G2);
  lower(B, BC) = tri_bb;
  lower(BC, B) = std::conj(tri_bb);
  lower(B, A1C) = i1 * s1 * tri_kernel;
  lower(BC, A1) = std::conj(lower(B, A1C));
  lower(B, A2) = i1 * s2 * tri_kernel;
  lower(BC, A2C) = std::conj(lower(B, A2));

  // Full-square integrals: the t < t' triangle equals the transposed lower one.
  Eigen::Matrix<cd, kKinds, kKinds> full = lower + lower.transpose();
  full(A1, A1C) += 0.5 * tau;
  full(A1C, A1) += 0.5 * tau;
  full(A2, A2C) += 0.5 * tau;
  full(A2C, A2) += 0.5 * tau;

  // Integrands of (B1, B1*, B2, B2*) in terms of the elementary processes.
  Eigen::Matrix<cd, 4, kKinds> coeff = Eigen::Matrix<cd, 4, kKinds>::Zero();
  coeff(0, B) = -2.0 * i1 * s1;
  coeff(0, A1) = -1.0;
  coeff(1, BC) = 2.0 * i1 * s1;
  coeff(1, A1C) = -1.0;
  coeff(2, BC) = -2.0 * i1 * s2;
  coeff(2, A2) = -1.0;
  coeff(3, B) = 2.0 * i1 * s2;
  coeff(3, A2C) = -1.0;
  const Eigen::Matrix<cd, 4, 4> moments = coeff * full * coeff.transpose();

  // x = (a + a*)/sqrt 2, p = i(a* - a)/sqrt 2.
  const double h = 1.0 / std::sqrt(2.0);
  Eigen::Matrix<cd, 4, 4> quad = Eigen::Matrix<cd, 4, 4>::Zero();
  quad(0, 0) = h;
  quad(0, 1) = h;
  quad(1, 0) = -i1 * h;
  quad(1, 1) = i1 * h;
  quad(2, 2) = h;
  quad(2, 3) = h;
  quad(3, 2) = -i1 * h;
  quad(3, 3) = i1 * h;
  const Matrix4 v = (quad * moments * quad.transpose()).real() / tau;
  return CovarianceMatrix::symmetrized(v);
}

}  // namespace optomech
