#pragma once

// Fixed-step integration of the covariance equation dV/dt = M V + V M^T + D
// and extraction of intracavity entanglement time series.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "optomech/errors.hpp"
#include "optomech/gaussian.hpp"
#include "optomech/model.hpp"
#include "optomech/tolerances.hpp"

namespace optomech {

struct IntegrationConfig {
  double t_max = 0.0;
  double dt = 0.0;
  int sample_stride = 1;

  /// Checks the step against the stiffness guard dt <= 0.01 / rate_scale.
  void validate(double rate_scale) const {
    if (!(dt > 0.0) || !(t_max > 0.0) || !std::isfinite(t_max)) {
      throw PreconditionError(fmt::format("IntegrationConfig: need t_max > 0 and dt > 0 (t_max={}, dt={})", t_max, dt));
    }
    if (sample_stride < 1) {
      throw PreconditionError("IntegrationConfig: sample_stride must be >= 1");
    }
    if (rate_scale > 0.0 && dt > tol::kStiffnessFactor / rate_scale * (1.0 + 1e-12)) {
      throw PreconditionError(
          fmt::format("IntegrationConfig: dt={} exceeds stiffness guard {} / {}", dt, tol::kStiffnessFactor, rate_scale));
    }
    if (t_max / dt > tol::kMaxSteps) {
      throw PreconditionError(fmt::format("IntegrationConfig: t_max/dt = {} exceeds {}", t_max / dt, tol::kMaxSteps));
    }
  }

  std::int64_t steps() const { return static_cast<std::int64_t>(std::llround(t_max / dt)); }
};

/// Largest absolute drift entry; the rate scale the step size is checked against.
template <typename Derived>
double drift_rate_scale(const Eigen::MatrixBase<Derived>& drift) {
  return drift.cwiseAbs().maxCoeff();
}

/// Classic RK4 on the Lyapunov equation with fixed-size matrices.
///
/// `observer(step, t, V)` is called at step 0, every `stride` steps, and at the
/// last step. Each increment is symmetrized and added with compensated
/// summation, so V stays exactly symmetric. Throws StabilityError once
/// trace(V) grows beyond kInstabilityGrowth times its initial value.
template <int N, typename Observer>
Eigen::Matrix<double, N, N> integrate_lyapunov(const Eigen::Matrix<double, N, N>& drift,
                                               const Eigen::Matrix<double, N, N>& diffusion,
                                               Eigen::Matrix<double, N, N> v, double dt, std::int64_t steps,
                                               std::int64_t stride, Observer&& observer) {
  using Mat = Eigen::Matrix<double, N, N>;
  const auto rhs = [&](const Mat& x) -> Mat {
    const Mat mx = drift * x;
    return mx + mx.transpose() + diffusion;
  };
  const double trace_limit = tol::kInstabilityGrowth * std::max(std::abs(v.trace()), 1.0);
  Mat carry = Mat::Zero();
  v = (0.5 * (v + v.transpose())).eval();

  observer(std::int64_t{0}, 0.0, v);
  for (std::int64_t step = 1; step <= steps; ++step) {
    const Mat k1 = rhs(v);
    const Mat k2 = rhs(v + 0.5 * dt * k1);
    const Mat k3 = rhs(v + 0.5 * dt * k2);
    const Mat k4 = rhs(v + dt * k3);
    Mat inc = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    inc = (0.5 * (inc + inc.transpose())).eval();
    // Kahan-compensated update.
    const Mat y = inc - carry;
    const Mat sum = v + y;
    carry = (sum - v) - y;
    v = sum;

    if (!(std::abs(v.trace()) <= trace_limit)) {
      throw StabilityError(fmt::format("covariance grows without bound: trace {:.3e} at step {} (t = {:.6g})",
                                       v.trace(), step, step * dt));
    }
    if (step % stride == 0 || step == steps) {
      observer(step, step * dt, v);
    }
  }
  return v;
}

struct TimedCovariance {
  double t;
  CovarianceMatrix v;
};

/// Integrates from v0 over [0, t_max], returning every recorded sample.
/// Each sample must satisfy the physicality bound 1/2 - 1e-6.
inline std::vector<TimedCovariance> integrate_covariance(const DriftDiffusion& dd, const CovarianceMatrix& v0,
                                                         const IntegrationConfig& cfg) {
  if (v0.n_modes() != 3) {
    throw PreconditionError("integrate_covariance: expected a three-mode initial covariance");
  }
  require_physical(v0, tol::kPhysicality, "initial covariance");
  cfg.validate(drift_rate_scale(dd.drift));

  std::vector<TimedCovariance> samples;
  samples.reserve(static_cast<std::size_t>(cfg.steps() / cfg.sample_stride + 2));
  const Matrix6 start = v0.matrix();
  integrate_lyapunov<6>(dd.drift, dd.diffusion, start, cfg.dt, cfg.steps(), cfg.sample_stride,
                        [&](std::int64_t step, double t, const Matrix6& v) {
                          CovarianceMatrix cv{Matrix(v)};
                          const double nu = min_symplectic_eigenvalue(cv);
                          if (nu < 0.5 - tol::kIntegrationPhysicality) {
                            throw PhysicalityError(
                                fmt::format("integration aborted at step {} (t = {:.9g}): symplectic eigenvalue {:.12g}",
                                            step, t, nu),
                                nu);
                          }
                          samples.push_back({t, std::move(cv)});
                        });
  return samples;
}

struct Peak {
  double time;
  double value;
};

struct EntanglementSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<Peak> peaks;
};

/// Interior local maxima: v[i] > v[i-1] and v[i] >= v[i+1]. The strict left
/// comparison keeps flat stretches (e.g. an all-zero series) peak-free.
inline std::vector<Peak> find_peaks(const std::vector<double>& times, const std::vector<double>& values) {
  std::vector<Peak> peaks;
  for (std::size_t i = 1; i + 1 < values.size(); ++i) {
    if (values[i] > values[i - 1] && values[i] >= values[i + 1]) {
      peaks.push_back({times[i], values[i]});
    }
  }
  return peaks;
}

inline EntanglementSeries entanglement_series(const std::vector<TimedCovariance>& samples) {
  if (samples.empty()) {
    throw PreconditionError("entanglement_series: empty sample sequence");
  }
  EntanglementSeries series;
  series.times.reserve(samples.size());
  series.values.reserve(samples.size());
  for (const auto& s : samples) {
    if (!series.times.empty() && !(s.t > series.times.back())) {
      throw PreconditionError("entanglement_series: times must be strictly ascending");
    }
    series.times.push_back(s.t);
    series.values.push_back(log_negativity(s.v.submodes(0, 2), tol::kIntegrationPhysicality).e_n);
  }
  series.peaks = find_peaks(series.times, series.values);
  return series;
}

/// Global maximum; ties resolve to the earliest time.
inline Peak max_negativity(const EntanglementSeries& series) {
  if (series.values.empty()) {
    throw PreconditionError("max_negativity: empty series");
  }
  Peak best{series.times.front(), series.values.front()};
  for (std::size_t i = 1; i < series.values.size(); ++i) {
    if (series.values[i] > best.value) {
      best = {series.times[i], series.values[i]};
    }
  }
  return best;
}

/// ||V_bb(t) - V_bb(0)||_F + ||V_ob(t)||_F, where V_bb is the mechanical 2x2
/// block and V_ob the 4x2 optical-mechanical cross block.
inline double mechanical_return_residual(const CovarianceMatrix& v_t, const CovarianceMatrix& v0) {
  if (v_t.n_modes() != 3 || v0.n_modes() != 3) {
    throw PreconditionError("mechanical_return_residual: expected three-mode covariances");
  }
  const Matrix& a = v_t.matrix();
  const Matrix& b = v0.matrix();
  return (a.block<2, 2>(4, 4) - b.block<2, 2>(4, 4)).norm() + a.block<4, 2>(0, 4).norm();
}

}  // namespace optomech
