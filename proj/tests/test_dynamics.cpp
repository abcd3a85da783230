#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "optomech/dynamics.hpp"
#include "optomech/propagator.hpp"

using namespace optomech;
using std::numbers::pi;

namespace {

// dt is the largest step inside the stiffness guard that lands exactly on t_max.
IntegrationConfig landing_grid(const SystemParams& p, double t_max, int stride = 1) {
  const auto steps = std::ceil(t_max * p.max_rate() / tol::kStiffnessFactor);
  return {t_max, t_max / steps, stride};
}

std::vector<TimedCovariance> lossless_run(double ratio, double t_max, double n_th = 0.0) {
  const double delta = 1000.0;
  const SystemParams p{ratio * delta, ratio * delta, 0.0, 0.0, delta, 0.0, n_th};
  const auto dd = build_drift_diffusion(p, Scheme::SorensenMolmer);
  return integrate_covariance(dd, thermal_vacuum_initial(n_th), landing_grid(p, t_max));
}

}  // namespace

TEST(Lyapunov, FreeRotationKeepsThermalState) {
  Matrix2 m;
  m << 0.0, 3.0, -3.0, 0.0;
  Matrix2 v = 2.5 * Matrix2::Identity();
  v = integrate_lyapunov<2>(m, Matrix2::Zero(), v, 1e-3, 1000, 1000, [](auto, auto, const auto&) {});
  EXPECT_LT((v - 2.5 * Matrix2::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lyapunov, DampedModeRelaxesToBath) {
  Matrix2 m = -0.5 * Matrix2::Identity();
  const Matrix2 d = 7.5 * Matrix2::Identity();
  Matrix2 v = 0.5 * Matrix2::Identity();
  v = integrate_lyapunov<2>(m, d, v, 1e-2, 4000, 4000, [](auto, auto, const auto&) {});
  EXPECT_NEAR(v(0, 0), 7.5, 1e-9);
}

TEST(Lyapunov, ObserverSeesStrideAndLastStep) {
  std::vector<std::int64_t> seen;
  integrate_lyapunov<2>(Matrix2::Zero(), Matrix2::Zero(), Matrix2::Identity().eval(), 0.1, 10, 4,
                        [&](std::int64_t step, double, const Matrix2&) { seen.push_back(step); });
  EXPECT_EQ(seen, (std::vector<std::int64_t>{0, 4, 8, 10}));
}

TEST(Lyapunov, InstabilityIsReported) {
  const Matrix2 m = 50.0 * Matrix2::Identity();
  EXPECT_THROW(integrate_lyapunov<2>(m, Matrix2::Zero(), Matrix2::Identity().eval(), 1e-3, 1000, 1000,
                                     [](auto, auto, const auto&) {}),
               StabilityError);
}

TEST(Integration, RejectsBadGrids) {
  const SystemParams p{4000.0, 4000.0, 10.0, 10.0, 1000.0, 1.0, 10.0};
  const auto dd = build_drift_diffusion(p, Scheme::SorensenMolmer);
  EXPECT_THROW(integrate_covariance(dd, thermal_vacuum_initial(10.0), {0.01, 1e-5, 1}), PreconditionError);
  EXPECT_THROW(integrate_covariance(dd, thermal_vacuum_initial(10.0), {0.01, 0.0, 1}), PreconditionError);
  EXPECT_THROW(integrate_covariance(dd, thermal_vacuum_initial(10.0), {-1.0, 1e-6, 1}), PreconditionError);
  EXPECT_THROW(integrate_covariance(dd, CovarianceMatrix(0.5 * Matrix::Identity(4, 4)), {0.01, 1e-6, 1}),
               PreconditionError);
}

TEST(Integration, LosslessFlowPreservesDeterminant) {
  const auto samples = lossless_run(1.0, 3e-3, 5.0);
  const double det0 = samples.front().v.matrix().determinant();
  for (const auto& s : samples) EXPECT_NEAR(s.v.matrix().determinant() / det0, 1.0, 1e-8);
}

TEST(Integration, MechanicsReturnsAtTimingCondition) {
  for (double n_th : {0.0, 10.0, 100.0}) {
    const auto samples = lossless_run(4.0, 2.0 * pi / 1000.0, n_th);
    EXPECT_LT(mechanical_return_residual(samples.back().v, samples.front().v), 1e-6) << "n_th = " << n_th;
  }
  const auto half = lossless_run(4.0, pi / 1000.0, 10.0);
  EXPECT_GT(mechanical_return_residual(half.back().v, half.front().v), 1e-2);
}

TEST(Integration, LosslessNegativityMatchesClosedForm) {
  for (double ratio : {0.5, 1.0, 4.0}) {
    for (int n : {1, 2}) {
      const auto samples = lossless_run(ratio, 2.0 * pi * n / 1000.0);
      const double e_n = log_negativity(samples.back().v.submodes(0, 2), tol::kIntegrationPhysicality).e_n;
      const double expected = closed_form_logneg(bogoliubov_map(ratio * 1000.0, 1000.0, n).r);
      EXPECT_NEAR(e_n, expected, 1e-6 * expected) << "g/delta = " << ratio << ", n = " << n;
    }
  }
}

TEST(Series, FlatSeriesHasNoPeaks) {
  const std::vector<double> t{0, 1, 2, 3, 4}, v(5, 0.0);
  EXPECT_TRUE(find_peaks(t, v).empty());
  const std::vector<double> w{0, 1, 1, 0, 2};
  const auto peaks = find_peaks(t, w);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_EQ(peaks[0].time, 1.0);
}

TEST(Series, UncoupledSystemStaysSeparable) {
  const SystemParams p{0.0, 0.0, 10.0, 10.0, 1000.0, 1.0, 100.0};
  const auto dd = build_drift_diffusion(p, Scheme::SorensenMolmer);
  const auto series = entanglement_series(integrate_covariance(dd, thermal_vacuum_initial(100.0), {1e-3, 1e-6, 10}));
  for (double v : series.values) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(series.peaks.empty());
  EXPECT_EQ(max_negativity(series).time, 0.0);
}

TEST(Series, ThermalNoiseDegradesEntanglement) {
  const std::vector<double> occupations{0.0, 10.0, 100.0, 1000.0, 3000.0, 10000.0};
  double last = std::numeric_limits<double>::infinity();
  for (double n_th : occupations) {
    const SystemParams p{4000.0, 4000.0, 10.0, 10.0, 1000.0, 1.0, n_th};
    const auto dd = build_drift_diffusion(p, Scheme::SorensenMolmer);
    const auto series = entanglement_series(integrate_covariance(dd, thermal_vacuum_initial(n_th), {0.0066, 2.5e-6, 4}));
    const double best = max_negativity(series).value;
    EXPECT_LT(best, last) << "n_th = " << n_th;
    last = best;
  }
}

TEST(Series, RejectsEmptyInput) {
  EXPECT_THROW(entanglement_series({}), PreconditionError);
  EXPECT_THROW(max_negativity(EntanglementSeries{}), PreconditionError);
}
