#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "optomech/gaussian.hpp"
#include "optomech/model.hpp"

using namespace optomech;
using cd = std::complex<double>;

namespace {

SystemParams fig2a(double n_th = 10.0) { return {4000.0, 4000.0, 10.0, 10.0, 1000.0, 1.0, n_th}; }
SystemParams fig2b(double n_th = 10.0) { return {4000.0, 3500.0, 10.0, 10.0, 0.0, 1.0, n_th}; }

// Drift rebuilt from the complex amplitudes (a1, a2^dag, b).
Matrix6 drift_from_amplitudes(const SystemParams& p) {
  const cd i{0.0, 1.0};
  Eigen::Matrix3cd k;
  // clang-format off
  k << -0.5 * p.kappa1, 0.0, -i * p.g1,
       0.0, -0.5 * p.kappa2, i * p.g2,
       -i * p.g1, -i * p.g2, -(i * p.delta + 0.5 * p.gamma);
  // clang-format on
  Eigen::Matrix<cd, 6, 6> big = Eigen::Matrix<cd, 6, 6>::Zero();
  big.block<3, 3>(0, 0) = k;
  big.block<3, 3>(3, 3) = k.conjugate();

  const double s = 1.0 / std::sqrt(2.0);
  const double sign[3] = {1.0, -1.0, 1.0};
  Eigen::Matrix<cd, 6, 6> t = Eigen::Matrix<cd, 6, 6>::Zero();
  for (int m = 0; m < 3; ++m) {
    t(m, 2 * m) = s;
    t(m, 2 * m + 1) = sign[m] * i * s;
    t(m + 3, 2 * m) = s;
    t(m + 3, 2 * m + 1) = -sign[m] * i * s;
  }
  const Eigen::Matrix<cd, 6, 6> m = t.inverse() * big * t;
  EXPECT_LT(m.imag().cwiseAbs().maxCoeff(), 1e-9);
  return m.real();
}

}  // namespace

TEST(Model, DecoupledDriftIsDiagonalDamping) {
  const SystemParams p{0.0, 0.0, 3.0, 5.0, 0.0, 2.0, 4.0};
  const auto dd = build_drift_diffusion(p, Scheme::Bogoliubov);
  Eigen::Matrix<double, 6, 1> expected;
  expected << -1.5, -1.5, -2.5, -2.5, -1.0, -1.0;
  EXPECT_TRUE(dd.drift.isApprox(Matrix6(expected.asDiagonal())));
  EXPECT_DOUBLE_EQ(dd.diffusion(idx::xb, idx::xb), 2.0 * 4.5);
  EXPECT_DOUBLE_EQ(dd.diffusion(idx::x2, idx::x2), 2.5);
}

TEST(Model, CoherentPartIsHamiltonian) {
  for (const auto& [p, scheme] : {std::pair{fig2a(), Scheme::SorensenMolmer}, {fig2b(), Scheme::Bogoliubov}}) {
    const auto dd = build_drift_diffusion(p, scheme);
    Eigen::Matrix<double, 6, 1> rates;
    rates << p.kappa1, p.kappa1, p.kappa2, p.kappa2, p.gamma, p.gamma;
    const Matrix6 omega = symplectic_form(3);
    const Matrix6 coherent = dd.drift + 0.5 * Matrix6(rates.asDiagonal());
    const Matrix6 h = -omega * coherent;
    EXPECT_LT((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_DOUBLE_EQ(h(idx::x1, idx::xb), p.g1);
    EXPECT_DOUBLE_EQ(h(idx::p1, idx::pb), p.g1);
    EXPECT_DOUBLE_EQ(h(idx::x2, idx::xb), p.g2);
    EXPECT_DOUBLE_EQ(h(idx::p2, idx::pb), -p.g2);
    EXPECT_DOUBLE_EQ(h(idx::xb, idx::xb), p.delta);
    EXPECT_DOUBLE_EQ(h(idx::x1, idx::x2), 0.0);
  }
}

TEST(Model, MatchesComplexAmplitudeEquations) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const SystemParams p{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const auto dd = build_drift_diffusion(p, Scheme::SorensenMolmer);
    EXPECT_LT((dd.drift - drift_from_amplitudes(p)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Model, LinearInRates) {
  const SystemParams p = fig2a(7.0);
  SystemParams twice = p;
  twice.g1 *= 2;
  twice.g2 *= 2;
  twice.kappa1 *= 2;
  twice.kappa2 *= 2;
  twice.delta *= 2;
  twice.gamma *= 2;
  const auto a = build_drift_diffusion(p, Scheme::SorensenMolmer);
  const auto b = build_drift_diffusion(twice, Scheme::SorensenMolmer);
  EXPECT_TRUE(b.drift.isApprox(2.0 * a.drift));
  EXPECT_TRUE(b.diffusion.isApprox(2.0 * a.diffusion));
}

TEST(Model, DiffusionIndependentOfCouplings) {
  SystemParams p = fig2a(42.0);
  const auto a = build_drift_diffusion(p, Scheme::SorensenMolmer);
  p.g1 = 1.0;
  p.g2 = 17.0;
  p.delta = 3.0;
  const auto b = build_drift_diffusion(p, Scheme::SorensenMolmer);
  EXPECT_EQ(a.diffusion, b.diffusion);
}

TEST(Model, SchemePreconditions) {
  EXPECT_THROW(build_drift_diffusion(fig2b(), Scheme::SorensenMolmer), PreconditionError);
  EXPECT_THROW(build_drift_diffusion(fig2a(), Scheme::Bogoliubov), PreconditionError);
  SystemParams neg = fig2a();
  neg.kappa1 = -1.0;
  EXPECT_THROW(build_drift_diffusion(neg, Scheme::SorensenMolmer), PreconditionError);
  EXPECT_EQ(to_string(Scheme::SorensenMolmer), "sm");
  EXPECT_EQ(to_string(Scheme::Bogoliubov), "bogoliubov");
}

TEST(Model, StabilityMargins) {
  EXPECT_LE(stability_margin(build_drift_diffusion(fig2a(), Scheme::SorensenMolmer)), 1e-9);
  EXPECT_LE(stability_margin(build_drift_diffusion(fig2b(), Scheme::Bogoliubov)), 1e-9);
  const SystemParams amplifying{1000.0, 2000.0, 10.0, 10.0, 0.0, 1.0, 0.0};
  EXPECT_GT(stability_margin(build_drift_diffusion(amplifying, Scheme::Bogoliubov)), 100.0);
}
