#pragma once

namespace optomech::tol {

// Entry-pair asymmetry accepted when constructing a covariance matrix.
inline constexpr double kSymmetry = 1e-12;

// Minimum symplectic eigenvalue must be >= 1/2 - kPhysicality.
inline constexpr double kPhysicality = 1e-8;

// Looser physicality bound for samples produced by the ODE integrator.
inline constexpr double kIntegrationPhysicality = 1e-6;

// Negative discriminants above -kDiscriminantClamp * max(1, Sigma^2) are set to 0.
inline constexpr double kDiscriminantClamp = 1e-12;

// dt * (largest rate) must not exceed this.
inline constexpr double kStiffnessFactor = 0.01;

inline constexpr double kMaxSteps = 1e8;

// Integration aborts once trace(V) exceeds this multiple of its initial value.
inline constexpr double kInstabilityGrowth = 1e12;

// Relative tolerance for S^T Omega S = Omega.
inline constexpr double kSymplecticity = 1e-12;

}  // namespace optomech::tol
