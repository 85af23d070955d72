#pragma once

#include "nsgrf/coefficients.hpp"

namespace nsgrf {

/// Modified Bessel function of the second kind, order one, for x > 0.
double bessel_k1(double x);

/// (κd) K₁(κd), with value 1 at d = 0.
double matern_order1_correlation(double kappa, double distance);

/// 1 / (4π κ² √det H), the marginal variance of the stationary solution on the plane.
/// Throws std::invalid_argument unless κ² > 0 and H is positive definite.
double analytic_marginal_variance(double kappa_sq, const Sym2& h);

struct StationaryCharacterization {
  double lambda1 = 0.0;  // larger eigenvalue
  double lambda2 = 0.0;
  double theta = 0.0;    // angle of the lambda1 eigenvector, in (−π/2, π/2]; 0 when isotropic
  double sigma_m_sq = 0.0;
};

StationaryCharacterization characterize_constant_H(double kappa_sq, const Sym2& h);

/// H = R(θ) diag(λ₁, λ₂) R(θ)ᵀ.
Sym2 compose_H(double lambda1, double lambda2, double theta);

}  // namespace nsgrf
