#include "nsgrf/analytic.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nsgrf {

namespace {

constexpr double kEuler = 0.57721566490153286061;

// x <= 2: K₁(x) = 1/x + ln(x/2) I₁(x) − (x/4) Σ_k [ψ(k+1) + ψ(k+2)] (x²/4)^k / (k! (k+1)!)
double k1_series(double x) {
  const double t = 0.25 * x * x;
  double term = 1.0;  // (x²/4)^k / (k! (k+1)!)
  double psi1 = -kEuler;       // ψ(k+1)
  double psi2 = 1.0 - kEuler;  // ψ(k+2)
  double i1 = 0.0;
  double rest = 0.0;
  for (int k = 0; k < 60; ++k) {
    i1 += term;
    rest += (psi1 + psi2) * term;
    if (term < 1e-18 * i1) break;
    term *= t / ((k + 1.0) * (k + 2.0));
    psi1 += 1.0 / (k + 1.0);
    psi2 += 1.0 / (k + 2.0);
  }
  i1 *= 0.5 * x;
  return 1.0 / x + std::log(0.5 * x) * i1 - 0.25 * x * rest;
}

// x > 2: Steed's continued fraction for K₀ and K₁ (order zero recurrence start).
double k1_continued_fraction(double x) {
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25;
  double q = a1, c = a1, a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i < 10000; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < 1e-16) break;
  }
  const double k0 = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
  return k0 * (x + 0.5 - a1 * h) / x;
}

}  // namespace

double bessel_k1(double x) {
  if (!(x > 0.0)) throw std::domain_error("bessel_k1: argument must be positive");
  return x <= 2.0 ? k1_series(x) : k1_continued_fraction(x);
}

double matern_order1_correlation(double kappa, double distance) {
  if (!(kappa > 0.0) || distance < 0.0) {
    throw std::invalid_argument("matern_order1_correlation: need kappa > 0, distance >= 0");
  }
  const double r = kappa * distance;
  if (r == 0.0) return 1.0;
  if (r > 700.0) return 0.0;
  return r * bessel_k1(r);
}

double analytic_marginal_variance(double kappa_sq, const Sym2& h) {
  if (!(kappa_sq > 0.0)) throw std::invalid_argument("kappa_sq must be positive");
  if (!(h.h11 > 0.0) || !(h.det() > 0.0)) throw std::invalid_argument("H must be positive definite");
  return 1.0 / (4.0 * std::numbers::pi * kappa_sq * std::sqrt(h.det()));
}

StationaryCharacterization characterize_constant_H(double kappa_sq, const Sym2& h) {
  StationaryCharacterization out;
  out.sigma_m_sq = analytic_marginal_variance(kappa_sq, h);
  const double mean = 0.5 * h.trace();
  const double half_gap = std::hypot(0.5 * (h.h11 - h.h22), h.h12);
  out.lambda1 = mean + half_gap;
  // λ₂ from the determinant avoids cancellation when λ₁ ≫ λ₂
  out.lambda2 = h.det() / out.lambda1;
  if (half_gap <= 4.0 * std::numeric_limits<double>::epsilon() * mean) {
    out.theta = 0.0;
    return out;
  }
  double theta = 0.5 * std::atan2(2.0 * h.h12, h.h11 - h.h22);  // in (−π/2, π/2]
  if (theta <= -0.5 * std::numbers::pi) theta += std::numbers::pi;
  out.theta = theta;
  return out;
}

Sym2 compose_H(double lambda1, double lambda2, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {lambda1 * c * c + lambda2 * s * s, (lambda1 - lambda2) * c * s,
          lambda1 * s * s + lambda2 * c * c};
}

}  // namespace nsgrf
