#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace nsgrf {

/// Objective to maximize. May return −∞ for infeasible points.
using Objective = std::function<double(std::span<const double>)>;

struct OptimizerOptions {
  double gradient_step = 1e-5;   // relative central-difference step
  double gradient_tol = 1e-4;    // ‖g‖∞ ≤ tol · max(1, |f|)
  double decrement_tol = 1e-6;   // gᵀ B⁻¹ g, the predicted increase of a full Newton step (times 2)
  double step_tol = 1e-8;        // relative parameter step
  std::size_t max_evaluations = 5000;
};

struct OptimizerResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> gradient;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  std::string message;
};

/// Central-difference gradient with step h_k = rel · max(|x_k|, 1). Falls back to a
/// one-sided difference when one neighbour is infeasible. Adds the calls made to `evals`.
std::vector<double> fd_gradient(const Objective& f, std::span<const double> x, double fx, double rel,
                                std::size_t& evals);

/// BFGS ascent with finite-difference gradients and backtracking (Armijo) line search.
/// Infeasible trial points (−∞) are treated as failed steps and the step is shortened.
OptimizerResult maximize(const Objective& f, std::vector<double> x0, const OptimizerOptions& opts = {});

/// Points and weights of the central-difference Hessian, so callers can evaluate
/// the points in parallel.
class HessianStencil {
 public:
  HessianStencil(std::span<const double> x, std::vector<double> steps);

  const std::vector<std::vector<double>>& points() const { return points_; }
  /// Symmetric Hessian from f(x) and the values at points() (same order).
  Eigen::MatrixXd combine(double fx, std::span<const double> values) const;

 private:
  std::size_t dim_;
  std::vector<double> steps_;
  std::vector<std::vector<double>> points_;
};

/// Steps 1e-3 · max(|x_k|, 1e-2), the default for observed information.
std::vector<double> default_hessian_steps(std::span<const double> x);

Eigen::MatrixXd fd_hessian(const Objective& f, std::span<const double> x,
                           const std::vector<double>& steps);

}  // namespace nsgrf
