#include "nsgrf/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nsgrf {

namespace {

bool usable(double v) { return std::isfinite(v); }

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Eigen::VectorXd as_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::vector<double> fd_gradient(const Objective& f, std::span<const double> x, double fx, double rel,
                                std::size_t& evals) {
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> g(x.size(), 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double h = rel * std::max(std::abs(x[k]), 1.0);
    point[k] = x[k] + h;
    const double up = f(point);
    point[k] = x[k] - h;
    const double down = f(point);
    point[k] = x[k];
    evals += 2;
    if (usable(up) && usable(down)) {
      g[k] = (up - down) / (2.0 * h);
    } else if (usable(up)) {
      g[k] = (up - fx) / h;
    } else if (usable(down)) {
      g[k] = (fx - down) / h;
    } else {
      g[k] = 0.0;
    }
  }
  return g;
}

OptimizerResult maximize(const Objective& f, std::vector<double> x0, const OptimizerOptions& opts) {
  OptimizerResult res;
  const auto n = static_cast<Eigen::Index>(x0.size());
  std::vector<double> x = std::move(x0);
  double fx = f(x);
  res.evaluations = 1;
  if (!usable(fx)) {
    res.x = x;
    res.value = fx;
    res.message = "starting point is infeasible";
    return res;
  }
  Eigen::VectorXd g = as_eigen(fd_gradient(f, x, fx, opts.gradient_step, res.evaluations));
  Eigen::MatrixXd binv = Eigen::MatrixXd::Identity(n, n);  // inverse Hessian of −f
  bool curvature_known = false;

  auto gradient_ok = [&] { return inf_norm(g) <= opts.gradient_tol * std::max(1.0, std::abs(fx)); };

  for (;;) {
    const double decrement = g.dot(binv * g);
    if (curvature_known && gradient_ok() && decrement <= opts.decrement_tol) {
      res.converged = true;
      res.message = "gradient and Newton decrement below tolerance";
      break;
    }
    if (res.evaluations >= opts.max_evaluations) {
      res.message = "evaluation limit reached";
      break;
    }
    Eigen::VectorXd d = binv * g;
    if (!(g.dot(d) > 0.0)) {
      binv.setIdentity();
      curvature_known = false;
      d = g;
    }
    double alpha = 1.0;
    if (!curvature_known) {
      // no curvature yet: cap the first move at 10% of the parameter scale
      double cap = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < n; ++k) {
        if (d[k] != 0.0) cap = std::min(cap, 0.1 * std::max(std::abs(x[k]), 1.0) / std::abs(d[k]));
      }
      alpha = std::min(1.0, cap);
    }
    const double slope = g.dot(d);
    std::vector<double> trial(x.size());
    double ft = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int tries = 0; tries < 60 && res.evaluations < opts.max_evaluations; ++tries) {
      for (Eigen::Index k = 0; k < n; ++k) trial[k] = x[k] + alpha * d[k];
      ft = f(trial);
      ++res.evaluations;
      if (usable(ft) && ft >= fx + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= usable(ft) ? 0.5 : 0.25;
    }
    if (!accepted) {
      if (gradient_ok()) {
        res.converged = true;
        res.message = "no further ascent; gradient below tolerance";
        break;
      }
      if (curvature_known) {
        binv.setIdentity();
        curvature_known = false;
        continue;
      }
      res.message = "line search failed";
      break;
    }
    Eigen::VectorXd s(n);
    for (Eigen::Index k = 0; k < n; ++k) s[k] = trial[k] - x[k];
    double rel_step = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      rel_step = std::max(rel_step, std::abs(s[k]) / std::max(std::abs(x[k]), 1.0));
    }
    x = trial;
    fx = ft;
    ++res.iterations;
    const Eigen::VectorXd g_new = as_eigen(fd_gradient(f, x, fx, opts.gradient_step, res.evaluations));
    const Eigen::VectorXd y = g - g_new;  // change in the gradient of −f
    g = g_new;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!curvature_known) {
        binv = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
        curvature_known = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      binv = left * binv * left.transpose() + rho * s * s.transpose();
    }
    if (rel_step <= opts.step_tol && gradient_ok()) {
      res.converged = true;
      res.message = "parameter step below tolerance";
      break;
    }
  }
  res.x = std::move(x);
  res.value = fx;
  res.gradient.assign(g.data(), g.data() + g.size());
  return res;
}

HessianStencil::HessianStencil(std::span<const double> x, std::vector<double> steps)
    : dim_(x.size()), steps_(std::move(steps)) {
  if (steps_.size() != dim_) throw std::invalid_argument("HessianStencil: one step per coordinate");
  const std::vector<double> base(x.begin(), x.end());
  auto shifted = [&](std::size_t i, double si, std::size_t j, double sj) {
    std::vector<double> p = base;
    p[i] += si * steps_[i];
    p[j] += sj * steps_[j];
    return p;
  };
  for (std::size_t i = 0; i < dim_; ++i) {
    std::vector<double> up = base, down = base;
    up[i] += steps_[i];
    down[i] -= steps_[i];
    points_.push_back(std::move(up));
    points_.push_back(std::move(down));
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = i + 1; j < dim_; ++j) {
      points_.push_back(shifted(i, 1, j, 1));
      points_.push_back(shifted(i, 1, j, -1));
      points_.push_back(shifted(i, -1, j, 1));
      points_.push_back(shifted(i, -1, j, -1));
    }
  }
}

Eigen::MatrixXd HessianStencil::combine(double fx, std::span<const double> values) const {
  if (values.size() != points_.size()) throw std::invalid_argument("HessianStencil: value count");
  const auto n = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXd h(n, n);
  std::size_t p = 0;
  for (Eigen::Index i = 0; i < n; ++i, p += 2) {
    h(i, i) = (values[p] - 2.0 * fx + values[p + 1]) / (steps_[i] * steps_[i]);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, p += 4) {
      h(i, j) = (values[p] - values[p + 1] - values[p + 2] + values[p + 3]) /
                (4.0 * steps_[i] * steps_[j]);
      h(j, i) = h(i, j);
    }
  }
  return h;
}

std::vector<double> default_hessian_steps(std::span<const double> x) {
  std::vector<double> steps(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) steps[k] = 1e-3 * std::max(std::abs(x[k]), 1e-2);
  return steps;
}

Eigen::MatrixXd fd_hessian(const Objective& f, std::span<const double> x,
                           const std::vector<double>& steps) {
  const HessianStencil stencil(x, steps);
  std::vector<double> values;
  values.reserve(stencil.points().size());
  for (const auto& p : stencil.points()) values.push_back(f(p));
  return stencil.combine(f(x), values);
}

}  // namespace nsgrf
