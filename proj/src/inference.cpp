#include "nsgrf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace nsgrf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Evaluates the log posterior at many points, one evaluator per thread.
std::vector<double> parallel_evaluate(const PosteriorProblem& problem,
                                      const std::vector<std::vector<double>>& points) {
  std::vector<double> values(points.size(), kNegInf);
  std::exception_ptr error;
  std::mutex error_mutex;
  const long count = static_cast<long>(points.size());
#pragma omp parallel
  {
    try {
      PosteriorEvaluator evaluator(problem);
#pragma omp for schedule(dynamic)
      for (long p = 0; p < count; ++p) {
        try {
          values[static_cast<std::size_t>(p)] = evaluator(points[static_cast<std::size_t>(p)]);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return values;
}

}  // namespace

// ---- observation model ----

ObservationModel ObservationModel::exact(Eigen::VectorXd u) {
  ObservationModel m;
  m.exact_ = true;
  m.y_ = std::move(u);
  return m;
}

ObservationModel ObservationModel::noisy(Eigen::VectorXd y, Eigen::VectorXd noise_precision,
                                         std::vector<int> observed) {
  if (noise_precision.size() != y.size()) {
    throw std::invalid_argument("noise precision must have one entry per observation");
  }
  if (!(noise_precision.array() > 0.0).all()) {
    throw std::invalid_argument("noise precision must be positive");
  }
  if (!observed.empty() && observed.size() != static_cast<std::size_t>(y.size())) {
    throw std::invalid_argument("observed cells must have one entry per observation");
  }
  ObservationModel m;
  m.exact_ = false;
  m.y_ = std::move(y);
  m.noise_precision_ = std::move(noise_precision);
  m.observed_ = std::move(observed);
  return m;
}

ObservationModel ObservationModel::noisy(Eigen::VectorXd y, double noise_precision,
                                         std::vector<int> observed) {
  Eigen::VectorXd qn = Eigen::VectorXd::Constant(y.size(), noise_precision);
  return noisy(std::move(y), std::move(qn), std::move(observed));
}

void ObservationModel::check(std::size_t n) const {
  if (exact_ || is_identity()) {
    if (observations() != n) {
      throw std::invalid_argument("observation has " + std::to_string(observations()) +
                                  " values, the grid has " + std::to_string(n) + " cells");
    }
    return;
  }
  for (int c : observed_) {
    if (c < 0 || static_cast<std::size_t>(c) >= n) {
      throw std::invalid_argument("observed cell " + std::to_string(c) + " is outside the grid");
    }
  }
}

SparseMatrix ObservationModel::operator_matrix(std::size_t n) const {
  check(n);
  const int m = static_cast<int>(observations());
  SparseMatrix a(m, static_cast<int>(n));
  std::vector<Eigen::Triplet<double, int>> t;
  for (int r = 0; r < m; ++r) t.emplace_back(r, is_identity() ? r : observed_[r], 1.0);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

ObservationModel ObservationModel::with_data(Eigen::VectorXd y) const {
  if (y.size() != y_.size()) throw std::invalid_argument("with_data: length mismatch");
  ObservationModel m = *this;
  m.y_ = std::move(y);
  return m;
}

double PriorSpec::log_density(const ParamLayout& layout, std::span<const double> theta) const {
  return layout.feasible(theta) ? 0.0 : kNegInf;
}

// ---- posterior ----

PosteriorEvaluator::PosteriorEvaluator(PosteriorProblem problem)
    : problem_(std::move(problem)), assembler_(problem_.grid, problem_.kappa) {
  const SparseMatrix& pattern = assembler_.pattern().matrix();
  diag_slot_.resize(static_cast<std::size_t>(pattern.cols()));
  for (int c = 0; c < pattern.cols(); ++c) {
    for (int p = pattern.outerIndexPtr()[c]; p < pattern.outerIndexPtr()[c + 1]; ++p) {
      if (pattern.innerIndexPtr()[p] == c) diag_slot_[static_cast<std::size_t>(c)] = p;
    }
  }
  set_observation(problem_.obs);
}

void PosteriorEvaluator::set_observation(ObservationModel obs) {
  obs.check(problem_.grid.size());
  problem_.obs = std::move(obs);
  const ObservationModel& o = problem_.obs;
  if (o.is_exact()) return;
  b_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem_.grid.size()));
  for (Eigen::Index r = 0; r < o.data().size(); ++r) {
    const Eigen::Index cell = o.is_identity() ? r : o.observed()[static_cast<std::size_t>(r)];
    b_[cell] += o.noise_precision()[r] * o.data()[r];
  }
}

double PosteriorEvaluator::operator()(std::span<const double> theta) {
  const double log_prior = problem_.prior.log_density(problem_.layout, theta);
  if (!std::isfinite(log_prior)) return kNegInf;
  const SparseMatrix& q = assembler_.assemble(problem_.layout.unpack(theta));
  try {
    q_factor_.factorize(q);
  } catch (const NotPositiveDefinite&) {
    return kNegInf;
  }
  const ObservationModel& o = problem_.obs;
  if (o.is_exact()) return log_prior + gaussian_log_density(q_factor_, o.data());

  q_c_ = q;
  double* values = q_c_.valuePtr();
  for (Eigen::Index r = 0; r < o.data().size(); ++r) {
    const std::size_t cell = o.is_identity() ? static_cast<std::size_t>(r)
                                             : static_cast<std::size_t>(o.observed()[static_cast<std::size_t>(r)]);
    values[diag_slot_[cell]] += o.noise_precision()[r];
  }
  try {
    qc_factor_.factorize(q_c_);
  } catch (const NotPositiveDefinite&) {
    return kNegInf;
  }
  mu_c_ = qc_factor_.solve(b_);
  double residual = 0.0;
  for (Eigen::Index r = 0; r < o.data().size(); ++r) {
    const Eigen::Index cell = o.is_identity() ? r : o.observed()[static_cast<std::size_t>(r)];
    const double e = o.data()[r] - mu_c_[cell];
    residual += o.noise_precision()[r] * e * e;
  }
  const double prior_quad = mu_c_.dot(q * mu_c_);
  return log_prior + 0.5 * (q_factor_.log_determinant() - qc_factor_.log_determinant()) -
         0.5 * (residual + prior_quad);
}

double log_posterior(std::span<const double> theta, const PosteriorProblem& problem) {
  PosteriorEvaluator evaluator(problem);
  return evaluator(theta);
}

ObservedInformation observed_information(const PosteriorProblem& problem,
                                         std::span<const double> theta_hat) {
  const HessianStencil stencil(theta_hat, default_hessian_steps(theta_hat));
  const std::vector<double> values = parallel_evaluate(problem, stencil.points());
  const double f0 = log_posterior(theta_hat, problem);

  ObservedInformation info;
  info.hessian = -stencil.combine(f0, values);
  info.std_devs.assign(theta_hat.size(), std::numeric_limits<double>::quiet_NaN());
  if (!info.hessian.allFinite()) return info;
  const Eigen::LLT<Eigen::MatrixXd> llt(info.hessian);
  if (llt.info() != Eigen::Success) return info;
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(info.hessian.rows(), info.hessian.cols()));
  for (Eigen::Index k = 0; k < cov.rows(); ++k) info.std_devs[static_cast<std::size_t>(k)] = std::sqrt(cov(k, k));
  info.available = true;
  return info;
}

FitResult map_estimate(PosteriorEvaluator& evaluator, std::vector<double> theta0,
                       const FitOptions& opts) {
  if (!evaluator.problem().layout.feasible(theta0)) {
    throw InfeasibleParameters("starting point violates the parameter constraints");
  }
  const Objective f = [&evaluator](std::span<const double> t) { return evaluator(t); };
  OptimizerResult opt = maximize(f, std::move(theta0), opts.optimizer);

  FitResult fit;
  fit.theta = std::move(opt.x);
  fit.log_post = opt.value;
  fit.iterations = opt.iterations;
  fit.evaluations = opt.evaluations;
  fit.converged = opt.converged;
  fit.message = std::move(opt.message);
  fit.gradient = std::move(opt.gradient);
  fit.std_devs.assign(fit.theta.size(), std::numeric_limits<double>::quiet_NaN());
  if (opts.compute_information && std::isfinite(fit.log_post)) {
    ObservedInformation info = observed_information(evaluator.problem(), fit.theta);
    fit.hessian = std::move(info.hessian);
    fit.std_devs = std::move(info.std_devs);
    fit.std_devs_available = info.available;
  }
  return fit;
}

FitResult map_estimate(const PosteriorProblem& problem, std::vector<double> theta0,
                       const FitOptions& opts) {
  PosteriorEvaluator evaluator(problem);
  return map_estimate(evaluator, std::move(theta0), opts);
}

// ---- studies ----

std::uint64_t dataset_seed(std::uint64_t master, std::size_t d) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(d) + 1));
}

ObservationModel simulate_observation(const PrecisionFactor& factor, const ObservationTemplate& obs,
                                      std::uint64_t seed) {
  Eigen::VectorXd u = sample(factor, seed).u;
  if (obs.exact) return ObservationModel::exact(std::move(u));
  if (!(obs.noise_precision > 0.0)) throw std::invalid_argument("noise precision must be positive");
  const std::size_t m = obs.observed.empty() ? static_cast<std::size_t>(u.size()) : obs.observed.size();
  const Eigen::VectorXd noise = standard_normal(m, splitmix64(seed ^ 0x6E6F697365ull));
  Eigen::VectorXd y(static_cast<Eigen::Index>(m));
  const double sd = 1.0 / std::sqrt(obs.noise_precision);
  for (Eigen::Index r = 0; r < y.size(); ++r) {
    const Eigen::Index cell = obs.observed.empty() ? r : obs.observed[static_cast<std::size_t>(r)];
    y[r] = u[cell] + sd * noise[r];
  }
  return ObservationModel::noisy(std::move(y), obs.noise_precision, obs.observed);
}

StudyResult simulation_study(std::span<const double> true_theta, const ParamLayout& layout,
                             const GridSpec& grid, const KappaSpec& kappa,
                             const ObservationTemplate& obs, const StudyOptions& opts) {
  StudyResult res;
  res.true_theta.assign(true_theta.begin(), true_theta.end());
  if (!opts.dataset_seeds.empty()) {
    res.seeds = opts.dataset_seeds;
  } else {
    for (std::size_t d = 0; d < opts.n_datasets; ++d) res.seeds.push_back(dataset_seed(opts.seed, d));
  }
  if (res.seeds.size() < 2) throw std::invalid_argument("a study needs at least two datasets");
  if (!layout.feasible(true_theta)) throw InfeasibleParameters("true parameters are infeasible");

  const PrecisionFactor truth(assemble_precision(grid, kappa, layout.unpack(true_theta)).precision());
  const std::size_t count = res.seeds.size();
  res.estimates.assign(count, {});
  res.converged.assign(count, false);
  const ObservationModel first = simulate_observation(truth, obs, res.seeds[0]);

  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel
  {
    try {
      PosteriorEvaluator evaluator(PosteriorProblem{grid, kappa, layout, first});
#pragma omp for schedule(dynamic)
      for (long d = 0; d < static_cast<long>(count); ++d) {
        const auto k = static_cast<std::size_t>(d);
        try {
          evaluator.set_observation(simulate_observation(truth, obs, res.seeds[k]));
          const FitResult fit = map_estimate(evaluator, res.true_theta, opts.fit);
          res.estimates[k] = fit.theta;
          res.converged[k] = fit.converged && std::isfinite(fit.log_post);
        } catch (const std::exception&) {
          res.converged[k] = false;
        }
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  const std::size_t p = res.true_theta.size();
  std::vector<double> mean(p, 0.0);
  std::size_t ok = 0;
  for (std::size_t d = 0; d < count; ++d) {
    if (!res.converged[d]) continue;
    ++ok;
    for (std::size_t k = 0; k < p; ++k) mean[k] += res.estimates[d][k];
  }
  res.failures = count - ok;
  res.bias.assign(p, std::numeric_limits<double>::quiet_NaN());
  res.sample_sd.assign(p, std::numeric_limits<double>::quiet_NaN());
  if (ok > 0) {
    for (std::size_t k = 0; k < p; ++k) {
      mean[k] /= static_cast<double>(ok);
      res.bias[k] = mean[k] - res.true_theta[k];
    }
  }
  if (ok > 1) {
    for (std::size_t k = 0; k < p; ++k) {
      double ss = 0.0;
      for (std::size_t d = 0; d < count; ++d) {
        if (res.converged[d]) ss += (res.estimates[d][k] - mean[k]) * (res.estimates[d][k] - mean[k]);
      }
      res.sample_sd[k] = std::sqrt(ss / static_cast<double>(ok - 1));
    }
  }
  if (opts.reference_information) {
    for (std::size_t d = 0; d < count; ++d) {
      if (!res.converged[d]) continue;
      const PosteriorProblem problem{grid, kappa, layout, simulate_observation(truth, obs, res.seeds[d])};
      const ObservedInformation info = observed_information(problem, res.estimates[d]);
      if (info.available) res.reference_std_devs = info.std_devs;
      break;
    }
  }
  return res;
}

double h_discrepancy(const AnisotropySpec& h_true, const AnisotropySpec& h_est, const GridSpec& grid) {
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point s = cell_center(grid, cell_of_index(grid, k));
    const Sym2 a = eval_H(h_true, s);
    const Sym2 b = eval_H(h_est, s);
    const double d11 = a.h11 - b.h11, d12 = a.h12 - b.h12, d22 = a.h22 - b.h22;
    sum += d11 * d11 + 2.0 * d12 * d12 + d22 * d22;
  }
  return std::sqrt(sum / static_cast<double>(grid.size()));
}

std::vector<RankedFit> multistart_diagnostics(const PosteriorProblem& problem,
                                              const std::vector<std::vector<double>>& starts,
                                              const FitOptions& opts) {
  if (starts.empty()) throw std::invalid_argument("multistart needs at least one start");
  std::vector<RankedFit> fits(starts.size());
  PosteriorEvaluator evaluator(problem);
  for (std::size_t s = 0; s < starts.size(); ++s) {
    fits[s].start = s;
    fits[s].fit = map_estimate(evaluator, starts[s], opts);
  }
  std::stable_sort(fits.begin(), fits.end(), [](const RankedFit& a, const RankedFit& b) {
    return a.fit.log_post > b.fit.log_post;
  });
  return fits;
}

}  // namespace nsgrf
