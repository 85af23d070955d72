#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nsgrf/assembly.hpp"
#include "nsgrf/coefficients.hpp"
#include "nsgrf/gmrf.hpp"
#include "nsgrf/optimizer.hpp"

namespace nsgrf {

/// y = A u + ε with A the identity or a selection of cells and ε ~ N(0, Q_N⁻¹), Q_N diagonal.
/// An exact model observes u itself.
class ObservationModel {
 public:
  static ObservationModel exact(Eigen::VectorXd u);
  /// `observed` lists the cell observed by each entry of y; empty means all cells in order.
  static ObservationModel noisy(Eigen::VectorXd y, Eigen::VectorXd noise_precision,
                                std::vector<int> observed = {});
  static ObservationModel noisy(Eigen::VectorXd y, double noise_precision,
                                std::vector<int> observed = {});

  bool is_exact() const { return exact_; }
  const Eigen::VectorXd& data() const { return y_; }
  const Eigen::VectorXd& noise_precision() const { return noise_precision_; }
  /// Observed cell per datum; empty for the identity operator.
  const std::vector<int>& observed() const { return observed_; }
  bool is_identity() const { return observed_.empty(); }
  std::size_t observations() const { return static_cast<std::size_t>(y_.size()); }

  /// Throws std::invalid_argument if the model does not fit a field of n cells.
  void check(std::size_t n) const;
  SparseMatrix operator_matrix(std::size_t n) const;
  /// Same operator and noise, new data.
  ObservationModel with_data(Eigen::VectorXd y) const;

 private:
  bool exact_ = true;
  Eigen::VectorXd y_;
  Eigen::VectorXd noise_precision_;
  std::vector<int> observed_;
};

/// Improper uniform prior: γ on (0, ∞), β (fixed-field layouts) on [0, ∞), everything else on ℝ.
struct PriorSpec {
  double log_density(const ParamLayout& layout, std::span<const double> theta) const;
};

struct PosteriorProblem {
  GridSpec grid;
  KappaSpec kappa;
  ParamLayout layout;
  ObservationModel obs;
  PriorSpec prior{};
};

/// Reusable evaluator of the log-posterior for one problem. Not thread-safe; use one per thread.
///
/// Exact observation: log π(θ) + log N(u; 0, Q(θ)⁻¹).
/// Noisy observation: log π(θ) + ½ log|Q| − ½ log|Q_C| − ½ (eᵀ Q_N e + μ_Cᵀ Q μ_C) with
/// e = y − A μ_C. This is the integrated-likelihood form with the θ-free constants
/// −(m/2) log 2π + ½ log|Q_N| dropped; written this way it stays accurate when Q_N is huge.
class PosteriorEvaluator {
 public:
  explicit PosteriorEvaluator(PosteriorProblem problem);

  const PosteriorProblem& problem() const { return problem_; }

  /// Swaps in new data observed the same way (used by studies to reuse the workspace).
  void set_observation(ObservationModel obs);

  /// −∞ for infeasible θ or when Q(θ) is not positive definite.
  double operator()(std::span<const double> theta);
  double log_posterior(std::span<const double> theta) { return (*this)(theta); }

  /// Conditional mean μ_C at the last feasible θ (noisy observations only).
  const Eigen::VectorXd& conditional_mean() const { return mu_c_; }

 private:
  PosteriorProblem problem_;
  PrecisionAssembler assembler_;
  PrecisionFactor q_factor_;
  PrecisionFactor qc_factor_;
  SparseMatrix q_c_;
  std::vector<int> diag_slot_;  // value index of Q(k,k)
  Eigen::VectorXd b_;           // Aᵀ Q_N y
  Eigen::VectorXd mu_c_;
};

double log_posterior(std::span<const double> theta, const PosteriorProblem& problem);

struct ObservedInformation {
  Eigen::MatrixXd hessian;          // of −log posterior, symmetrized
  std::vector<double> std_devs;     // NaN when unavailable
  bool available = false;           // false when the Hessian is not positive definite
};

/// Central finite-difference Hessian of −log posterior with steps 1e-3·max(|θ_k|, 1e-2).
/// Stencil points are evaluated in parallel, one evaluator per thread.
ObservedInformation observed_information(const PosteriorProblem& problem,
                                         std::span<const double> theta_hat);

struct FitOptions {
  OptimizerOptions optimizer{};
  bool compute_information = true;
};

struct FitResult {
  std::vector<double> theta;
  std::vector<double> std_devs;
  bool std_devs_available = false;
  double log_post = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  std::string message;
  std::vector<double> gradient;
  Eigen::MatrixXd hessian;
};

FitResult map_estimate(const PosteriorProblem& problem, std::vector<double> theta0,
                       const FitOptions& opts = {});
/// Same, reusing an evaluator's workspace.
FitResult map_estimate(PosteriorEvaluator& evaluator, std::vector<double> theta0,
                       const FitOptions& opts = {});

/// How simulated datasets are observed: exactly, or with i.i.d. noise of one precision.
struct ObservationTemplate {
  bool exact = true;
  double noise_precision = 0.0;
  std::vector<int> observed;  // empty = all cells
};

struct StudyOptions {
  std::size_t n_datasets = 2;
  std::uint64_t seed = 0;
  /// Explicit per-dataset seeds; overrides `seed` and `n_datasets` when non-empty.
  std::vector<std::uint64_t> dataset_seeds;
  FitOptions fit{.optimizer = {}, .compute_information = false};
  /// Observed information at the first successful estimate, as a reference for the sample sds.
  bool reference_information = true;
};

struct StudyResult {
  std::vector<double> true_theta;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<double>> estimates;  // one row per dataset; empty row when the fit failed
  std::vector<bool> converged;
  std::size_t failures = 0;
  std::vector<double> bias;       // mean(estimate) − truth over successful fits
  std::vector<double> sample_sd;  // n − 1 denominator
  std::vector<double> reference_std_devs;
};

/// Per-dataset seed d of a study with master seed s.
std::uint64_t dataset_seed(std::uint64_t master, std::size_t d);

/// Simulates one dataset from Q(θ_true): the field from `seed`, the noise from a derived stream.
ObservationModel simulate_observation(const PrecisionFactor& factor, const ObservationTemplate& obs,
                                      std::uint64_t seed);

StudyResult simulation_study(std::span<const double> true_theta, const ParamLayout& layout,
                             const GridSpec& grid, const KappaSpec& kappa,
                             const ObservationTemplate& obs, const StudyOptions& opts);

/// Root-mean-square Frobenius norm of H − Ĥ over the cell centres.
double h_discrepancy(const AnisotropySpec& h_true, const AnisotropySpec& h_est, const GridSpec& grid);

struct RankedFit {
  std::size_t start = 0;  // index into the starts list
  FitResult fit;
};

/// Independent fits from each start, ranked by decreasing log posterior.
std::vector<RankedFit> multistart_diagnostics(const PosteriorProblem& problem,
                                              const std::vector<std::vector<double>>& starts,
                                              const FitOptions& opts = {});

}  // namespace nsgrf
