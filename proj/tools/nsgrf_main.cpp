// Command-line front end: assemble, sample, variance, correlation, fit, study, field-eval.
//
// Exit codes: 0 success, 2 configuration error, 3 matrix not positive definite,
// 4 fit did not converge, 1 anything else.

#include <omp.h>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nsgrf/assembly.hpp"
#include "nsgrf/config.hpp"
#include "nsgrf/gmrf.hpp"
#include "nsgrf/inference.hpp"

namespace {

using namespace nsgrf;
using nlohmann::json;

constexpr int kConfigError = 2;
constexpr int kNotSpd = 3;
constexpr int kNoConvergence = 4;

struct Options {
  std::string config;
  std::string out;
  std::string start;
  std::string ref = "0,0";
  std::uint64_t seed = 0;
  std::size_t count = 1;
  int threads = 0;
  bool fixed_seed = false;
};

// Writes to --out, or stdout when it is empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw ConfigError(path + ": cannot open for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

CellCoord parse_ref(const std::string& text) {
  std::istringstream in(text);
  long i = 0, j = 0;
  char comma = 0;
  if (!(in >> i >> comma >> j) || comma != ',' || !in.eof()) {
    throw ConfigError("--ref: expected I,J");
  }
  return {i, j};
}

std::vector<double> read_start(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const json& theta = j.is_array() ? j : j.value("theta", json());
  if (!theta.is_array()) throw ConfigError(path + ": expected {\"theta\": [...]}");
  std::vector<double> out;
  for (const auto& x : theta) {
    if (!x.is_number()) throw ConfigError(path + ": theta must be numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

PrecisionFactor factor_for(const ModelConfig& cfg) {
  return PrecisionFactor(assemble_precision(cfg.grid, cfg.kappa, cfg.anisotropy).precision());
}

int cmd_assemble(const Options& o) {
  const ModelConfig cfg = load_config(o.config);
  const PrecisionModel model = assemble_precision(cfg.grid, cfg.kappa, cfg.anisotropy);
  const SparseMatrix& q = model.precision();
  Output out(o.out);
  write_coordinate(out.stream(), q);
  long max_row = 0;
  const SparseMatrix qt = q.transpose();
  for (int r = 0; r < qt.outerSize(); ++r) {
    max_row = std::max<long>(max_row, qt.outerIndexPtr()[r + 1] - qt.outerIndexPtr()[r]);
  }
  const Eigen::VectorXd diag = q.diagonal();
  json summary = {{"n", q.rows()},
                  {"nnz", q.nonZeros()},
                  {"max_nnz_per_row", max_row},
                  {"min_diagonal", diag.minCoeff()},
                  {"max_diagonal", diag.maxCoeff()}};
  (o.out.empty() ? std::cerr : std::cout) << summary.dump() << '\n';
  return 0;
}

int cmd_sample(const Options& o) {
  const ModelConfig cfg = load_config(o.config);
  const PrecisionFactor factor = factor_for(cfg);
  Output out(o.out);
  for (std::size_t k = 0; k < o.count; ++k) {
    if (k) out.stream() << '\n';
    write_field_csv(out.stream(), cfg.grid, sample(factor, o.seed + k).u);
  }
  return 0;
}

int cmd_variance(const Options& o) {
  const ModelConfig cfg = load_config(o.config);
  const PrecisionFactor factor = factor_for(cfg);
  Output out(o.out);
  write_field_csv(out.stream(), cfg.grid, marginal_variances(factor));
  return 0;
}

int cmd_correlation(const Options& o) {
  const ModelConfig cfg = load_config(o.config);
  const CellCoord ref = parse_ref(o.ref);
  const PrecisionFactor factor = factor_for(cfg);
  Output out(o.out);
  write_field_csv(out.stream(), cfg.grid, correlation_field(factor, cfg.grid, ref));
  return 0;
}

int cmd_fit(const Options& o) {
  const ModelConfig cfg = load_config(o.config);
  const PosteriorProblem problem{cfg.grid, cfg.kappa, cfg.layout, load_observation(cfg)};
  std::vector<double> start = o.start.empty() ? cfg.layout.pack(cfg.anisotropy) : read_start(o.start);
  if (start.size() != cfg.layout.size()) {
    throw ConfigError("start has " + std::to_string(start.size()) + " values, the layout needs " +
                      std::to_string(cfg.layout.size()));
  }
  if (!cfg.layout.feasible(start)) throw ConfigError("start violates the parameter constraints");
  const FitResult fit = map_estimate(problem, std::move(start));
  Output out(o.out);
  out.stream() << to_json(fit, cfg.layout).dump(2) << '\n';
  return fit.converged ? 0 : kNoConvergence;
}

int cmd_study(const Options& o) {
  const ModelConfig cfg = load_config(o.config);
  StudyOptions opts;
  opts.n_datasets = o.count;
  opts.seed = o.seed;
  if (o.fixed_seed) opts.dataset_seeds.assign(o.count, o.seed);
  if (o.count < 2) throw ConfigError("--count: a study needs at least two datasets");
  const std::vector<double> truth = cfg.layout.pack(cfg.anisotropy);
  const StudyResult res =
      simulation_study(truth, cfg.layout, cfg.grid, cfg.kappa, observation_template(cfg), opts);
  Output out(o.out);
  out.stream() << to_json(res, cfg.layout).dump(2) << '\n';
  return 0;
}

int cmd_field_eval(const Options& o) {
  const ModelConfig cfg = load_config(o.config);
  Output out(o.out);
  std::ostream& s = out.stream();
  s.precision(17);
  s << "i,j,x,y,v1,v2,h11,h12,h22\n";
  for (std::size_t k = 0; k < cfg.grid.size(); ++k) {
    const CellCoord c = cell_of_index(cfg.grid, k);
    const Point p = cell_center(cfg.grid, c);
    const Vec2 v = eval_vector_field(cfg.anisotropy.field(), p);
    const Sym2 h = eval_H(cfg.anisotropy, p);
    s << c.i << ',' << c.j << ',' << p.x << ',' << p.y << ',' << v.x << ',' << v.y << ',' << h.h11
      << ',' << h.h12 << ',' << h.h22 << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-stationary Gaussian random fields on periodic grids"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--threads", o.threads, "Maximum worker threads (0 = runtime default)");

  auto with_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Model configuration (JSON)")->required();
    sub->add_option("--out", o.out, "Output file (default: stdout)");
    return sub;
  };
  auto* assemble = with_config(app.add_subcommand("assemble", "Write Q in coordinate format"));
  auto* sample = with_config(app.add_subcommand("sample", "Draw realizations as CSV"));
  sample->add_option("--seed", o.seed, "Seed of the first realization");
  sample->add_option("--count", o.count, "Number of realizations (blank-line separated)");
  auto* variance = with_config(app.add_subcommand("variance", "Marginal variances as CSV"));
  auto* correlation = with_config(app.add_subcommand("correlation", "Correlation field as CSV"));
  correlation->add_option("--ref", o.ref, "Reference cell I,J");
  auto* fit = with_config(app.add_subcommand("fit", "MAP estimate from the configured data"));
  fit->add_option("--start", o.start, "JSON file with {\"theta\": [...]}; default is the configured spec");
  auto* study = with_config(app.add_subcommand("study", "Repeated simulation and estimation"));
  study->add_option("--count", o.count, "Number of datasets")->default_val(2);
  study->add_option("--seed", o.seed, "Master seed");
  study->add_flag("--fixed-seed", o.fixed_seed, "Use --seed for every dataset");
  auto* field_eval = with_config(app.add_subcommand("field-eval", "Dump v and H at cell centres"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  if (o.threads > 0) omp_set_num_threads(o.threads);

  try {
    if (app.got_subcommand(assemble)) return cmd_assemble(o);
    if (app.got_subcommand(sample)) return cmd_sample(o);
    if (app.got_subcommand(variance)) return cmd_variance(o);
    if (app.got_subcommand(correlation)) return cmd_correlation(o);
    if (app.got_subcommand(fit)) return cmd_fit(o);
    if (app.got_subcommand(study)) return cmd_study(o);
    if (app.got_subcommand(field_eval)) return cmd_field_eval(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNotSpd;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
