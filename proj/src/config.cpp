#include "nsgrf/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "nsgrf/gmrf.hpp"

namespace nsgrf {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError((where.empty() ? std::string("/") : where) + ": " + what);
}

const json& member(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(where + "/" + key, "missing");
  return *it;
}

double number(const json& j, const std::string& key, const std::string& where) {
  const json& v = member(j, key, where);
  if (!v.is_number()) fail(where + "/" + key, "expected a number");
  return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return number(j, key, where);
}

long integer(const json& j, const std::string& key, const std::string& where) {
  const json& v = member(j, key, where);
  if (!v.is_number_integer()) fail(where + "/" + key, "expected an integer");
  return v.get<long>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::vector<double> read_lattice_csv(const std::filesystem::path& path, std::size_t cols,
                                     std::size_t rows, const std::string& where) {
  std::ifstream in(path);
  if (!in) fail(where, "cannot open " + path.string());
  // the lattice has the shape of a field on a grid of 2M x 2N cells
  const GridSpec shape(1.0, 1.0, cols, rows);
  try {
    const Eigen::VectorXd v = read_field_csv(in, shape);
    return {v.data(), v.data() + v.size()};
  } catch (const std::runtime_error& e) {
    fail(where, path.string() + ": " + e.what());
  }
}

std::shared_ptr<const BaseField> parse_base(const json& j, const GridSpec& grid,
                                            const std::filesystem::path& base_dir,
                                            const std::string& where) {
  if (j.contains("potential")) {
    const json& terms = j["potential"];
    if (!terms.is_array()) fail(where + "/potential", "expected a list of terms");
    std::vector<TrigPotential::Term> out;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const std::string w = where + "/potential/" + std::to_string(t);
      out.push_back({static_cast<int>(integer(terms[t], "k", w)), static_cast<int>(integer(terms[t], "l", w)),
                     number_or(terms[t], "sin", 0.0, w), number_or(terms[t], "cos", 0.0, w)});
    }
    return std::make_shared<const BaseField>(
        rotated_gradient_base(TrigPotential(grid.width(), grid.height(), std::move(out))));
  }
  if (j.contains("lattice")) {
    const json& lat = j["lattice"];
    const std::string w = where + "/lattice";
    const auto& vx_path = member(lat, "vx", w);
    const auto& vy_path = member(lat, "vy", w);
    if (!vx_path.is_string() || !vy_path.is_string()) fail(w, "vx and vy must be file paths");
    const std::size_t cols = 2 * grid.cells_x(), rows = 2 * grid.cells_y();
    const auto vx = read_lattice_csv(resolve(base_dir, vx_path.get<std::string>()), cols, rows, w + "/vx");
    const auto vy = read_lattice_csv(resolve(base_dir, vy_path.get<std::string>()), cols, rows, w + "/vy");
    std::vector<Vec2> samples(vx.size());
    for (std::size_t k = 0; k < samples.size(); ++k) samples[k] = {vx[k], vy[k]};
    return std::make_shared<const BaseField>(LatticeField(grid, std::move(samples)));
  }
  fail(where, "expected \"potential\" or \"lattice\"");
}

}  // namespace

AnisotropySpec parse_anisotropy(const json& j, const GridSpec& grid,
                                const std::filesystem::path& base_dir, const std::string& where) {
  const double gamma = number(j, "gamma", where);
  if (!(gamma > 0.0)) fail(where + "/gamma", "must be positive");
  const std::string fw = where + "/field";
  const json& field = member(j, "field", where);
  const json& type = member(field, "type", fw);
  if (!type.is_string()) fail(fw + "/type", "expected a string");
  const std::string kind = type.get<std::string>();
  try {
    if (kind == "constant") {
      const json& v = member(field, "v", fw);
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        fail(fw + "/v", "expected [v1, v2]");
      }
      return AnisotropySpec(gamma, ConstantVector{{v[0].get<double>(), v[1].get<double>()}});
    }
    if (kind == "fourier") {
      const json& coefs = member(field, "coefficients", fw);
      if (!coefs.is_array()) fail(fw + "/coefficients", "expected a list");
      Vec2 constant;
      std::vector<Frequency> freqs;
      std::vector<std::pair<Frequency, FourierTerm>> terms;
      for (std::size_t t = 0; t < coefs.size(); ++t) {
        const std::string w = fw + "/coefficients/" + std::to_string(t);
        const Frequency f{static_cast<int>(integer(coefs[t], "k", w)),
                          static_cast<int>(integer(coefs[t], "l", w))};
        const FourierTerm term{number_or(coefs[t], "A1", 0.0, w), number_or(coefs[t], "B1", 0.0, w),
                               number_or(coefs[t], "A2", 0.0, w), number_or(coefs[t], "B2", 0.0, w)};
        if (f.k == 0 && f.l == 0) {
          if (term.b1 != 0.0 || term.b2 != 0.0) fail(w, "the (0,0) term has no sine coefficients");
          constant = {constant.x + term.a1, constant.y + term.a2};
          continue;
        }
        freqs.push_back(f);
        terms.emplace_back(f, term);
      }
      FrequencySet set;
      try {
        set = FrequencySet(freqs);
      } catch (const std::invalid_argument& e) {
        fail(fw + "/coefficients", e.what());
      }
      std::vector<FourierTerm> ordered(set.size());
      for (const auto& [f, term] : terms) {
        for (std::size_t k = 0; k < set.size(); ++k) {
          if (set[k] == f) ordered[k] = term;
        }
      }
      return AnisotropySpec(gamma, FourierVectorField(grid.width(), grid.height(), constant,
                                                      std::move(set), std::move(ordered)));
    }
    if (kind == "fixed") {
      const double beta = number(field, "beta", fw);
      if (beta < 0.0) fail(fw + "/beta", "must be non-negative");
      return AnisotropySpec(gamma, FixedFieldScaled(parse_base(member(field, "base", fw), grid, base_dir,
                                                               fw + "/base"),
                                                    beta));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    fail(fw, e.what());
  }
  fail(fw + "/type", "unknown field type \"" + kind + "\"");
}

ModelConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  const json& g = member(j, "grid", "");
  const long m = integer(g, "M", "/grid");
  const long n = integer(g, "N", "/grid");
  if (m < 3 || n < 3) fail("/grid", "M and N must be at least 3");
  std::optional<GridSpec> grid;
  try {
    grid.emplace(number(g, "A", "/grid"), number(g, "B", "/grid"), static_cast<std::size_t>(m),
                 static_cast<std::size_t>(n));
  } catch (const std::invalid_argument& e) {
    fail("/grid", e.what());
  }
  const double kappa_sq = number(j, "kappa_sq", "");
  if (!(kappa_sq > 0.0)) fail("/kappa_sq", "must be positive");
  AnisotropySpec spec = parse_anisotropy(member(j, "anisotropy", ""), *grid, base_dir, "/anisotropy");

  std::optional<ParamLayout> layout;
  const json* lj = j.contains("layout") ? &j["layout"] : nullptr;
  if (lj == nullptr) {
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, ConstantVector>) {
            layout = ParamLayout::constant(grid->width(), grid->height());
          } else if constexpr (std::is_same_v<T, FixedFieldScaled>) {
            layout = ParamLayout::fixed_field(f.base());
          } else {
            layout = ParamLayout::fourier(grid->width(), grid->height(), f.frequencies());
          }
        },
        spec.field());
  } else if (lj->is_string() && lj->get<std::string>() == "constant") {
    layout = ParamLayout::constant(grid->width(), grid->height());
  } else if (lj->is_string() && lj->get<std::string>() == "fixed_field") {
    const auto* fixed = std::get_if<FixedFieldScaled>(&spec.field());
    if (fixed == nullptr) fail("/layout", "fixed_field layout needs a fixed field");
    layout = ParamLayout::fixed_field(fixed->base());
  } else if (lj->is_object() && lj->contains("frequencies")) {
    std::vector<Frequency> freqs;
    const json& list = (*lj)["frequencies"];
    if (!list.is_array()) fail("/layout/frequencies", "expected a list of [k, l] pairs");
    for (std::size_t t = 0; t < list.size(); ++t) {
      const json& p = list[t];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
        fail("/layout/frequencies/" + std::to_string(t), "expected [k, l]");
      }
      if (p[0] == 0 && p[1] == 0) continue;
      freqs.push_back({p[0].get<int>(), p[1].get<int>()});
    }
    try {
      layout = ParamLayout::fourier(grid->width(), grid->height(), FrequencySet(freqs));
    } catch (const std::invalid_argument& e) {
      fail("/layout/frequencies", e.what());
    }
  } else {
    fail("/layout", "expected \"constant\", \"fixed_field\" or {\"frequencies\": [...]}");
  }

  std::optional<ObservationConfig> obs;
  if (j.contains("observation")) {
    const json& o = j["observation"];
    const json& type = member(o, "type", "/observation");
    ObservationConfig oc;
    if (type == "exact") {
      oc.exact = true;
    } else if (type == "noisy") {
      oc.exact = false;
      oc.noise_precision = number(o, "noise_precision", "/observation");
      if (!(oc.noise_precision > 0.0)) fail("/observation/noise_precision", "must be positive");
    } else {
      fail("/observation/type", "expected \"exact\" or \"noisy\"");
    }
    if (o.contains("data")) {
      if (!o["data"].is_string()) fail("/observation/data", "expected a file path");
      oc.data_path = resolve(base_dir, o["data"].get<std::string>());
    }
    obs = oc;
  }
  return ModelConfig{*grid, KappaSpec(kappa_sq), std::move(spec), std::move(*layout), obs};
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

ObservationModel load_observation(const ModelConfig& config) {
  if (!config.observation) fail("/observation", "missing");
  const ObservationConfig& oc = *config.observation;
  if (!oc.data_path) fail("/observation/data", "missing");
  std::ifstream in(*oc.data_path);
  if (!in) fail("/observation/data", "cannot open " + oc.data_path->string());
  Eigen::VectorXd y;
  try {
    y = read_field_csv(in, config.grid);
  } catch (const std::runtime_error& e) {
    fail("/observation/data", e.what());
  }
  if (oc.exact) return ObservationModel::exact(std::move(y));
  return ObservationModel::noisy(std::move(y), oc.noise_precision);
}

ObservationTemplate observation_template(const ModelConfig& config) {
  ObservationTemplate t;
  if (config.observation && !config.observation->exact) {
    t.exact = false;
    t.noise_precision = config.observation->noise_precision;
  }
  return t;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(finite_or_null(x));
  return out;
}

}  // namespace

json to_json(const FitResult& fit, const ParamLayout& layout) {
  json out;
  out["names"] = layout.names();
  out["theta"] = vector_json(fit.theta);
  out["std_devs"] = fit.std_devs_available ? vector_json(fit.std_devs) : json(nullptr);
  out["log_post"] = finite_or_null(fit.log_post);
  out["converged"] = fit.converged;
  out["evals"] = fit.evaluations;
  out["iterations"] = fit.iterations;
  out["message"] = fit.message;
  return out;
}

json to_json(const StudyResult& study, const ParamLayout& layout) {
  json out;
  out["names"] = layout.names();
  out["true_theta"] = vector_json(study.true_theta);
  out["n_datasets"] = study.seeds.size();
  out["failures"] = study.failures;
  out["bias"] = vector_json(study.bias);
  out["sample_sd"] = vector_json(study.sample_sd);
  out["reference_std_devs"] = vector_json(study.reference_std_devs);
  json rows = json::array();
  for (std::size_t d = 0; d < study.estimates.size(); ++d) {
    rows.push_back({{"seed", study.seeds[d]}, {"converged", static_cast<bool>(study.converged[d])},
                    {"theta", vector_json(study.estimates[d])}});
  }
  out["estimates"] = rows;
  return out;
}

}  // namespace nsgrf
