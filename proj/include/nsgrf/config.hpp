#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nsgrf/coefficients.hpp"
#include "nsgrf/grid.hpp"
#include "nsgrf/inference.hpp"

namespace nsgrf {

/// Invalid configuration; the message names the offending field as a JSON pointer.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ObservationConfig {
  bool exact = true;
  double noise_precision = 0.0;
  std::optional<std::filesystem::path> data_path;  // resolved against the config's directory
};

/// Everything a command needs, parsed from one JSON file:
///
///   {"grid": {"A": 20, "B": 20, "M": 100, "N": 100},
///    "kappa_sq": 1,
///    "anisotropy": {"gamma": 3, "field": {"type": "constant", "v": [0.707, 1.225]}},
///    "observation": {"type": "exact", "data": "u.csv"},
///    "layout": "constant"}
///
/// Field types: "constant" with "v"; "fourier" with "coefficients", a list of
/// {"k","l","A1","B1","A2","B2"} where (0,0) carries the constant term; "fixed" with
/// "beta" and a "base" given either as {"potential": [{"k","l","sin","cos"}]} (the field
/// is the gradient of the potential rotated by 90°) or {"lattice": {"vx": csv, "vy": csv}}
/// with 2N rows of 2M half-step samples each.
/// "layout" is "constant", "fixed_field", or {"frequencies": [[k, l], ...]}; it defaults
/// to the layout matching the field.
struct ModelConfig {
  GridSpec grid;
  KappaSpec kappa;
  AnisotropySpec anisotropy;
  ParamLayout layout;
  std::optional<ObservationConfig> observation;
};

ModelConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ModelConfig load_config(const std::filesystem::path& path);

AnisotropySpec parse_anisotropy(const nlohmann::json& j, const GridSpec& grid,
                                const std::filesystem::path& base_dir, const std::string& where);

/// Observation model with the data file loaded. Throws ConfigError if the config has none.
ObservationModel load_observation(const ModelConfig& config);
ObservationTemplate observation_template(const ModelConfig& config);

nlohmann::json to_json(const FitResult& fit, const ParamLayout& layout);
nlohmann::json to_json(const StudyResult& study, const ParamLayout& layout);

}  // namespace nsgrf
