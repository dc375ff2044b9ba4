#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "owl/evaluator.hpp"
#include "owl/predictor.hpp"

namespace owl {

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path plan_path;
  std::filesystem::path manifest_path;
  std::filesystem::path features_path;
  std::filesystem::path output_path;
  /// Optional per-sample outcomes (JSON lines).
  std::filesystem::path outcomes_path;
  /// Optional directory for per-increment predictor checkpoints.
  std::filesystem::path checkpoint_dir;
  PredictorConfig predictor;
  ExperimentConfig experiment;
};

/// Schema violations throw UsageError naming the offending key path, e.g.
/// "predictor.accepted_error: must lie in (0, 1)". Unknown keys are rejected.
PredictorConfig predictor_config_from_json(const nlohmann::json& j, const std::string& path = "predictor");
nlohmann::json predictor_config_to_json(const PredictorConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::string& path = "experiment");
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

/// Relative paths resolve against `base_dir`. A top-level "seed" seeds both the
/// predictor and the experiment unless they set their own.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace owl
