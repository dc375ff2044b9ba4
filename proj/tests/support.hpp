#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "owl/confusion.hpp"
#include "owl/planner.hpp"
#include "owl/predictor.hpp"
#include "owl/rng.hpp"
#include "owl/synth.hpp"

namespace owl::testing {

struct Scenario {
  Manifest manifest;
  FeatureStore features;
  ExperimentPlan plan;
};

/// 20 starting classes, 10 novel classes over 3 increments, dim 16, separation 6.
inline Scenario open_world_scenario(std::uint64_t seed) {
  BlobSpec spec;
  spec.classes = 30;
  spec.dim = 16;
  spec.per_class = {100};
  spec.separation = 6.0;
  spec.seed = seed;
  spec.class_source.assign(20, 0);
  spec.class_source.insert(spec.class_source.end(), 10, 1);
  spec.carry_fraction = 0.5;
  spec.last_source = 1;
  auto [manifest, features] = gen_blobs(spec);
  LabelSet start;
  for (std::size_t k = 0; k < 20; ++k) start.insert(blob_label(k));
  const std::vector<StageSpec> stages = {{0, 1}, {1, 3}};
  auto plan = plan_increments(manifest, start, stages, seed + 10);
  return {std::move(manifest), std::move(features), std::move(plan)};
}

inline PredictorConfig gmm_scenario_config(std::uint64_t seed) {
  PredictorConfig c;
  c.kind = PredictorKind::gmm_finch;
  c.covariance = CovarianceKind::diagonal;
  c.accepted_error = 0.02;
  c.seed = seed;
  return c;
}

inline PredictorConfig ann_scenario_config(std::uint64_t seed) {
  PredictorConfig c;
  c.kind = PredictorKind::ann;
  c.accepted_error = 0.01;
  c.epochs_per_increment = 30;
  c.batch_size = 32;
  c.seed = seed;
  return c;
}

/// Random matrix over up to `max_labels` labels with at most `max_total` counts.
inline ConfusionMatrix random_matrix(Rng& rng, std::size_t max_labels, std::int64_t max_total) {
  const std::size_t n = 1 + rng.below(max_labels);
  ConfusionMatrix cm;
  const std::int64_t total = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max_total)));
  // Skewed draws so some matrices are sparse and some near-diagonal.
  const double diag_bias = rng.uniform();
  std::int64_t left = total;
  while (left > 0) {
    const std::int64_t chunk = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(std::min<std::int64_t>(left, 50))));
    const std::size_t r = rng.below(n);
    const std::size_t c = rng.uniform() < diag_bias ? r : rng.below(n);
    cm.add("c" + std::to_string(r), "c" + std::to_string(c), chunk);
    left -= chunk;
  }
  return cm;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("owl-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace owl::testing
