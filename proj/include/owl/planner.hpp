#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "owl/dataset.hpp"

namespace owl {

/// One dataset release and how many increments it is spread over.
struct StageSpec {
  std::uint32_t source = 0;
  std::size_t increments = 1;
};

/// How a stage's unknown classes are spread over its increments.
enum class NovelCountRule {
  /// ceil(|U|/N) per increment for the first N-1, remainder in the last.
  ceiling,
  /// floor(|U|/N) per increment for the first N-1, remainder in the last.
  floor,
};

struct PlanOptions {
  NovelCountRule novel_rule = NovelCountRule::ceiling;
  /// Shuffle each increment's train ids into a presentation order.
  bool shuffle_train_order = true;
};

/// Merges releases into one manifest: latest label, earliest split and source,
/// metadata merged with later releases winning per key. Output order follows
/// first appearance.
Manifest unify_labels(std::span<const Manifest> manifests);

/// Per label: seeded Fisher-Yates shuffle, then round-robin deal into k parts.
/// Each label uses its own stream derived from (seed, label).
std::vector<std::vector<std::string>> stratified_partition(
    const std::map<Label, std::vector<std::string>>& ids_by_label, std::size_t k,
    std::uint64_t seed);

/// Number of novel classes assigned to each of `increments` increments.
std::vector<std::size_t> novel_class_counts(std::size_t unknown, std::size_t increments,
                                            NovelCountRule rule);

ExperimentPlan plan_increments(const Manifest& manifest, const LabelSet& start_known,
                               std::span<const StageSpec> stages, std::uint64_t seed,
                               const PlanOptions& options = {});

}  // namespace owl
