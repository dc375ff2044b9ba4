#include "owl/planner.hpp"

#include <algorithm>
#include <unordered_map>

#include "owl/error.hpp"
#include "owl/rng.hpp"

namespace owl {

Manifest unify_labels(std::span<const Manifest> manifests) {
  std::vector<SampleRecord> merged;
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t release = 0; release < manifests.size(); ++release) {
    for (const auto& rec : manifests[release].records()) {
      auto it = position.find(rec.id);
      if (it == position.end()) {
        position.emplace(rec.id, merged.size());
        SampleRecord first = rec;
        first.source = static_cast<std::uint32_t>(release);
        merged.push_back(std::move(first));
        continue;
      }
      // Later release: relabel, keep the first split and source.
      SampleRecord& kept = merged[it->second];
      kept.label = rec.label;
      for (const auto& [key, value] : rec.metadata) kept.metadata[key] = value;
    }
  }
  return Manifest(std::move(merged));
}

std::vector<std::vector<std::string>> stratified_partition(
    const std::map<Label, std::vector<std::string>>& ids_by_label, std::size_t k,
    std::uint64_t seed) {
  if (k == 0) throw UsageError("stratified_partition: k must be at least 1");
  std::vector<std::vector<std::string>> parts(k);
  for (const auto& [label, ids] : ids_by_label) {
    std::vector<std::string> shuffled = ids;
    Rng rng(derive_seed(seed, label));
    shuffle(std::span<std::string>(shuffled), rng);
    for (std::size_t i = 0; i < shuffled.size(); ++i) parts[i % k].push_back(std::move(shuffled[i]));
  }
  return parts;
}

std::vector<std::size_t> novel_class_counts(std::size_t unknown, std::size_t increments,
                                            NovelCountRule rule) {
  if (increments == 0) throw UsageError("a stage needs at least one increment");
  std::vector<std::size_t> counts(increments, 0);
  const std::size_t per = rule == NovelCountRule::ceiling
                              ? (unknown + increments - 1) / increments
                              : unknown / increments;
  std::size_t left = unknown;
  for (std::size_t j = 0; j + 1 < increments; ++j) {
    counts[j] = std::min(per, left);
    left -= counts[j];
  }
  counts.back() = left;
  return counts;
}

ExperimentPlan plan_increments(const Manifest& manifest, const LabelSet& start_known,
                               std::span<const StageSpec> stages, std::uint64_t seed,
                               const PlanOptions& options) {
  if (stages.empty()) throw UsageError("at least one stage is required");

  std::map<std::uint32_t, std::size_t> stage_of_source;
  std::vector<std::size_t> offset(stages.size());
  std::size_t total = 0;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    if (stages[s].increments == 0)
      throw UsageError("stage for source " + std::to_string(stages[s].source) +
                       " must have at least one increment");
    if (!stage_of_source.emplace(stages[s].source, s).second)
      throw UsageError("source " + std::to_string(stages[s].source) + " appears in two stages");
    offset[s] = total;
    total += stages[s].increments;
  }

  std::vector<std::vector<const SampleRecord*>> stage_records(stages.size());
  std::unordered_map<std::string, std::size_t> manifest_pos;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& rec = manifest.records()[i];
    manifest_pos.emplace(rec.id, i);
    auto it = stage_of_source.find(rec.source);
    if (it == stage_of_source.end())
      throw DataError("record '" + rec.id + "' has source " + std::to_string(rec.source) +
                      " which no stage covers");
    stage_records[it->second].push_back(&rec);
  }
  for (std::size_t s = 0; s < stages.size(); ++s)
    if (stage_records[s].empty())
      throw DataError("stage for source " + std::to_string(stages[s].source) + " has no records");

  LabelSet stage0_labels;
  for (const auto* rec : stage_records[0]) stage0_labels.insert(rec->label);
  for (const auto& label : start_known)
    if (!stage0_labels.contains(label))
      throw DataError("start-known label '" + label + "' has no records in the first stage");

  ExperimentPlan plan;
  plan.seed = seed;
  plan.label_universe = manifest.labels();
  plan.increments.resize(total);
  for (std::size_t t = 0; t < total; ++t) plan.increments[t].index = t;

  std::map<Label, std::size_t> introduced;  // start-known labels map to 0
  for (const auto& label : start_known) introduced.emplace(label, 0);
  LabelSet known = start_known;

  auto place = [&](std::size_t t, const SampleRecord& rec) {
    plan.increments[t].ids(rec.split).push_back(rec.id);
  };

  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::size_t n_inc = stages[s].increments;
    const std::string stage_key = "stage-" + std::to_string(s);

    std::map<Label, std::size_t> train_freq;
    LabelSet stage_labels;
    for (const auto* rec : stage_records[s]) {
      stage_labels.insert(rec->label);
      if (rec->split == Split::train) ++train_freq[rec->label];
    }

    std::vector<Label> unknown;
    for (const auto& label : stage_labels)
      if (!known.contains(label)) unknown.push_back(label);
    // Most frequent first; ties by label (already sorted).
    std::stable_sort(unknown.begin(), unknown.end(), [&](const Label& a, const Label& b) {
      return train_freq[a] > train_freq[b];
    });

    const auto counts = novel_class_counts(unknown.size(), n_inc, options.novel_rule);
    std::size_t next = 0;
    for (std::size_t j = 0; j < n_inc; ++j) {
      const std::size_t t = offset[s] + j;
      for (std::size_t c = 0; c < counts[j]; ++c, ++next) {
        plan.increments[t].novel_labels.insert(unknown[next]);
        introduced.emplace(unknown[next], t);
      }
    }

    // Known-class training samples: spread over this stage's increments.
    std::map<Label, std::vector<std::string>> known_train;
    // Novel-class training samples grouped by introduction increment.
    std::map<std::size_t, std::map<Label, std::vector<std::string>>> novel_train;
    for (const auto* rec : stage_records[s]) {
      if (rec->split != Split::train) continue;
      if (known.contains(rec->label))
        known_train[rec->label].push_back(rec->id);
      else
        novel_train[introduced.at(rec->label)][rec->label].push_back(rec->id);
    }

    const auto known_parts =
        stratified_partition(known_train, n_inc, derive_seed(seed, stage_key + "-known"));
    for (std::size_t j = 0; j < n_inc; ++j) {
      auto& dst = plan.increments[offset[s] + j].train_ids;
      dst.insert(dst.end(), known_parts[j].begin(), known_parts[j].end());
    }

    for (auto& [t, by_label] : novel_train) {
      const std::size_t remaining = total - t;
      std::map<Label, std::vector<std::string>> spread;
      for (auto& [label, ids] : by_label) {
        if (ids.size() < remaining) {
          auto& dst = plan.increments[t].train_ids;
          dst.insert(dst.end(), ids.begin(), ids.end());
        } else {
          spread.emplace(label, std::move(ids));
        }
      }
      const auto parts =
          stratified_partition(spread, remaining, derive_seed(seed, "novel-" + std::to_string(t)));
      for (std::size_t j = 0; j < remaining; ++j) {
        auto& dst = plan.increments[t + j].train_ids;
        dst.insert(dst.end(), parts[j].begin(), parts[j].end());
      }
    }

    // Evaluation samples go where their class is first present, never before their release.
    for (const auto* rec : stage_records[s]) {
      if (rec->split == Split::train) continue;
      place(std::max(introduced.at(rec->label), offset[s]), *rec);
    }

    known.insert(unknown.begin(), unknown.end());
  }

  LabelSet running = start_known;
  for (auto& inc : plan.increments) {
    inc.known_labels = running;
    running.insert(inc.novel_labels.begin(), inc.novel_labels.end());

    auto by_manifest_order = [&](const std::string& a, const std::string& b) {
      return manifest_pos.at(a) < manifest_pos.at(b);
    };
    for (Split split : {Split::train, Split::validation, Split::test}) {
      auto& ids = inc.ids(split);
      std::sort(ids.begin(), ids.end(), by_manifest_order);
    }
    if (options.shuffle_train_order) {
      Rng rng(derive_seed(seed, "order-" + std::to_string(inc.index)));
      shuffle(std::span<std::string>(inc.train_ids), rng);
    }
  }
  return plan;
}

}  // namespace owl
