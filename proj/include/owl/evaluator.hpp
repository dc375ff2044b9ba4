#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "owl/checkpoint.hpp"
#include "owl/confusion.hpp"
#include "owl/dataset.hpp"
#include "owl/predictor.hpp"
#include "owl/synth.hpp"

namespace owl {

enum class NoveltyMode { novel_to_predictor, novel_to_evaluator };

std::string_view to_string(NoveltyMode mode);
NoveltyMode parse_novelty_mode(std::string_view text);

struct ExperimentConfig {
  /// Fraction of each increment's training labels granted as feedback.
  double feedback_budget = 1.0;
  NoveltyMode novelty_mode = NoveltyMode::novel_to_predictor;
  std::vector<Split> evaluate_splits = {Split::train, Split::test};
  /// Also emit running cell-wise sums of the per-step reduced matrices.
  bool cumulative = false;
  /// Keep per-sample outcomes in the log (for grouped ablations).
  bool record_outcomes = false;
  std::uint64_t seed = 0;
};

struct MeasureValues {
  double accuracy = 0.0;
  double mcc = 0.0;
  double nmi = 0.0;

  bool operator==(const MeasureValues&) const = default;
};

inline constexpr Reduction kReductions[] = {Reduction::raw, Reduction::classification,
                                            Reduction::detection, Reduction::recognition};

struct MatrixReport {
  /// Keyed by reduction; raw included.
  std::map<Reduction, ConfusionMatrix> matrices;
  /// Empty when the split had no samples.
  std::map<Reduction, MeasureValues> measures;

  bool operator==(const MatrixReport&) const = default;
};

struct StepRecord {
  /// t for the pre-feedback phase, t + 0.5 for the post-feedback phase.
  double step = 0.0;
  Split split = Split::train;
  std::size_t samples = 0;
  /// Known set the reductions used.
  LabelSet known;
  MatrixReport report;
  /// Pre-feedback phases only.
  std::optional<double> reaction_time;
  /// Half steps only: ids whose labels were granted, in grant order.
  std::vector<std::string> feedback_granted_ids;
  std::optional<MatrixReport> cumulative;

  bool is_half_step() const;
  bool operator==(const StepRecord&) const = default;
};

struct SampleOutcome {
  double step = 0.0;
  Split split = Split::train;
  std::string id;
  Label truth;
  Label predicted;
  bool novelty_flag = false;

  bool operator==(const SampleOutcome&) const = default;
};

struct EvaluationLog {
  std::vector<StepRecord> steps;
  std::vector<SampleOutcome> outcomes;
};

struct KnownLedger {
  /// Labels the predictor has been given (initial fit plus feedback).
  LabelSet predictor_known;
  /// Labels of every sample the evaluator has presented so far.
  LabelSet evaluator_seen;

  bool operator==(const KnownLedger&) const = default;
};

/// Running sums for cumulative reporting, keyed by (split, half-step?).
struct CumulativeState {
  std::map<std::pair<Split, bool>, std::map<Reduction, ConfusionMatrix>> sums;
};

struct RunHooks {
  /// Called for every record as soon as it is produced.
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const SampleOutcome&)> on_outcome;
  /// Called after each increment completes (post-feedback state).
  std::function<void(std::size_t increment, const Predictor&, const KnownLedger&)> on_increment;
};

struct IncrementContext {
  const IncrementPlan& plan;
  const Manifest& manifest;
  const FeatureStore& features;
  const ExperimentConfig& config;
};

/// Pre-feedback evaluation (step t), feedback granting, post-feedback
/// evaluation (step t + 0.5). Returns the records of both phases.
std::vector<StepRecord> run_increment(const IncrementContext& ctx, Predictor& predictor,
                                      KnownLedger& ledger, CumulativeState* cumulative = nullptr,
                                      const RunHooks& hooks = {});

/// Supervised fit on increment 0 (reported at step 0.5), then run_increment for
/// every later increment. Throws DataError if the plan fails validation.
EvaluationLog run_experiment(const ExperimentPlan& plan, const Manifest& manifest,
                             const FeatureStore& features, Predictor& predictor,
                             const ExperimentConfig& config, const RunHooks& hooks = {});

/// Predictor checkpoint with the evaluator ledger stored under "evaluator".
Checkpoint experiment_checkpoint(std::size_t increment, const Predictor& predictor,
                                 const KnownLedger& ledger);
KnownLedger ledger_from_checkpoint(const Checkpoint& ckpt);

/// Restores the predictor and ledger from `ckpt` and replays the pre-feedback
/// phase of `plan` with perturbed features.
std::vector<StepRecord> replay_with_perturbation(const Checkpoint& ckpt, const IncrementPlan& plan,
                                                 const Manifest& manifest, const FeatureStore& features,
                                                 const Perturbation& perturbation,
                                                 const ExperimentConfig& config);

/// Grant size for a budget over n samples.
std::size_t feedback_count(double budget, std::size_t n);

}  // namespace owl
