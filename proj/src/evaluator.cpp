#include "owl/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_set>

#include "owl/error.hpp"
#include "owl/measures.hpp"

namespace owl {
namespace {

std::vector<SampleView> views_of(const std::vector<std::string>& ids, const FeatureStore& features) {
  std::vector<SampleView> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back({id, features.at(id)});
  return out;
}

const SampleRecord& record_of(const Manifest& manifest, const std::string& id) {
  const SampleRecord* rec = manifest.find(id);
  if (rec == nullptr) throw DataError("id '" + id + "' is not in the manifest");
  return *rec;
}

MatrixReport report_for(const ConfusionMatrix& raw, const LabelSet& known) {
  MatrixReport report;
  for (Reduction mode : kReductions) report.matrices.emplace(mode, reduce_confusion(raw, mode, known));
  return report;
}

void fill_measures(MatrixReport& report) {
  report.measures.clear();
  for (const auto& [mode, cm] : report.matrices) {
    if (cm.total() == 0) continue;
    report.measures.emplace(mode, MeasureValues{accuracy(cm), mcc(cm), nmi_arith(cm)});
  }
}

struct Phase {
  double step;
  bool half;
  const LabelSet& known;
  const LabelSet* seen_before;  // for reaction time; null on half steps
  std::vector<std::string> granted;
};

std::vector<StepRecord> evaluate_phase(const IncrementContext& ctx, const Predictor& predictor,
                                       const Phase& phase, CumulativeState* cumulative,
                                       const RunHooks& hooks) {
  std::vector<StepRecord> out;
  for (Split split : ctx.config.evaluate_splits) {
    const auto& ids = ctx.plan.ids(split);
    const auto views = views_of(ids, ctx.features);
    const auto predictions = predictor.predict(views);
    if (predictions.size() != ids.size())
      throw DataError("predictor returned " + std::to_string(predictions.size()) + " predictions for " +
                      std::to_string(ids.size()) + " samples");

    StepRecord rec;
    rec.step = phase.step;
    rec.split = split;
    rec.samples = ids.size();
    rec.known = phase.known;
    rec.feedback_granted_ids = phase.granted;

    ConfusionMatrix raw;
    auto truth_novel = std::make_unique<bool[]>(ids.size());
    auto pred_novel = std::make_unique<bool[]>(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const Label& truth = record_of(ctx.manifest, ids[i]).label;
      const Label predicted = predictions[i].decision();
      raw.add(truth, predicted);
      if (phase.seen_before != nullptr) {
        truth_novel[i] = !phase.seen_before->contains(truth);
        pred_novel[i] = predictions[i].novelty_flag;
      }
      if (ctx.config.record_outcomes && hooks.on_outcome)
        hooks.on_outcome({phase.step, split, ids[i], truth, predicted, predictions[i].novelty_flag});
    }
    rec.report = report_for(raw, phase.known);
    fill_measures(rec.report);
    if (phase.seen_before != nullptr) rec.reaction_time = reaction_time({truth_novel.get(), ids.size()}, {pred_novel.get(), ids.size()});

    if (cumulative != nullptr) {
      auto& sums = cumulative->sums[{split, phase.half}];
      MatrixReport running;
      for (const auto& [mode, cm] : rec.report.matrices) {
        auto it = sums.find(mode);
        if (it == sums.end()) {
          it = sums.emplace(mode, cm).first;
        } else {
          const ConfusionMatrix pair[] = {it->second, cm};
          it->second = aggregate(pair);
        }
        running.matrices.emplace(mode, it->second);
      }
      fill_measures(running);
      rec.cumulative = std::move(running);
    }
    if (hooks.on_step) hooks.on_step(rec);
    out.push_back(std::move(rec));
  }
  return out;
}

void check_features(const IncrementPlan& plan, const FeatureStore& features) {
  for (Split split : {Split::train, Split::validation, Split::test})
    for (const auto& id : plan.ids(split))
      if (!features.contains(id)) throw DataError("missing feature vector for id '" + id + "'");
}

std::vector<std::string> eval_ids(const IncrementPlan& plan) {
  std::vector<std::string> ids = plan.validation_ids;
  ids.insert(ids.end(), plan.test_ids.begin(), plan.test_ids.end());
  return ids;
}

}  // namespace

std::string_view to_string(NoveltyMode mode) {
  return mode == NoveltyMode::novel_to_predictor ? "novel_to_predictor" : "novel_to_evaluator";
}

NoveltyMode parse_novelty_mode(std::string_view text) {
  if (text == "novel_to_predictor") return NoveltyMode::novel_to_predictor;
  if (text == "novel_to_evaluator") return NoveltyMode::novel_to_evaluator;
  throw UsageError("unknown novelty mode '" + std::string(text) + "'");
}

bool StepRecord::is_half_step() const { return step != std::floor(step); }

std::size_t feedback_count(double budget, std::size_t n) {
  if (!(budget >= 0.0 && budget <= 1.0)) throw DataError("feedback budget must lie in [0, 1]");
  // Tolerance keeps e.g. 0.29 * 100 on 29.
  const auto k = static_cast<std::size_t>(std::floor(budget * static_cast<double>(n) + 1e-9));
  return std::min(k, n);
}

std::vector<StepRecord> run_increment(const IncrementContext& ctx, Predictor& predictor,
                                      KnownLedger& ledger, CumulativeState* cumulative,
                                      const RunHooks& hooks) {
  const IncrementPlan& plan = ctx.plan;
  check_features(plan, ctx.features);
  const double t = static_cast<double>(plan.index);
  const bool to_predictor = ctx.config.novelty_mode == NoveltyMode::novel_to_predictor;

  // (1) unlabeled data to the predictor
  const auto train_views = views_of(plan.train_ids, ctx.features);
  const auto eval_views = views_of(eval_ids(plan), ctx.features);
  predictor.observe(train_views, eval_views);

  // (2) pre-feedback evaluation
  const LabelSet seen_before = ledger.evaluator_seen;
  const LabelSet known_pre = to_predictor ? ledger.predictor_known : seen_before;
  auto records = evaluate_phase(ctx, predictor, Phase{t, false, known_pre, &seen_before, {}}, cumulative, hooks);

  for (Split split : {Split::train, Split::validation, Split::test})
    for (const auto& id : plan.ids(split)) ledger.evaluator_seen.insert(record_of(ctx.manifest, id).label);

  // (3) feedback in the predictor's requested order
  const auto order = predictor.request_feedback_order(train_views);
  {
    std::vector<std::string> a = order, b = plan.train_ids;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) throw DataError("predictor feedback order is not a permutation of the increment's train ids");
  }
  const std::size_t grant = feedback_count(ctx.config.feedback_budget, order.size());
  std::vector<std::string> granted(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(grant));
  std::vector<LabeledView> feedback;
  feedback.reserve(grant);
  for (const auto& id : granted) {
    const auto& rec = record_of(ctx.manifest, id);
    feedback.push_back({rec.id, rec.label, ctx.features.at(id)});
    ledger.predictor_known.insert(rec.label);
  }

  // (4) update and post-feedback evaluation
  predictor.update(feedback);
  const LabelSet& known_post = to_predictor ? ledger.predictor_known : ledger.evaluator_seen;
  auto post = evaluate_phase(ctx, predictor, Phase{t + 0.5, true, known_post, nullptr, granted}, cumulative, hooks);
  records.insert(records.end(), std::make_move_iterator(post.begin()), std::make_move_iterator(post.end()));
  return records;
}

EvaluationLog run_experiment(const ExperimentPlan& plan, const Manifest& manifest,
                             const FeatureStore& features, Predictor& predictor,
                             const ExperimentConfig& config, const RunHooks& hooks) {
  if (plan.increments.empty()) throw DataError("plan has no increments");
  const auto violations = validate_plan(plan, manifest);
  if (!violations.empty()) throw DataError("invalid plan: " + violations.front());

  EvaluationLog log;
  RunHooks inner = hooks;
  inner.on_outcome = [&](const SampleOutcome& o) {
    log.outcomes.push_back(o);
    if (hooks.on_outcome) hooks.on_outcome(o);
  };
  CumulativeState state;
  CumulativeState* cumulative = config.cumulative ? &state : nullptr;

  // Increment 0: fully supervised.
  const IncrementPlan& first = plan.increments.front();
  check_features(first, features);
  std::vector<LabeledView> train, validation;
  KnownLedger ledger;
  ledger.predictor_known = first.known_labels;
  for (const auto& id : first.train_ids) {
    const auto& rec = record_of(manifest, id);
    train.push_back({rec.id, rec.label, features.at(id)});
    ledger.predictor_known.insert(rec.label);
  }
  for (const auto& id : first.validation_ids) {
    const auto& rec = record_of(manifest, id);
    validation.push_back({rec.id, rec.label, features.at(id)});
  }
  for (Split split : {Split::train, Split::validation, Split::test})
    for (const auto& id : first.ids(split)) ledger.evaluator_seen.insert(record_of(manifest, id).label);
  predictor.fit_initial(train, validation);

  const IncrementContext ctx0{first, manifest, features, config};
  const LabelSet& known0 =
      config.novelty_mode == NoveltyMode::novel_to_predictor ? ledger.predictor_known : ledger.evaluator_seen;
  for (auto& rec : evaluate_phase(ctx0, predictor, Phase{0.5, true, known0, nullptr, {}}, cumulative, inner))
    log.steps.push_back(std::move(rec));
  if (hooks.on_increment) hooks.on_increment(0, predictor, ledger);

  for (std::size_t t = 1; t < plan.increments.size(); ++t) {
    const IncrementContext ctx{plan.increments[t], manifest, features, config};
    for (auto& rec : run_increment(ctx, predictor, ledger, cumulative, inner)) log.steps.push_back(std::move(rec));
    if (hooks.on_increment) hooks.on_increment(t, predictor, ledger);
  }
  return log;
}

Checkpoint experiment_checkpoint(std::size_t increment, const Predictor& predictor, const KnownLedger& ledger) {
  Checkpoint ckpt = predictor.checkpoint();
  ckpt.header["evaluator"] = {{"increment", increment},
                              {"predictor_known", ledger.predictor_known},
                              {"evaluator_seen", ledger.evaluator_seen}};
  return ckpt;
}

KnownLedger ledger_from_checkpoint(const Checkpoint& ckpt) {
  if (!ckpt.header.contains("evaluator")) throw DataError("checkpoint has no evaluator ledger");
  try {
    const auto& e = ckpt.header.at("evaluator");
    return {e.at("predictor_known").get<LabelSet>(), e.at("evaluator_seen").get<LabelSet>()};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed evaluator ledger: ") + e.what());
  }
}

std::vector<StepRecord> replay_with_perturbation(const Checkpoint& ckpt, const IncrementPlan& plan,
                                                 const Manifest& manifest, const FeatureStore& features,
                                                 const Perturbation& perturbation,
                                                 const ExperimentConfig& config) {
  auto predictor = restore_predictor(ckpt);
  KnownLedger ledger = ledger_from_checkpoint(ckpt);
  if (predictor->dim() != features.dim())
    throw DataError("checkpoint expects " + std::to_string(predictor->dim()) + " features, store has " +
                    std::to_string(features.dim()));
  check_features(plan, features);

  FeatureStore subset(features.dim());
  for (Split split : {Split::train, Split::validation, Split::test})
    for (const auto& id : plan.ids(split)) subset.insert(id, features.at(id));
  const FeatureStore perturbed = perturb(subset, perturbation);

  const IncrementContext ctx{plan, manifest, perturbed, config};
  predictor->observe(views_of(plan.train_ids, perturbed), views_of(eval_ids(plan), perturbed));
  const LabelSet seen_before = ledger.evaluator_seen;
  const LabelSet known =
      config.novelty_mode == NoveltyMode::novel_to_predictor ? ledger.predictor_known : seen_before;
  return evaluate_phase(ctx, *predictor, Phase{static_cast<double>(plan.index), false, known, &seen_before, {}},
                        nullptr, {});
}

}  // namespace owl
