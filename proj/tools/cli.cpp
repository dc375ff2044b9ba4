#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "owl/config.hpp"
#include "owl/error.hpp"
#include "owl/evaluator.hpp"
#include "owl/io.hpp"
#include "owl/measures.hpp"
#include "owl/parallel.hpp"
#include "owl/planner.hpp"
#include "owl/synth.hpp"

namespace owl::cli {
namespace {

using nlohmann::json;

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  T v{};
  if (!(in >> v) || !in.eof()) throw UsageError(what + ": cannot parse '" + text + "'");
  return v;
}

std::vector<StageSpec> parse_stages(const std::string& text) {
  std::vector<StageSpec> stages;
  for (const auto& item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("--stages: expected source:increments, got '" + item + "'");
    stages.push_back({parse_number<std::uint32_t>(item.substr(0, colon), "--stages"),
                      parse_number<std::size_t>(item.substr(colon + 1), "--stages")});
    if (stages.back().increments == 0) throw UsageError("--stages: increments must be positive");
  }
  if (stages.empty()) throw UsageError("--stages: no stages given");
  return stages;
}

Split flag_split(const std::string& text) {
  try {
    return parse_split(text);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

std::string format_value(double v) { return json(v).dump(); }

struct PlanArgs {
  std::vector<std::string> manifests;
  std::string start_known, stages, out, rule = "ceiling";
  std::uint64_t seed = 0;
  bool no_shuffle = false;
};

void cmd_plan(const PlanArgs& a) {
  std::vector<Manifest> releases;
  for (const auto& path : a.manifests) releases.push_back(load_manifest(path));
  const Manifest manifest = releases.size() == 1 ? std::move(releases.front()) : unify_labels(releases);
  const auto stages = parse_stages(a.stages);
  PlanOptions options;
  options.novel_rule = a.rule == "floor" ? NovelCountRule::floor : NovelCountRule::ceiling;
  options.shuffle_train_order = !a.no_shuffle;
  const LabelSet start = a.start_known.empty() ? LabelSet{} : load_label_list(a.start_known);
  const auto plan = plan_increments(manifest, start, stages, a.seed, options);
  if (a.out.empty()) {
    std::cout << plan_to_json(plan).dump() << '\n';
  } else {
    save_plan(a.out, plan);
  }
}

struct SynthArgs {
  std::size_t classes = 3, dim = 2;
  std::string per_class = "100", splits = "0.6,0.2,0.2", sources;
  double separation = 10.0, carry = 0.0;
  std::uint64_t seed = 0;
  std::string out_manifest, out_features, out_known;
};

void cmd_synth(const SynthArgs& a) {
  BlobSpec spec;
  spec.classes = a.classes;
  spec.dim = a.dim;
  spec.separation = a.separation;
  spec.seed = a.seed;
  spec.carry_fraction = a.carry;
  spec.per_class.clear();
  for (const auto& v : split_list(a.per_class)) spec.per_class.push_back(parse_number<std::size_t>(v, "--per-class"));
  const auto fractions = split_list(a.splits);
  if (fractions.size() != 3) throw UsageError("--splits: expected three fractions");
  for (std::size_t i = 0; i < 3; ++i) spec.split_fractions[i] = parse_number<double>(fractions[i], "--splits");
  if (!a.sources.empty()) {
    // count:source groups in class order, e.g. 20:0,10:1
    spec.class_source.clear();
    for (const auto& item : split_list(a.sources)) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw UsageError("--sources: expected count:source, got '" + item + "'");
      const auto n = parse_number<std::size_t>(item.substr(0, colon), "--sources");
      const auto s = parse_number<std::uint32_t>(item.substr(colon + 1), "--sources");
      spec.class_source.insert(spec.class_source.end(), n, s);
    }
    if (spec.class_source.size() != spec.classes) throw UsageError("--sources: counts must sum to --classes");
    spec.last_source = *std::max_element(spec.class_source.begin(), spec.class_source.end());
  }
  const auto [manifest, features] = gen_blobs(spec);
  save_manifest(a.out_manifest, manifest);
  save_features(a.out_features, features);
  if (!a.out_known.empty()) {
    auto out = open_output(a.out_known);
    for (std::size_t k = 0; k < spec.classes; ++k) {
      const auto source = spec.class_source.size() == 1 ? spec.class_source.front() : spec.class_source[k];
      if (source == 0) out << blob_label(k) << '\n';
    }
  }
}

void cmd_run(const std::string& config_path) {
  const RunConfig config = load_run_config(config_path);
  const Manifest manifest = load_manifest(config.manifest_path);
  const FeatureStore features = load_features(config.features_path);
  const ExperimentPlan plan = load_plan(config.plan_path);
  auto predictor = make_predictor(config.predictor, features.dim());

  std::ofstream log = open_output(config.output_path.string());
  std::ofstream outcomes;
  if (!config.outcomes_path.empty()) outcomes = open_output(config.outcomes_path.string());
  if (!config.checkpoint_dir.empty()) std::filesystem::create_directories(config.checkpoint_dir);

  RunHooks hooks;
  hooks.on_step = [&](const StepRecord& rec) { log << step_to_json(rec).dump() << '\n' << std::flush; };
  if (outcomes.is_open())
    hooks.on_outcome = [&](const SampleOutcome& o) { outcomes << outcome_to_json(o).dump() << '\n'; };
  if (!config.checkpoint_dir.empty())
    hooks.on_increment = [&](std::size_t t, const Predictor& p, const KnownLedger& ledger) {
      save_checkpoint(config.checkpoint_dir / ("increment_" + std::to_string(t) + ".owlc"),
                      experiment_checkpoint(t, p, ledger));
    };
  run_experiment(plan, manifest, features, *predictor, config.experiment, hooks);
}

struct MetricsArgs {
  std::string log, reduction = "raw", measure = "mcc", split;
  bool cumulative = false;
};

void cmd_metrics(const MetricsArgs& a) {
  const Reduction reduction = parse_reduction(a.reduction);
  const Measure measure = parse_measure(a.measure);
  const std::optional<Split> only = a.split.empty() ? std::nullopt : std::optional<Split>(flag_split(a.split));
  for (const auto& rec : load_log(a.log)) {
    if (only && rec.split != *only) continue;
    const MatrixReport* report = &rec.report;
    if (a.cumulative) {
      if (!rec.cumulative) throw DataError("log has no cumulative matrices");
      report = &*rec.cumulative;
    }
    auto it = report->matrices.find(reduction);
    if (it == report->matrices.end()) continue;
    std::cout << format_value(rec.step) << '\t' << to_string(rec.split) << '\t'
              << format_value(compute(measure, it->second)) << '\n';
  }
}

struct AblateArgs {
  std::string outcomes, log, manifest, key, reduction = "classification", measures = "accuracy,mcc,nmi", split;
  double step = -1.0;
  bool bins = false;
};

void cmd_ablate(const AblateArgs& a) {
  const Manifest manifest = load_manifest(a.manifest);
  const auto outcomes = load_outcomes(a.outcomes);
  std::map<std::pair<double, Split>, std::shared_ptr<const LabelSet>> known;
  for (const auto& rec : load_log(a.log))
    known[{rec.step, rec.split}] = std::make_shared<const LabelSet>(rec.known);
  const std::optional<Split> only = a.split.empty() ? std::nullopt : std::optional<Split>(flag_split(a.split));

  std::vector<Outcome> selected;
  for (const auto& o : outcomes) {
    if (only && o.split != *only) continue;
    if (a.step >= 0.0 && o.step != a.step) continue;
    const auto* rec = manifest.find(o.id);
    if (rec == nullptr) throw DataError("outcome id '" + o.id + "' is not in the manifest");
    auto it = known.find({o.step, o.split});
    if (it == known.end())
      throw DataError("no log record for step " + format_value(o.step) + " split " + std::string(to_string(o.split)));
    selected.push_back({o.truth, o.predicted, &rec->metadata, it->second});
  }
  GroupOptions options;
  options.key = a.key;
  options.tercile_bins = a.bins;
  options.reduction = parse_reduction(a.reduction);
  options.measures = split_list(a.measures);
  json out = json::object();
  for (const auto& [group, result] : group_metrics(selected, options)) {
    json values = json::object();
    for (const auto& [name, v] : result.values) values[name] = v;
    out[group] = {{"samples", result.samples}, {"measures", values}, {"matrix", confusion_to_json(result.matrix)}};
  }
  std::cout << out.dump(2) << '\n';
}

struct PerturbArgs {
  std::string features, kind = "identity", out;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
};

void cmd_perturb(const PerturbArgs& a) {
  const auto store = load_features(a.features);
  save_features(a.out, perturb(store, {parse_perturbation(a.kind), a.magnitude, a.seed}));
}

struct ReplayArgs {
  std::string checkpoint, plan, manifest, features, out, novelty_mode = "novel_to_predictor";
  std::vector<std::string> kinds = {"identity"};
  std::string splits = "train,test";
  std::size_t increment = 1;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
};

void cmd_replay(const ReplayArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const ExperimentPlan plan = load_plan(a.plan);
  if (a.increment >= plan.increments.size())
    throw UsageError("--increment: plan has " + std::to_string(plan.increments.size()) + " increments");
  const Manifest manifest = load_manifest(a.manifest);
  const FeatureStore features = load_features(a.features);
  ExperimentConfig config;
  config.novelty_mode = parse_novelty_mode(a.novelty_mode);
  config.evaluate_splits.clear();
  for (const auto& s : split_list(a.splits)) config.evaluate_splits.push_back(flag_split(s));

  std::ofstream log;
  if (!a.out.empty()) log = open_output(a.out);
  std::cout << "kind\tmagnitude\tstep\tsplit\taccuracy\tmcc\tnmi\n";
  for (const auto& kind : a.kinds) {
    const Perturbation p{parse_perturbation(kind), kind == "identity" ? 0.0 : a.magnitude, a.seed};
    for (const auto& rec : replay_with_perturbation(ckpt, plan.increments[a.increment], manifest, features, p, config)) {
      if (log.is_open()) {
        json j = step_to_json(rec);
        j["perturbation"] = {{"kind", kind}, {"magnitude", p.magnitude}, {"seed", p.seed}};
        log << j.dump() << '\n';
      }
      auto it = rec.report.measures.find(Reduction::classification);
      if (it == rec.report.measures.end()) continue;
      std::cout << kind << '\t' << format_value(p.magnitude) << '\t' << format_value(rec.step) << '\t'
                << to_string(rec.split) << '\t' << format_value(it->second.accuracy) << '\t'
                << format_value(it->second.mcc) << '\t' << format_value(it->second.nmi) << '\n';
    }
  }
}

struct ValidateArgs {
  std::string plan, manifest, features;
};

int cmd_validate(const ValidateArgs& a) {
  const ExperimentPlan plan = load_plan(a.plan);
  const Manifest manifest = load_manifest(a.manifest);
  auto violations = validate_plan(plan, manifest);
  if (!a.features.empty()) {
    const auto features = load_features(a.features);
    for (const auto& inc : plan.increments)
      for (Split s : {Split::train, Split::validation, Split::test})
        for (const auto& id : inc.ids(s))
          if (!features.contains(id)) violations.push_back("missing feature vector for id " + id);
  }
  for (const auto& v : violations) std::cerr << v << '\n';
  if (!violations.empty()) return 2;
  std::cout << "ok: " << plan.increments.size() << " increments\n";
  return 0;
}

}  // namespace

int execute(const std::vector<std::string>& args) {
  CLI::App app{"Open-world learning evaluation harness", "owl"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  bool threads_set = false;
  app.add_option_function<std::size_t>(
      "--threads", [&](std::size_t n) { threads = n, threads_set = true; }, "Worker threads (0 = auto)");

  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "Build an increment plan from manifests");
  plan_cmd->add_option("--manifest", plan.manifests, "Manifest CSV (repeat for several releases)")->required();
  plan_cmd->add_option("--start-known", plan.start_known, "File with one starting known label per line");
  plan_cmd->add_option("--stages", plan.stages, "source:increments,...")->required();
  plan_cmd->add_option("--seed", plan.seed);
  plan_cmd->add_option("--out", plan.out, "Output plan JSON (default stdout)");
  plan_cmd->add_option("--novel-rule", plan.rule)->check(CLI::IsMember({"ceiling", "floor"}));
  plan_cmd->add_flag("--no-shuffle", plan.no_shuffle, "Keep train ids in manifest order");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate Gaussian-blob data");
  synth_cmd->add_option("--classes", synth.classes);
  synth_cmd->add_option("--dim", synth.dim);
  synth_cmd->add_option("--per-class", synth.per_class, "n or n0,n1,...");
  synth_cmd->add_option("--separation", synth.separation);
  synth_cmd->add_option("--splits", synth.splits, "train,validation,test fractions");
  synth_cmd->add_option("--sources", synth.sources, "count:source groups in class order");
  synth_cmd->add_option("--carry", synth.carry, "Fraction re-released in later sources");
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--manifest", synth.out_manifest, "Output manifest CSV")->required();
  synth_cmd->add_option("--features", synth.out_features, "Output features (.owlf or .csv)")->required();
  synth_cmd->add_option("--known-out", synth.out_known, "Write source-0 labels here");

  std::string run_config;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment");
  run_cmd->add_option("--config", run_config)->required();

  MetricsArgs metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "Recompute a measure per logged step");
  metrics_cmd->add_option("--log", metrics.log)->required();
  metrics_cmd->add_option("--reduction", metrics.reduction);
  metrics_cmd->add_option("--measure", metrics.measure);
  metrics_cmd->add_option("--split", metrics.split);
  metrics_cmd->add_flag("--cumulative", metrics.cumulative);

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Group per-sample outcomes by a metadata key");
  ablate_cmd->add_option("--outcomes", ablate.outcomes)->required();
  ablate_cmd->add_option("--log", ablate.log)->required();
  ablate_cmd->add_option("--manifest", ablate.manifest)->required();
  ablate_cmd->add_option("--key", ablate.key)->required();
  ablate_cmd->add_flag("--bins", ablate.bins, "Bin numeric values into terciles");
  ablate_cmd->add_option("--reduction", ablate.reduction);
  ablate_cmd->add_option("--measures", ablate.measures);
  ablate_cmd->add_option("--split", ablate.split);
  ablate_cmd->add_option("--step", ablate.step);

  PerturbArgs pert;
  auto* perturb_cmd = app.add_subcommand("perturb", "Apply a feature-space perturbation");
  perturb_cmd->add_option("--features", pert.features)->required();
  perturb_cmd->add_option("--kind", pert.kind);
  perturb_cmd->add_option("--magnitude", pert.magnitude)->check(CLI::NonNegativeNumber);
  perturb_cmd->add_option("--seed", pert.seed);
  perturb_cmd->add_option("--out", pert.out)->required();

  ReplayArgs replay;
  auto* replay_cmd = app.add_subcommand("replay", "Replay an increment from a checkpoint with perturbed features");
  replay_cmd->add_option("--checkpoint", replay.checkpoint)->required();
  replay_cmd->add_option("--plan", replay.plan)->required();
  replay_cmd->add_option("--manifest", replay.manifest)->required();
  replay_cmd->add_option("--features", replay.features)->required();
  replay_cmd->add_option("--increment", replay.increment);
  replay_cmd->add_option("--kind", replay.kinds, "Perturbation kind (repeatable)");
  replay_cmd->add_option("--magnitude", replay.magnitude)->check(CLI::NonNegativeNumber);
  replay_cmd->add_option("--seed", replay.seed);
  replay_cmd->add_option("--splits", replay.splits);
  replay_cmd->add_option("--novelty-mode", replay.novelty_mode);
  replay_cmd->add_option("--out", replay.out, "JSON-lines records");

  ValidateArgs validate;
  auto* validate_cmd = app.add_subcommand("validate", "Check a plan against its manifest");
  validate_cmd->add_option("--plan", validate.plan)->required();
  validate_cmd->add_option("--manifest", validate.manifest)->required();
  validate_cmd->add_option("--features", validate.features);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "owl: " << e.what() << '\n';
    return 1;
  }

  try {
    if (threads_set) set_thread_count(threads);
    if (*plan_cmd) cmd_plan(plan);
    else if (*synth_cmd) cmd_synth(synth);
    else if (*run_cmd) cmd_run(run_config);
    else if (*metrics_cmd) cmd_metrics(metrics);
    else if (*ablate_cmd) cmd_ablate(ablate);
    else if (*perturb_cmd) cmd_perturb(pert);
    else if (*replay_cmd) cmd_replay(replay);
    else if (*validate_cmd) return cmd_validate(validate);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "owl: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "owl: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "owl: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace owl::cli
