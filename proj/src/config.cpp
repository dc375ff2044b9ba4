#include "owl/config.hpp"

#include <fstream>
#include <initializer_list>
#include <utility>

#include "owl/error.hpp"

namespace owl {
namespace {

using nlohmann::json;

template <typename E>
using Names = std::initializer_list<std::pair<E, const char*>>;

const Names<PredictorKind> kKinds = {{PredictorKind::ann, "ann"}, {PredictorKind::gmm_finch, "gmm_finch"}};
const Names<FeedbackOrder> kOrders = {{FeedbackOrder::least_confident, "least_confident"},
                                      {FeedbackOrder::random, "random"}};
const Names<CovarianceKind> kCovariances = {{CovarianceKind::full, "full"}, {CovarianceKind::diagonal, "diagonal"}};
const Names<FinchLevel> kLevels = {{FinchLevel::finest, "finest"},
                                   {FinchLevel::coarsest_nontrivial, "coarsest_nontrivial"}};
const Names<DistanceMetric> kMetrics = {{DistanceMetric::euclidean, "euclidean"}, {DistanceMetric::cosine, "cosine"}};

template <typename E>
const char* name_of(const Names<E>& names, E value) {
  for (const auto& [v, n] : names)
    if (v == value) return n;
  return "?";
}

bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "must be an object");
  }

  [[noreturn]] static void fail(const std::string& key, const std::string& msg) { throw UsageError(key + ": " + msg); }

  std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }
  bool has(const std::string& name) const { return j_.contains(name); }

  const json& raw(const std::string& name) {
    seen_.insert(name);
    return j_.at(name);
  }

  template <typename E>
  void enumeration(const std::string& name, const Names<E>& names, E& out) {
    if (!has(name)) return;
    const auto& v = raw(name);
    if (v.is_string())
      for (const auto& [e, n] : names)
        if (v.get<std::string>() == n) {
          out = e;
          return;
        }
    std::string allowed;
    for (const auto& [e, n] : names) allowed += (allowed.empty() ? "" : ", ") + std::string(n);
    fail(key(name), "must be one of " + allowed);
  }

  void real(const std::string& name, double& out) {
    if (!has(name)) return;
    const auto& v = raw(name);
    if (!v.is_number()) fail(key(name), "must be a number");
    out = v.get<double>();
  }

  void count(const std::string& name, std::size_t& out) {
    if (!has(name)) return;
    const auto& v = raw(name);
    if (!non_negative_integer(v)) fail(key(name), "must be a non-negative integer");
    out = v.get<std::size_t>();
  }

  void boolean(const std::string& name, bool& out) {
    if (!has(name)) return;
    const auto& v = raw(name);
    if (!v.is_boolean()) fail(key(name), "must be a boolean");
    out = v.get<bool>();
  }

  bool seed(const std::string& name, std::uint64_t& out) {
    if (!has(name)) return false;
    const auto& v = raw(name);
    if (!non_negative_integer(v)) fail(key(name), "must be a non-negative integer");
    out = v.get<std::uint64_t>();
    return true;
  }

  void string(const std::string& name, std::string& out) {
    if (!has(name)) return;
    const auto& v = raw(name);
    if (!v.is_string()) fail(key(name), "must be a string");
    out = v.get<std::string>();
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail(key(k), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) Reader::fail(key, msg);
}

}  // namespace

PredictorConfig predictor_config_from_json(const json& j, const std::string& path) {
  PredictorConfig c;
  Reader r(j, path);
  r.enumeration("kind", kKinds, c.kind);
  r.real("accepted_error", c.accepted_error);
  require(c.accepted_error > 0.0 && c.accepted_error < 1.0, r.key("accepted_error"), "must lie in (0, 1)");
  r.enumeration("feedback_order", kOrders, c.feedback_order);
  r.count("epochs_per_increment", c.epochs_per_increment);
  require(c.epochs_per_increment >= 1, r.key("epochs_per_increment"), "must be positive");
  if (r.has("hidden_width")) {
    const auto& v = r.raw("hidden_width");
    if (v.is_string() && v.get<std::string>() == "feature_dim") {
      c.hidden_width = 0;
    } else if (v.is_number_unsigned() && v.get<std::size_t>() > 0) {
      c.hidden_width = v.get<std::size_t>();
    } else {
      Reader::fail(r.key("hidden_width"), "must be \"feature_dim\" or a positive integer");
    }
  }
  r.real("dropout", c.dropout);
  require(c.dropout >= 0.0 && c.dropout < 1.0, r.key("dropout"), "must lie in [0, 1)");
  r.real("learning_rate", c.learning_rate);
  require(c.learning_rate >= 0.0, r.key("learning_rate"), "must be non-negative");
  r.real("momentum", c.momentum);
  require(c.momentum >= 0.0 && c.momentum < 1.0, r.key("momentum"), "must lie in [0, 1)");
  r.count("batch_size", c.batch_size);
  require(c.batch_size >= 1, r.key("batch_size"), "must be positive");
  r.real("leaky_slope", c.leaky_slope);
  r.enumeration("covariance", kCovariances, c.covariance);
  r.enumeration("finch_partition", kLevels, c.finch_partition);
  r.enumeration("finch_metric", kMetrics, c.finch_metric);
  r.real("regularization", c.regularization);
  require(c.regularization > 0.0, r.key("regularization"), "must be positive");
  r.boolean("use_eval_splits_as_unlabeled", c.use_eval_splits_as_unlabeled);
  r.seed("seed", c.seed);
  r.finish();
  return c;
}

json predictor_config_to_json(const PredictorConfig& c) {
  return {{"kind", name_of(kKinds, c.kind)},
          {"accepted_error", c.accepted_error},
          {"feedback_order", name_of(kOrders, c.feedback_order)},
          {"epochs_per_increment", c.epochs_per_increment},
          {"hidden_width", c.hidden_width == 0 ? json("feature_dim") : json(c.hidden_width)},
          {"dropout", c.dropout},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"batch_size", c.batch_size},
          {"leaky_slope", c.leaky_slope},
          {"covariance", name_of(kCovariances, c.covariance)},
          {"finch_partition", name_of(kLevels, c.finch_partition)},
          {"finch_metric", name_of(kMetrics, c.finch_metric)},
          {"regularization", c.regularization},
          {"use_eval_splits_as_unlabeled", c.use_eval_splits_as_unlabeled},
          {"seed", c.seed}};
}

ExperimentConfig experiment_config_from_json(const json& j, const std::string& path) {
  ExperimentConfig c;
  Reader r(j, path);
  r.real("feedback_budget", c.feedback_budget);
  require(c.feedback_budget >= 0.0 && c.feedback_budget <= 1.0, r.key("feedback_budget"), "must lie in [0, 1]");
  if (r.has("novelty_mode")) {
    const auto& v = r.raw("novelty_mode");
    try {
      if (!v.is_string()) throw UsageError("");
      c.novelty_mode = parse_novelty_mode(v.get<std::string>());
    } catch (const std::exception&) {
      Reader::fail(r.key("novelty_mode"), "must be novel_to_predictor or novel_to_evaluator");
    }
  }
  if (r.has("evaluate_splits")) {
    const auto& v = r.raw("evaluate_splits");
    if (!v.is_array() || v.empty()) Reader::fail(r.key("evaluate_splits"), "must be a nonempty array");
    c.evaluate_splits.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string k = r.key("evaluate_splits") + "[" + std::to_string(i) + "]";
      Split s;
      try {
        if (!v[i].is_string()) throw UsageError("");
        s = parse_split(v[i].get<std::string>());
      } catch (const std::exception&) {
        Reader::fail(k, "must be train, validation or test");
      }
      for (auto prev : c.evaluate_splits) require(prev != s, k, "duplicate split");
      c.evaluate_splits.push_back(s);
    }
  }
  r.boolean("cumulative", c.cumulative);
  r.boolean("record_outcomes", c.record_outcomes);
  r.seed("seed", c.seed);
  r.finish();
  return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json splits = json::array();
  for (auto s : c.evaluate_splits) splits.push_back(to_string(s));
  return {{"feedback_budget", c.feedback_budget}, {"novelty_mode", to_string(c.novelty_mode)},
          {"evaluate_splits", splits},            {"cumulative", c.cumulative},
          {"record_outcomes", c.record_outcomes}, {"seed", c.seed}};
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  Reader r(j, "");
  const bool top_seed = r.seed("seed", c.seed);
  auto path_field = [&](const std::string& name, std::filesystem::path& out, bool required) {
    std::string text;
    r.string(name, text);
    if (text.empty()) {
      require(!required, name, "required path is missing or empty");
      return;
    }
    out = text;
    if (out.is_relative() && !base_dir.empty()) out = base_dir / out;
  };
  path_field("plan_path", c.plan_path, true);
  path_field("manifest_path", c.manifest_path, true);
  path_field("features_path", c.features_path, true);
  path_field("output_path", c.output_path, true);
  path_field("outcomes_path", c.outcomes_path, false);
  path_field("checkpoint_dir", c.checkpoint_dir, false);
  const json empty = json::object();
  const json& pj = r.has("predictor") ? r.raw("predictor") : empty;
  const json& ej = r.has("experiment") ? r.raw("experiment") : empty;
  c.predictor = predictor_config_from_json(pj, "predictor");
  c.experiment = experiment_config_from_json(ej, "experiment");
  if (top_seed) {
    if (!pj.contains("seed")) c.predictor.seed = c.seed;
    if (!ej.contains("seed")) c.experiment.seed = c.seed;
  }
  if (!c.outcomes_path.empty()) c.experiment.record_outcomes = true;
  r.finish();
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json j = {{"seed", c.seed},
            {"plan_path", c.plan_path.string()},
            {"manifest_path", c.manifest_path.string()},
            {"features_path", c.features_path.string()},
            {"output_path", c.output_path.string()},
            {"predictor", predictor_config_to_json(c.predictor)},
            {"experiment", experiment_config_to_json(c.experiment)}};
  if (!c.outcomes_path.empty()) j["outcomes_path"] = c.outcomes_path.string();
  if (!c.checkpoint_dir.empty()) j["checkpoint_dir"] = c.checkpoint_dir.string();
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

}  // namespace owl
