#include "owl/predictor.hpp"

#include <algorithm>

#include "owl/ann.hpp"
#include "owl/error.hpp"
#include "owl/gmm_finch.hpp"
#include "owl/rng.hpp"

namespace owl {

Predictor::Predictor(PredictorConfig config, std::size_t dim) : config_(std::move(config)), dim_(dim) {
  if (dim == 0) throw DataError("predictor feature dimension must be positive");
  if (!(config_.accepted_error > 0.0 && config_.accepted_error < 1.0))
    throw DataError("accepted_error must lie in (0, 1)");
}

void Predictor::check_dim(std::span<const double> x, std::string_view id) const {
  if (x.size() != dim_)
    throw DataError("sample '" + std::string(id) + "' has " + std::to_string(x.size()) +
                    " features, predictor expects " + std::to_string(dim_));
}

std::vector<std::string> Predictor::request_feedback_order(std::span<const SampleView> samples) const {
  const auto predictions = predict(samples);
  return feedback_order(predictions, config_.feedback_order,
                        derive_seed(config_.seed, "feedback-" + std::to_string(round_)));
}

std::vector<std::string> feedback_order(std::span<const PredictionRecord> predictions,
                                        FeedbackOrder mode, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(predictions.size());
  if (mode == FeedbackOrder::random) {
    for (const auto& p : predictions) ids.push_back(p.sample_id);
    Rng rng(seed);
    shuffle(std::span<std::string>(ids), rng);
    return ids;
  }
  std::vector<std::pair<double, const std::string*>> keyed;
  keyed.reserve(predictions.size());
  for (const auto& p : predictions) keyed.emplace_back(p.max_known_score(), &p.sample_id);
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return *a.second < *b.second;
  });
  for (const auto& [score, id] : keyed) ids.push_back(*id);
  return ids;
}

std::unique_ptr<Predictor> make_predictor(const PredictorConfig& config, std::size_t dim) {
  switch (config.kind) {
    case PredictorKind::ann: return std::make_unique<AnnPredictor>(config, dim);
    case PredictorKind::gmm_finch: return std::make_unique<GmmFinchPredictor>(config, dim);
  }
  throw UsageError("unknown predictor kind");
}

std::unique_ptr<Predictor> restore_predictor(const Checkpoint& ckpt) {
  const auto kind = ckpt.header.value("kind", std::string{});
  try {
    if (kind == "ann") return std::make_unique<AnnPredictor>(ckpt);
    if (kind == "gmm_finch") return std::make_unique<GmmFinchPredictor>(ckpt);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint: bad predictor config: ") + e.what());
  }
  throw DataError("checkpoint: unknown predictor kind '" + kind + "'");
}

}  // namespace owl
