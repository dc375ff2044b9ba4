#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "owl/checkpoint.hpp"
#include "owl/dataset.hpp"
#include "owl/finch.hpp"
#include "owl/gaussian.hpp"

namespace owl {

enum class PredictorKind { ann, gmm_finch };
enum class FeedbackOrder { least_confident, random };
enum class FinchLevel { finest, coarsest_nontrivial };

struct PredictorConfig {
  PredictorKind kind = PredictorKind::ann;
  /// Fraction of calibration knowns allowed to fall under the novelty threshold.
  double accepted_error = 0.10;
  FeedbackOrder feedback_order = FeedbackOrder::least_confident;
  std::size_t epochs_per_increment = 1;
  /// 0 means "same as the feature dimension".
  std::size_t hidden_width = 0;
  double dropout = 0.5;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 256;
  double leaky_slope = 0.01;
  CovarianceKind covariance = CovarianceKind::full;
  FinchLevel finch_partition = FinchLevel::finest;
  DistanceMetric finch_metric = DistanceMetric::euclidean;
  double regularization = 1e-6;
  bool use_eval_splits_as_unlabeled = false;
  std::uint64_t seed = 0;
};

struct SampleView {
  std::string_view id;
  std::span<const double> features;
};

struct LabeledView {
  std::string_view id;
  std::string_view label;
  std::span<const double> features;
};

/// Evaluator-facing predictor contract. Label information only ever arrives
/// through fit_initial and update.
class Predictor {
 public:
  explicit Predictor(PredictorConfig config, std::size_t dim);
  virtual ~Predictor() = default;

  const PredictorConfig& config() const { return config_; }
  std::size_t dim() const { return dim_; }
  virtual std::string_view kind() const = 0;

  /// Fully supervised fit on the initial increment; validation sets the threshold.
  virtual void fit_initial(std::span<const LabeledView> train,
                           std::span<const LabeledView> validation) = 0;
  /// New unlabeled data. `eval` holds evaluation-split samples the predictor
  /// may use when configured to.
  virtual void observe(std::span<const SampleView> train, std::span<const SampleView> eval) = 0;
  virtual std::vector<PredictionRecord> predict(std::span<const SampleView> samples) const = 0;
  /// Label feedback. An empty span leaves the state untouched.
  virtual void update(std::span<const LabeledView> feedback) = 0;

  /// Labels the predictor can output as known classes.
  virtual LabelSet known_labels() const = 0;
  virtual double threshold() const = 0;

  /// Ids in the order the predictor wants labels for them.
  virtual std::vector<std::string> request_feedback_order(std::span<const SampleView> samples) const;

  virtual Checkpoint checkpoint() const = 0;

 protected:
  void check_dim(std::span<const double> x, std::string_view id) const;
  /// Counts label updates; keys per-round random streams.
  std::uint64_t round_ = 0;

 private:
  PredictorConfig config_;
  std::size_t dim_;
};

/// Orders by ascending confidence (max known score, ties by id) or by a seeded
/// shuffle of the input order.
std::vector<std::string> feedback_order(std::span<const PredictionRecord> predictions,
                                        FeedbackOrder mode, std::uint64_t seed);

std::unique_ptr<Predictor> make_predictor(const PredictorConfig& config, std::size_t dim);
std::unique_ptr<Predictor> restore_predictor(const Checkpoint& ckpt);

}  // namespace owl
