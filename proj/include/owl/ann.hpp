#pragma once

#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "owl/predictor.hpp"
#include "owl/rng.hpp"
#include "owl/threshold.hpp"

namespace owl {

/// input(d) -> dense(h, LeakyReLU) -> dropout -> dense(|K| + 1) -> softmax.
/// The last output is the catch-all "unknown" unit.
class AnnModel {
 public:
  struct Gradient {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;
  };

  AnnModel() = default;
  AnnModel(std::size_t input_dim, std::size_t hidden, std::vector<Label> known, double leaky_slope,
           Rng& rng);

  std::size_t input_dim() const { return static_cast<std::size_t>(w1_.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1_.rows()); }
  std::size_t outputs() const { return labels_.size(); }
  /// Output labels; "unknown" is last.
  const std::vector<Label>& labels() const { return labels_; }
  /// Throws DataError for labels outside the output space.
  std::size_t output_index(std::string_view label) const;

  /// Pre-softmax outputs, one row per input row.
  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& x) const;

  /// Mean cross-entropy and its gradient. `keep_mask` (n x h, entries 0 or
  /// 1/(1-p)) applies inverted dropout; pass an empty matrix for none.
  double loss_and_gradient(const Eigen::MatrixXd& x, std::span<const std::size_t> targets,
                           const Eigen::MatrixXd& keep_mask, Gradient* grad) const;

  /// Appends one output row per label before the unknown unit. Existing rows
  /// are untouched. Throws DataError on duplicates.
  void grow(std::span<const Label> new_labels, Rng& rng);

  /// SGD with momentum: v = momentum * v - lr * g; theta += v.
  void apply(const Gradient& grad, double learning_rate, double momentum);

  Eigen::MatrixXd& w1() { return w1_; }
  Eigen::VectorXd& b1() { return b1_; }
  Eigen::MatrixXd& w2() { return w2_; }
  Eigen::VectorXd& b2() { return b2_; }
  const Eigen::MatrixXd& w1() const { return w1_; }
  const Eigen::VectorXd& b1() const { return b1_; }
  const Eigen::MatrixXd& w2() const { return w2_; }
  const Eigen::VectorXd& b2() const { return b2_; }
  const Gradient& velocity() const { return velocity_; }
  Gradient& velocity() { return velocity_; }
  double leaky_slope() const { return slope_; }

  void set_labels(std::vector<Label> labels) { labels_ = std::move(labels); }
  void set_leaky_slope(double slope) { slope_ = slope; }

 private:
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_;
  Eigen::MatrixXd w2_;
  Eigen::VectorXd b2_;
  Gradient velocity_;
  std::vector<Label> labels_;
  double slope_ = 0.01;
};

struct TrainOptions {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 256;
  double dropout = 0.5;
};

/// One pass over shuffled mini-batches. Returns the mean batch loss.
double ann_train_epoch(AnnModel& model, const Eigen::MatrixXd& x, std::span<const Label> labels,
                       const TrainOptions& options, std::uint64_t seed);

/// Threshold-calibrated softmax classifier baseline.
class AnnPredictor final : public Predictor {
 public:
  AnnPredictor(PredictorConfig config, std::size_t dim);
  explicit AnnPredictor(const Checkpoint& ckpt);

  std::string_view kind() const override { return "ann"; }
  void fit_initial(std::span<const LabeledView> train,
                   std::span<const LabeledView> validation) override;
  void observe(std::span<const SampleView>, std::span<const SampleView>) override {}
  std::vector<PredictionRecord> predict(std::span<const SampleView> samples) const override;
  void update(std::span<const LabeledView> feedback) override;
  LabelSet known_labels() const override;
  double threshold() const override { return threshold_.value; }
  Checkpoint checkpoint() const override;

  const AnnModel& model() const { return model_; }

 private:
  void remember(std::span<const LabeledView> samples);
  void train();
  void recalibrate();

  AnnModel model_;
  NoveltyThreshold threshold_;
  std::vector<std::string> buffer_ids_;
  std::unordered_set<std::string> buffered_;
  std::vector<Label> buffer_labels_;
  std::vector<double> buffer_x_;
  std::vector<Label> calib_labels_;
  std::vector<double> calib_x_;
};

}  // namespace owl
