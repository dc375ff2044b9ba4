#pragma once

#include <map>
#include <string>
#include <vector>

#include "owl/gaussian.hpp"
#include "owl/predictor.hpp"
#include "owl/threshold.hpp"

namespace owl {

/// Gaussian-mixture recognizer: one GMM per known class with components from
/// FINCH clusters, plus recognized "unknown_k" classes fitted on the pool of
/// samples that fell below the novelty threshold.
class GmmFinchPredictor final : public Predictor {
 public:
  GmmFinchPredictor(PredictorConfig config, std::size_t dim);
  explicit GmmFinchPredictor(const Checkpoint& ckpt);

  std::string_view kind() const override { return "gmm_finch"; }
  void fit_initial(std::span<const LabeledView> train,
                   std::span<const LabeledView> validation) override;
  void observe(std::span<const SampleView> train, std::span<const SampleView> eval) override;
  std::vector<PredictionRecord> predict(std::span<const SampleView> samples) const override;
  void update(std::span<const LabeledView> feedback) override;
  LabelSet known_labels() const override;
  double threshold() const override { return threshold_.value; }
  Checkpoint checkpoint() const override;

  const std::map<Label, ClassModel>& class_models() const { return classes_; }
  const std::vector<ClassModel>& recognized() const { return recognized_; }
  /// Pool member ids, sorted.
  std::vector<std::string> pool_ids() const;
  /// Recognized label per pool member, aligned with pool_ids().
  std::vector<Label> pool_assignment() const { return pool_assignment_; }

  /// Highest log-probability over the known class models.
  double max_known_log_prob(std::span<const double> x) const;

 private:
  struct Experience {
    std::vector<std::string> ids;
    std::vector<double> x;
  };

  void add_labeled(std::span<const LabeledView> samples, LabelSet& touched, bool calibrate);
  void refit(const LabelSet& labels);
  ClassModel fit_class(const Label& label, const std::vector<double>& x) const;
  void recluster_pool();
  void recalibrate();

  std::map<Label, Experience> experience_;
  std::map<std::string, Label> labeled_ids_;
  std::map<Label, ClassModel> classes_;
  std::map<std::string, std::vector<double>> pool_;
  std::vector<ClassModel> recognized_;
  std::vector<Label> pool_assignment_;
  std::vector<double> calib_x_;
  NoveltyThreshold threshold_;
};

/// Partition chosen from a FINCH hierarchy: level 0, or the coarsest level that
/// still has more than one cluster (level 0 when every level is a single cluster).
const Partition& select_partition(const std::vector<Partition>& hierarchy, FinchLevel level);

}  // namespace owl
