#include "owl/gmm_finch.hpp"

#include <algorithm>
#include <limits>

#include "owl/config.hpp"
#include "owl/error.hpp"
#include "owl/parallel.hpp"

namespace owl {
namespace {

Eigen::MatrixXd rows_of(const std::vector<double>& flat, std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(flat.size() / dim);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      x(i, j) = flat[static_cast<std::size_t>(i) * dim + static_cast<std::size_t>(j)];
  return x;
}

}  // namespace

const Partition& select_partition(const std::vector<Partition>& hierarchy, FinchLevel level) {
  if (hierarchy.empty()) throw DataError("select_partition: empty hierarchy");
  if (level == FinchLevel::finest) return hierarchy.front();
  for (auto it = hierarchy.rbegin(); it != hierarchy.rend(); ++it)
    if (cluster_count(*it) > 1) return *it;
  return hierarchy.front();
}

GmmFinchPredictor::GmmFinchPredictor(PredictorConfig config, std::size_t dim)
    : Predictor(std::move(config), dim) {}

ClassModel GmmFinchPredictor::fit_class(const Label& label, const std::vector<double>& flat) const {
  const Eigen::MatrixXd x = rows_of(flat, dim());
  const auto hierarchy = finch_cluster(x, config().finch_metric);
  const Partition& part = select_partition(hierarchy, config().finch_partition);
  const std::size_t k = cluster_count(part);

  std::vector<std::vector<Eigen::Index>> members(k);
  for (std::size_t i = 0; i < part.size(); ++i) members[part[i]].push_back(static_cast<Eigen::Index>(i));

  ClassModel model;
  model.label = label;
  const Regularization reg{config().regularization, true};
  const double n = static_cast<double>(x.rows());
  for (const auto& idx : members) {
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) pts.row(static_cast<Eigen::Index>(r)) = x.row(idx[r]);
    GaussianComponent c = fit_gaussian(pts, reg, config().covariance);
    c.weight = static_cast<double>(idx.size()) / n;
    model.components.push_back(std::move(c));
  }
  return model;
}

void GmmFinchPredictor::add_labeled(std::span<const LabeledView> samples, LabelSet& touched, bool calibrate) {
  for (const auto& s : samples) {
    check_dim(s.features, s.id);
    std::string id(s.id);
    if (labeled_ids_.contains(id)) continue;
    labeled_ids_.emplace(id, std::string(s.label));
    auto& exp = experience_[std::string(s.label)];
    exp.ids.push_back(id);
    exp.x.insert(exp.x.end(), s.features.begin(), s.features.end());
    touched.insert(std::string(s.label));
    if (calibrate) calib_x_.insert(calib_x_.end(), s.features.begin(), s.features.end());
    pool_.erase(id);
  }
}

void GmmFinchPredictor::refit(const LabelSet& labels) {
  std::vector<Label> todo(labels.begin(), labels.end());
  std::vector<ClassModel> fitted(todo.size());
  parallel_for(todo.size(), [&](std::size_t i) { fitted[i] = fit_class(todo[i], experience_.at(todo[i]).x); });
  for (auto& m : fitted) classes_[m.label] = std::move(m);
}

double GmmFinchPredictor::max_known_log_prob(std::span<const double> x) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [label, model] : classes_) best = std::max(best, gmm_log_prob(model, x));
  return best;
}

void GmmFinchPredictor::recalibrate() {
  if (calib_x_.empty()) return;
  const std::size_t n = calib_x_.size() / dim();
  std::vector<double> scores(n);
  parallel_for(n, [&](std::size_t i) {
    scores[i] = max_known_log_prob(std::span<const double>(calib_x_.data() + i * dim(), dim()));
  });
  threshold_ = calibrate_threshold(scores, config().accepted_error);
}

void GmmFinchPredictor::recluster_pool() {
  recognized_.clear();
  pool_assignment_.clear();
  if (pool_.empty()) return;
  std::vector<double> flat;
  flat.reserve(pool_.size() * dim());
  for (const auto& [id, x] : pool_) flat.insert(flat.end(), x.begin(), x.end());
  const Eigen::MatrixXd x = rows_of(flat, dim());
  const auto hierarchy = finch_cluster(x, config().finch_metric);
  const Partition& part = select_partition(hierarchy, config().finch_partition);
  const std::size_t k = cluster_count(part);

  std::vector<std::vector<Eigen::Index>> members(k);
  for (std::size_t i = 0; i < part.size(); ++i) members[part[i]].push_back(static_cast<Eigen::Index>(i));
  const Regularization reg{config().regularization, true};
  for (std::size_t c = 0; c < k; ++c) {
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(members[c].size()), x.cols());
    for (std::size_t r = 0; r < members[c].size(); ++r)
      pts.row(static_cast<Eigen::Index>(r)) = x.row(members[c][r]);
    ClassModel model;
    model.label = recognized_label(c + 1);
    model.components.push_back(fit_gaussian(pts, reg, config().covariance));
    recognized_.push_back(std::move(model));
  }
  for (std::size_t i = 0; i < part.size(); ++i) pool_assignment_.push_back(recognized_[part[i]].label);
}

void GmmFinchPredictor::fit_initial(std::span<const LabeledView> train,
                                    std::span<const LabeledView> validation) {
  if (train.empty()) throw DataError("gmm_finch: initial increment has no training samples");
  LabelSet touched;
  add_labeled(train, touched, false);
  refit(touched);
  for (const auto& s : validation) {
    check_dim(s.features, s.id);
    if (!classes_.contains(std::string(s.label))) continue;
    calib_x_.insert(calib_x_.end(), s.features.begin(), s.features.end());
  }
  if (calib_x_.empty())
    for (const auto& [label, exp] : experience_) calib_x_.insert(calib_x_.end(), exp.x.begin(), exp.x.end());
  recalibrate();
  ++round_;
}

void GmmFinchPredictor::observe(std::span<const SampleView> train, std::span<const SampleView> eval) {
  std::vector<SampleView> batch(train.begin(), train.end());
  if (config().use_eval_splits_as_unlabeled) batch.insert(batch.end(), eval.begin(), eval.end());
  for (const auto& s : batch) check_dim(s.features, s.id);

  std::vector<char> novel(batch.size(), 0);
  parallel_for(batch.size(), [&](std::size_t i) {
    novel[i] = threshold_.is_novel(max_known_log_prob(batch[i].features)) ? 1 : 0;
  });
  bool changed = false;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!novel[i]) continue;
    std::string id(batch[i].id);
    if (labeled_ids_.contains(id) || pool_.contains(id)) continue;
    pool_.emplace(std::move(id), std::vector<double>(batch[i].features.begin(), batch[i].features.end()));
    changed = true;
  }
  if (changed) recluster_pool();
}

void GmmFinchPredictor::update(std::span<const LabeledView> feedback) {
  if (feedback.empty()) return;
  const std::size_t pool_before = pool_.size();
  LabelSet touched;
  add_labeled(feedback, touched, true);
  refit(touched);
  recalibrate();
  if (pool_.size() != pool_before) recluster_pool();
  ++round_;
}

std::vector<PredictionRecord> GmmFinchPredictor::predict(std::span<const SampleView> samples) const {
  for (const auto& s : samples) check_dim(s.features, s.id);
  std::vector<PredictionRecord> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    auto& rec = out[i];
    rec.sample_id = std::string(samples[i].id);
    for (const auto& [label, model] : classes_) rec.scores.emplace(label, gmm_log_prob(model, samples[i].features));
    for (const auto& model : recognized_) rec.scores.emplace(model.label, gmm_log_prob(model, samples[i].features));
    rec.novelty_flag = threshold_.is_novel(rec.max_known_score());
  });
  return out;
}

LabelSet GmmFinchPredictor::known_labels() const {
  LabelSet out;
  for (const auto& [label, model] : classes_) out.insert(label);
  return out;
}

std::vector<std::string> GmmFinchPredictor::pool_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, x] : pool_) ids.push_back(id);
  return ids;
}

Checkpoint GmmFinchPredictor::checkpoint() const {
  Checkpoint ckpt;
  auto& h = ckpt.header;
  h["kind"] = "gmm_finch";
  h["dim"] = dim();
  h["config"] = predictor_config_to_json(config());
  h["round"] = round_;
  h["threshold"] = threshold_.value;
  h["calibration_size"] = threshold_.calibration_size;
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& [label, exp] : experience_) {
    classes.push_back({{"label", label}, {"ids", exp.ids}});
    ckpt.add_block("class:" + label, exp.x);
  }
  h["classes"] = std::move(classes);
  std::vector<std::string> pool_ids;
  std::vector<double> pool_x;
  for (const auto& [id, x] : pool_) {
    pool_ids.push_back(id);
    pool_x.insert(pool_x.end(), x.begin(), x.end());
  }
  h["pool_ids"] = pool_ids;
  ckpt.add_block("pool_x", std::move(pool_x));
  ckpt.add_block("calibration_x", calib_x_);
  return ckpt;
}

GmmFinchPredictor::GmmFinchPredictor(const Checkpoint& ckpt)
    : Predictor(predictor_config_from_json(ckpt.header.at("config")),
                ckpt.header.at("dim").get<std::size_t>()) {
  const auto& h = ckpt.header;
  round_ = h.at("round").get<std::uint64_t>();
  LabelSet touched;
  for (const auto& entry : h.at("classes")) {
    const auto label = entry.at("label").get<Label>();
    Experience exp;
    exp.ids = entry.at("ids").get<std::vector<std::string>>();
    exp.x = ckpt.block("class:" + label);
    if (exp.x.size() != exp.ids.size() * dim())
      throw DataError("checkpoint: class block '" + label + "' has the wrong length");
    for (const auto& id : exp.ids) labeled_ids_.emplace(id, label);
    experience_.emplace(label, std::move(exp));
    touched.insert(label);
  }
  refit(touched);
  const auto ids = h.at("pool_ids").get<std::vector<std::string>>();
  const auto& pool_x = ckpt.block("pool_x");
  if (pool_x.size() != ids.size() * dim()) throw DataError("checkpoint: pool block has the wrong length");
  for (std::size_t i = 0; i < ids.size(); ++i)
    pool_.emplace(ids[i], std::vector<double>(pool_x.begin() + static_cast<std::ptrdiff_t>(i * dim()),
                                              pool_x.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim())));
  calib_x_ = ckpt.block("calibration_x");
  threshold_ = {h.at("threshold").get<double>(), h.at("calibration_size").get<std::size_t>()};
  recluster_pool();
}

}  // namespace owl
