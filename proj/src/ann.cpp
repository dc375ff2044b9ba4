#include "owl/ann.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "owl/config.hpp"
#include "owl/error.hpp"

namespace owl {
namespace {

constexpr double kOutputInitScale = 0.01;

Eigen::MatrixXd row_softmax(Eigen::MatrixXd z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double peak = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - peak).exp().matrix();
    z.row(i) /= z.row(i).sum();
  }
  return z;
}

Eigen::MatrixXd gather_rows(std::span<const double> flat, std::size_t dim) {
  const std::size_t n = dim == 0 ? 0 : flat.size() / dim;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * dim + j];
  return x;
}

template <typename View>
Eigen::MatrixXd stack(std::span<const View> samples, std::size_t dim) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = samples[i].features[j];
  return x;
}

std::vector<double> flatten(const Eigen::MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::MatrixXd>(out.data(), m.rows(), m.cols()) = m;
  return out;
}

Eigen::MatrixXd unflatten(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols)
    throw DataError("checkpoint: parameter block has the wrong length");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

}  // namespace

AnnModel::AnnModel(std::size_t input_dim, std::size_t hidden, std::vector<Label> known,
                   double leaky_slope, Rng& rng)
    : slope_(leaky_slope) {
  const auto d = static_cast<Eigen::Index>(input_dim);
  const auto h = static_cast<Eigen::Index>(hidden);
  // He-uniform for the hidden layer.
  const double limit = std::sqrt(6.0 / static_cast<double>(input_dim));
  w1_.resize(h, d);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < d; ++c) w1_(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
  b1_ = Eigen::VectorXd::Zero(h);

  labels_ = std::move(known);
  labels_.emplace_back(kUnknownLabel);
  const auto o = static_cast<Eigen::Index>(labels_.size());
  w2_.resize(o, h);
  for (Eigen::Index r = 0; r < o; ++r)
    for (Eigen::Index c = 0; c < h; ++c) w2_(r, c) = kOutputInitScale * rng.normal();
  b2_ = Eigen::VectorXd::Zero(o);

  velocity_ = {Eigen::MatrixXd::Zero(h, d), Eigen::VectorXd::Zero(h), Eigen::MatrixXd::Zero(o, h),
               Eigen::VectorXd::Zero(o)};
}

std::size_t AnnModel::output_index(std::string_view label) const {
  for (std::size_t i = 0; i + 1 < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  throw DataError("label '" + std::string(label) + "' is not an output of the classifier");
}

Eigen::MatrixXd AnnModel::logits(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd z1 = (x * w1_.transpose()).rowwise() + b1_.transpose();
  const double slope = slope_;
  z1 = z1.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  return (z1 * w2_.transpose()).rowwise() + b2_.transpose();
}

Eigen::MatrixXd AnnModel::probabilities(const Eigen::MatrixXd& x) const {
  return row_softmax(logits(x));
}

double AnnModel::loss_and_gradient(const Eigen::MatrixXd& x, std::span<const std::size_t> targets,
                                   const Eigen::MatrixXd& keep_mask, Gradient* grad) const {
  const Eigen::Index n = x.rows();
  if (static_cast<std::size_t>(n) != targets.size())
    throw DataError("loss_and_gradient: target count does not match batch size");
  const Eigen::MatrixXd z1 = (x * w1_.transpose()).rowwise() + b1_.transpose();
  const double slope = slope_;
  Eigen::MatrixXd h = z1.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  const bool masked = keep_mask.size() > 0;
  if (masked) h = h.cwiseProduct(keep_mask);
  const Eigen::MatrixXd z2 = (h * w2_.transpose()).rowwise() + b2_.transpose();
  Eigen::MatrixXd p = row_softmax(z2);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto t = static_cast<Eigen::Index>(targets[static_cast<std::size_t>(i)]);
    // log softmax directly from the logits for accuracy at tiny probabilities
    const double peak = z2.row(i).maxCoeff();
    const double lse = peak + std::log((z2.row(i).array() - peak).exp().sum());
    loss -= z2(i, t) - lse;
  }
  loss /= static_cast<double>(n);
  if (grad == nullptr) return loss;

  Eigen::MatrixXd dz2 = std::move(p);
  for (Eigen::Index i = 0; i < n; ++i) dz2(i, static_cast<Eigen::Index>(targets[static_cast<std::size_t>(i)])) -= 1.0;
  dz2 /= static_cast<double>(n);

  grad->w2 = dz2.transpose() * h;
  grad->b2 = dz2.colwise().sum().transpose();
  Eigen::MatrixXd dh = dz2 * w2_;
  if (masked) dh = dh.cwiseProduct(keep_mask);
  const Eigen::MatrixXd slope_mask = z1.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
  const Eigen::MatrixXd dz1 = dh.cwiseProduct(slope_mask);
  grad->w1 = dz1.transpose() * x;
  grad->b1 = dz1.colwise().sum().transpose();
  return loss;
}

void AnnModel::grow(std::span<const Label> new_labels, Rng& rng) {
  if (new_labels.empty()) return;
  LabelSet seen(labels_.begin(), labels_.end());
  for (const auto& label : new_labels)
    if (!seen.insert(label).second)
      throw DataError("cannot grow classifier: label '" + label + "' already present");

  const Eigen::Index old_known = static_cast<Eigen::Index>(labels_.size()) - 1;
  const auto added = static_cast<Eigen::Index>(new_labels.size());
  const Eigen::Index h = w2_.cols();
  const Eigen::Index o = old_known + added + 1;

  auto expand = [&](const Eigen::MatrixXd& w, const Eigen::VectorXd& b, bool init,
                    Eigen::MatrixXd& w_out, Eigen::VectorXd& b_out) {
    w_out.resize(o, h);
    b_out.resize(o);
    w_out.topRows(old_known) = w.topRows(old_known);
    b_out.head(old_known) = b.head(old_known);
    w_out.row(o - 1) = w.row(old_known);
    b_out(o - 1) = b(old_known);
    for (Eigen::Index r = old_known; r < old_known + added; ++r) {
      for (Eigen::Index c = 0; c < h; ++c) w_out(r, c) = init ? kOutputInitScale * rng.normal() : 0.0;
      b_out(r) = 0.0;
    }
  };
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  expand(w2_, b2_, true, w2, b2);
  Eigen::MatrixXd vw2;
  Eigen::VectorXd vb2;
  expand(velocity_.w2, velocity_.b2, false, vw2, vb2);
  w2_ = std::move(w2);
  b2_ = std::move(b2);
  velocity_.w2 = std::move(vw2);
  velocity_.b2 = std::move(vb2);

  labels_.pop_back();
  labels_.insert(labels_.end(), new_labels.begin(), new_labels.end());
  labels_.emplace_back(kUnknownLabel);
}

void AnnModel::apply(const Gradient& g, double learning_rate, double momentum) {
  velocity_.w1 = momentum * velocity_.w1 - learning_rate * g.w1;
  velocity_.b1 = momentum * velocity_.b1 - learning_rate * g.b1;
  velocity_.w2 = momentum * velocity_.w2 - learning_rate * g.w2;
  velocity_.b2 = momentum * velocity_.b2 - learning_rate * g.b2;
  w1_ += velocity_.w1;
  b1_ += velocity_.b1;
  w2_ += velocity_.w2;
  b2_ += velocity_.b2;
}

double ann_train_epoch(AnnModel& model, const Eigen::MatrixXd& x, std::span<const Label> labels,
                       const TrainOptions& options, std::uint64_t seed) {
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw DataError("ann_train_epoch: feature and label counts differ");
  if (x.rows() == 0) return 0.0;
  if (static_cast<std::size_t>(x.cols()) != model.input_dim())
    throw DataError("ann_train_epoch: feature dimension does not match the classifier");
  if (options.batch_size == 0) throw UsageError("ann_train_epoch: batch size must be positive");

  std::vector<std::size_t> targets(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) targets[i] = model.output_index(labels[i]);

  Rng rng(seed);
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(std::span<std::size_t>(order), rng);

  const double keep = 1.0 - options.dropout;
  const auto h = static_cast<Eigen::Index>(model.hidden());
  double total = 0.0;
  std::size_t batches = 0;
  AnnModel::Gradient grad;
  for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
    const std::size_t end = std::min(order.size(), start + options.batch_size);
    const auto n = static_cast<Eigen::Index>(end - start);
    Eigen::MatrixXd batch(n, x.cols());
    std::vector<std::size_t> batch_targets(end - start);
    for (std::size_t i = start; i < end; ++i) {
      batch.row(static_cast<Eigen::Index>(i - start)) = x.row(static_cast<Eigen::Index>(order[i]));
      batch_targets[i - start] = targets[order[i]];
    }
    Eigen::MatrixXd mask;
    if (options.dropout > 0.0) {
      mask.resize(n, h);
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < h; ++c) mask(r, c) = rng.uniform() < keep ? 1.0 / keep : 0.0;
    }
    total += model.loss_and_gradient(batch, batch_targets, mask, &grad);
    model.apply(grad, options.learning_rate, options.momentum);
    ++batches;
  }
  return total / static_cast<double>(batches);
}

AnnPredictor::AnnPredictor(PredictorConfig config, std::size_t dim)
    : Predictor(std::move(config), dim) {}

AnnPredictor::AnnPredictor(const Checkpoint& ckpt)
    : Predictor(predictor_config_from_json(ckpt.header.at("config")),
                ckpt.header.at("dim").get<std::size_t>()) {
  const auto& h = ckpt.header;
  round_ = h.at("round").get<std::uint64_t>();
  threshold_ = {h.at("threshold").get<double>(), h.at("calibration_size").get<std::size_t>()};
  const auto hidden = static_cast<Eigen::Index>(h.at("hidden").get<std::size_t>());
  const auto d = static_cast<Eigen::Index>(dim());
  auto labels = h.at("labels").get<std::vector<Label>>();
  const auto o = static_cast<Eigen::Index>(labels.size());
  model_.set_labels(std::move(labels));
  model_.set_leaky_slope(config().leaky_slope);
  model_.w1() = unflatten(ckpt.block("w1"), hidden, d);
  model_.b1() = unflatten(ckpt.block("b1"), hidden, 1);
  model_.w2() = unflatten(ckpt.block("w2"), o, hidden);
  model_.b2() = unflatten(ckpt.block("b2"), o, 1);
  model_.velocity() = {unflatten(ckpt.block("v_w1"), hidden, d), unflatten(ckpt.block("v_b1"), hidden, 1),
                       unflatten(ckpt.block("v_w2"), o, hidden), unflatten(ckpt.block("v_b2"), o, 1)};
  buffer_ids_ = h.at("buffer_ids").get<std::vector<std::string>>();
  buffer_labels_ = h.at("buffer_labels").get<std::vector<Label>>();
  buffer_x_ = ckpt.block("buffer_x");
  buffered_.insert(buffer_ids_.begin(), buffer_ids_.end());
  calib_labels_ = h.at("calibration_labels").get<std::vector<Label>>();
  calib_x_ = ckpt.block("calibration_x");
  if (buffer_x_.size() != buffer_ids_.size() * dim() || calib_x_.size() != calib_labels_.size() * dim())
    throw DataError("checkpoint: sample blocks do not match the declared dimension");
}

Checkpoint AnnPredictor::checkpoint() const {
  Checkpoint ckpt;
  auto& h = ckpt.header;
  h["kind"] = "ann";
  h["dim"] = dim();
  h["config"] = predictor_config_to_json(config());
  h["round"] = round_;
  h["threshold"] = threshold_.value;
  h["calibration_size"] = threshold_.calibration_size;
  h["hidden"] = model_.hidden();
  h["labels"] = model_.labels();
  h["buffer_ids"] = buffer_ids_;
  h["buffer_labels"] = buffer_labels_;
  h["calibration_labels"] = calib_labels_;
  ckpt.add_block("w1", flatten(model_.w1()));
  ckpt.add_block("b1", flatten(model_.b1()));
  ckpt.add_block("w2", flatten(model_.w2()));
  ckpt.add_block("b2", flatten(model_.b2()));
  ckpt.add_block("v_w1", flatten(model_.velocity().w1));
  ckpt.add_block("v_b1", flatten(model_.velocity().b1));
  ckpt.add_block("v_w2", flatten(model_.velocity().w2));
  ckpt.add_block("v_b2", flatten(model_.velocity().b2));
  ckpt.add_block("buffer_x", buffer_x_);
  ckpt.add_block("calibration_x", calib_x_);
  return ckpt;
}

void AnnPredictor::remember(std::span<const LabeledView> samples) {
  for (const auto& s : samples) {
    check_dim(s.features, s.id);
    if (!buffered_.insert(std::string(s.id)).second) continue;
    buffer_ids_.emplace_back(s.id);
    buffer_labels_.emplace_back(s.label);
    buffer_x_.insert(buffer_x_.end(), s.features.begin(), s.features.end());
  }
}

void AnnPredictor::train() {
  const Eigen::MatrixXd x = gather_rows(buffer_x_, dim());
  const TrainOptions options{config().learning_rate, config().momentum, config().batch_size,
                             config().dropout};
  for (std::size_t epoch = 0; epoch < config().epochs_per_increment; ++epoch) {
    const auto seed = derive_seed(config().seed, "train-" + std::to_string(round_) + "-" +
                                                     std::to_string(epoch));
    ann_train_epoch(model_, x, buffer_labels_, options, seed);
  }
}

void AnnPredictor::recalibrate() {
  if (calib_labels_.empty()) return;
  const Eigen::MatrixXd probs = model_.probabilities(gather_rows(calib_x_, dim()));
  std::vector<double> scores(calib_labels_.size());
  const Eigen::Index known = probs.cols() - 1;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    scores[static_cast<std::size_t>(i)] = probs.row(i).head(known).maxCoeff();
  threshold_ = calibrate_threshold(scores, config().accepted_error);
}

void AnnPredictor::fit_initial(std::span<const LabeledView> train,
                               std::span<const LabeledView> validation) {
  if (train.empty()) throw DataError("ann: initial increment has no training samples");
  LabelSet labels;
  for (const auto& s : train) labels.insert(std::string(s.label));
  Rng init(derive_seed(config().seed, "init"));
  const std::size_t hidden = config().hidden_width == 0 ? dim() : config().hidden_width;
  model_ = AnnModel(dim(), hidden, std::vector<Label>(labels.begin(), labels.end()),
                    config().leaky_slope, init);
  remember(train);
  for (const auto& s : validation) {
    check_dim(s.features, s.id);
    if (!labels.contains(std::string(s.label))) continue;
    calib_labels_.emplace_back(s.label);
    calib_x_.insert(calib_x_.end(), s.features.begin(), s.features.end());
  }
  // Without validation knowns, fall back to the training samples.
  if (calib_labels_.empty()) {
    calib_labels_ = buffer_labels_;
    calib_x_ = buffer_x_;
  }
  this->train();
  recalibrate();
  ++round_;
}

void AnnPredictor::update(std::span<const LabeledView> feedback) {
  if (feedback.empty()) return;
  std::vector<Label> fresh;
  const auto& current = model_.labels();
  LabelSet have(current.begin(), current.end());
  for (const auto& s : feedback) {
    std::string label(s.label);
    if (have.insert(label).second) fresh.push_back(std::move(label));
  }
  Rng grow_rng(derive_seed(config().seed, "grow-" + std::to_string(round_)));
  model_.grow(fresh, grow_rng);
  const std::size_t before = buffer_labels_.size();
  remember(feedback);
  // Feedback samples join the calibration set so newly learned classes count.
  calib_labels_.insert(calib_labels_.end(), buffer_labels_.begin() + static_cast<std::ptrdiff_t>(before),
                       buffer_labels_.end());
  calib_x_.insert(calib_x_.end(), buffer_x_.begin() + static_cast<std::ptrdiff_t>(before * dim()),
                  buffer_x_.end());
  train();
  recalibrate();
  ++round_;
}

std::vector<PredictionRecord> AnnPredictor::predict(std::span<const SampleView> samples) const {
  for (const auto& s : samples) check_dim(s.features, s.id);
  const Eigen::MatrixXd probs = model_.probabilities(stack(samples, dim()));
  const auto& labels = model_.labels();
  std::vector<PredictionRecord> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& rec = out[i];
    rec.sample_id = std::string(samples[i].id);
    for (std::size_t k = 0; k < labels.size(); ++k)
      rec.scores.emplace(labels[k], probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
    rec.novelty_flag = threshold_.is_novel(rec.max_known_score());
  }
  return out;
}

LabelSet AnnPredictor::known_labels() const {
  const auto& labels = model_.labels();
  return LabelSet(labels.begin(), labels.end() - 1);
}

}  // namespace owl
