#include <doctest.h>

#include <sstream>

#include "ari.hpp"
#include "owl/error.hpp"
#include "owl/gmm_finch.hpp"
#include "owl/synth.hpp"

using namespace owl;

namespace {

struct Data {
  Manifest manifest;
  FeatureStore features;
};

Data blobs(std::size_t classes, std::uint64_t seed) {
  BlobSpec spec;
  spec.classes = classes;
  spec.dim = 6;
  spec.per_class = {60};
  spec.separation = 10;
  spec.seed = seed;
  auto [m, f] = gen_blobs(spec);
  return {std::move(m), std::move(f)};
}

std::vector<LabeledView> labeled(const Data& d, Split split, bool novel) {
  std::vector<LabeledView> out;
  for (const auto& r : d.manifest.records())
    if (r.split == split && (r.label >= "class_003") == novel) out.push_back({r.id, r.label, d.features.at(r.id)});
  return out;
}

std::vector<SampleView> unlabeled(const std::vector<LabeledView>& v) {
  std::vector<SampleView> out;
  for (const auto& s : v) out.push_back({s.id, s.features});
  return out;
}

PredictorConfig config() {
  PredictorConfig c;
  c.kind = PredictorKind::gmm_finch;
  c.covariance = CovarianceKind::diagonal;
  c.accepted_error = 0.05;
  c.seed = 1;
  return c;
}

}  // namespace

TEST_CASE("select_partition") {
  const std::vector<Partition> h = {{0, 1, 2, 3}, {0, 0, 1, 1}, {0, 0, 0, 0}};
  CHECK(select_partition(h, FinchLevel::finest) == h[0]);
  CHECK(select_partition(h, FinchLevel::coarsest_nontrivial) == h[1]);
  const std::vector<Partition> single = {{0, 0}};
  CHECK(select_partition(single, FinchLevel::coarsest_nontrivial) == single[0]);
}

TEST_CASE("gmm-finch classifies known classes") {
  const auto d = blobs(3, 2);
  GmmFinchPredictor p(config(), 6);
  p.fit_initial(labeled(d, Split::train, false), labeled(d, Split::validation, false));
  CHECK(p.known_labels() == LabelSet{"class_000", "class_001", "class_002"});
  for (const auto& [label, model] : p.class_models()) {
    double total = 0.0;
    for (const auto& c : model.components) total += c.weight;
    CHECK(total == doctest::Approx(1.0));
  }
  const auto test = labeled(d, Split::test, false);
  const auto preds = p.predict(unlabeled(test));
  std::size_t right = 0;
  for (std::size_t i = 0; i < test.size(); ++i) right += preds[i].decision() == test[i].label;
  CHECK(right >= test.size() * 9 / 10);
}

TEST_CASE("gmm-finch pools and recognizes novel samples without labels") {
  const auto d = blobs(5, 3);
  auto cfg = config();
  cfg.finch_partition = FinchLevel::coarsest_nontrivial;
  GmmFinchPredictor p(cfg, 6);
  p.fit_initial(labeled(d, Split::train, false), labeled(d, Split::validation, false));
  const auto novel = labeled(d, Split::train, true);
  p.observe(unlabeled(novel), {});
  const auto pool = p.pool_ids();
  CHECK(pool.size() >= novel.size() * 9 / 10);
  CHECK_FALSE(p.recognized().empty());
  // Recognized clusters agree with the hidden novel classes.
  std::vector<std::string> truth;
  for (const auto& id : pool) truth.push_back(d.manifest.find(id)->label);
  CHECK(testing::adjusted_rand_index(p.pool_assignment(), truth) > 0.8);

  const auto test = labeled(d, Split::test, true);
  const auto preds = p.predict(unlabeled(test));
  std::size_t recognized = 0;
  for (const auto& pr : preds) recognized += pr.novelty_flag && pr.decision().starts_with("unknown_");
  CHECK(recognized >= test.size() * 9 / 10);
  // Known classes stay out of the recognized namespace.
  CHECK(p.known_labels().size() == 3);

  // Observing the same samples again does not grow the pool.
  p.observe(unlabeled(novel), {});
  CHECK(p.pool_ids() == pool);

  // Feedback turns pool members into a known class.
  std::vector<LabeledView> fb;
  for (const auto& s : novel)
    if (s.label == "class_003") fb.push_back(s);
  p.update(fb);
  CHECK(p.known_labels().contains("class_003"));
  for (const auto& id : p.pool_ids()) CHECK(d.manifest.find(id)->label != "class_003");
}

TEST_CASE("gmm-finch can use evaluation samples as unlabeled data") {
  const auto d = blobs(5, 4);
  auto c = config();
  c.use_eval_splits_as_unlabeled = true;
  GmmFinchPredictor with(c, 6), without(config(), 6);
  for (auto* p : {&with, &without}) p->fit_initial(labeled(d, Split::train, false), labeled(d, Split::validation, false));
  const auto eval = unlabeled(labeled(d, Split::test, true));
  with.observe({}, eval);
  without.observe({}, eval);
  CHECK(without.pool_ids().empty());
  CHECK_FALSE(with.pool_ids().empty());
}

TEST_CASE("gmm-finch checkpoints restore exactly") {
  const auto d = blobs(5, 5);
  GmmFinchPredictor p(config(), 6);
  p.fit_initial(labeled(d, Split::train, false), labeled(d, Split::validation, false));
  p.observe(unlabeled(labeled(d, Split::train, true)), {});
  std::stringstream buf;
  write_checkpoint(buf, p.checkpoint());
  const auto restored = restore_predictor(read_checkpoint(buf));
  CHECK(restored->kind() == "gmm_finch");
  const auto samples = unlabeled(labeled(d, Split::test, true));
  const auto a = p.predict(samples), b = restored->predict(samples);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].scores == b[i].scores);
    CHECK(a[i].novelty_flag == b[i].novelty_flag);
  }
}

TEST_CASE("feedback ordering") {
  std::vector<PredictionRecord> preds = {
      {"x", {{"a", 0.9}, {"unknown", 0.1}}, false},
      {"y", {{"a", 0.2}, {"unknown", 0.8}}, true},
      {"z", {{"a", 0.5}}, false},
      {"w", {{"a", 0.2}}, false}};
  CHECK(feedback_order(preds, FeedbackOrder::least_confident, 0) == std::vector<std::string>{"w", "y", "z", "x"});
  auto shuffled = feedback_order(preds, FeedbackOrder::random, 7);
  CHECK(shuffled == feedback_order(preds, FeedbackOrder::random, 7));
  std::sort(shuffled.begin(), shuffled.end());
  CHECK(shuffled == std::vector<std::string>{"w", "x", "y", "z"});
}

TEST_CASE("predictor construction checks its configuration") {
  PredictorConfig c;
  c.accepted_error = 0.0;
  CHECK_THROWS(make_predictor(c, 3));
  c.accepted_error = 0.1;
  CHECK(make_predictor(c, 3)->kind() == "ann");
  c.kind = PredictorKind::gmm_finch;
  CHECK(make_predictor(c, 3)->kind() == "gmm_finch");
  Checkpoint junk;
  junk.header = {{"kind", "tree"}};
  CHECK_THROWS_AS(restore_predictor(junk), DataError);
}
