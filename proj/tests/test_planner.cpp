#include <doctest.h>

#include <algorithm>
#include <set>

#include "owl/error.hpp"
#include "owl/planner.hpp"
#include "support.hpp"

using namespace owl;

namespace {

/// Classes per source with varied train frequencies and one test sample each.
Manifest schedule_manifest(const std::vector<std::size_t>& classes_per_source) {
  std::vector<SampleRecord> records;
  std::size_t k = 0;
  for (std::uint32_t source = 0; source < classes_per_source.size(); ++source) {
    for (std::size_t c = 0; c < classes_per_source[source]; ++c, ++k) {
      const std::string label = "act" + std::to_string(k);
      const std::size_t n = 2 + (k * 7) % 5;
      for (std::size_t i = 0; i < n; ++i)
        records.push_back({label + "-" + std::to_string(i), label, Split::train, source, {}});
      records.push_back({label + "-t", label, Split::test, source, {}});
    }
  }
  return Manifest(std::move(records));
}

LabelSet labels_of_source(const Manifest& m, std::uint32_t source) {
  LabelSet out;
  for (const auto& r : m.records())
    if (r.source == source) out.insert(r.label);
  return out;
}

}  // namespace

TEST_CASE("novel class counts") {
  using V = std::vector<std::size_t>;
  CHECK(novel_class_counts(227, 5, NovelCountRule::ceiling) == V{46, 46, 46, 46, 43});
  CHECK(novel_class_counts(82, 5, NovelCountRule::ceiling) == V{17, 17, 17, 17, 14});
  CHECK(novel_class_counts(227, 5, NovelCountRule::floor) == V{45, 45, 45, 45, 47});
  CHECK(novel_class_counts(3, 5, NovelCountRule::ceiling) == V{1, 1, 1, 0, 0});
  CHECK(novel_class_counts(0, 2, NovelCountRule::ceiling) == V{0, 0});
  CHECK_THROWS_AS(novel_class_counts(4, 0, NovelCountRule::ceiling), UsageError);
}

TEST_CASE("schedule with 409 starting, 227 and 82 novel classes") {
  const Manifest m = schedule_manifest({409, 227, 82});
  const std::vector<StageSpec> stages = {{0, 1}, {1, 5}, {2, 5}};
  const auto plan = plan_increments(m, labels_of_source(m, 0), stages, 13);
  REQUIRE(plan.increments.size() == 11);
  const std::vector<std::size_t> novel = {0, 46, 46, 46, 46, 43, 17, 17, 17, 17, 14};
  const std::vector<std::size_t> known = {409, 409, 455, 501, 547, 593, 636, 653, 670, 687, 704};
  for (std::size_t t = 0; t < 11; ++t) {
    CHECK(plan.increments[t].novel_labels.size() == novel[t]);
    CHECK(plan.increments[t].known_labels.size() == known[t]);
  }
  CHECK(validate_plan(plan, m).empty());
}

TEST_CASE("stratified partition") {
  std::map<Label, std::vector<std::string>> ids;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 10 + c; ++i) ids["l" + std::to_string(c)].push_back("l" + std::to_string(c) + "_" + std::to_string(i));
  const auto parts = stratified_partition(ids, 4, 99);
  std::multiset<std::string> all;
  for (const auto& p : parts) all.insert(p.begin(), p.end());
  CHECK(all.size() == 33);
  CHECK(std::set<std::string>(all.begin(), all.end()).size() == 33);
  for (int c = 0; c < 3; ++c) {
    std::vector<std::size_t> per;
    for (const auto& p : parts)
      per.push_back(std::count_if(p.begin(), p.end(), [&](const auto& id) { return id[1] - '0' == c; }));
    CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
  }
  CHECK(stratified_partition(ids, 4, 99) == parts);
  CHECK(stratified_partition(ids, 4, 100) != parts);
  CHECK_THROWS_AS(stratified_partition(ids, 0, 1), UsageError);
}

TEST_CASE("novel classes are introduced most frequent first") {
  std::vector<SampleRecord> records;
  const std::vector<std::pair<std::string, int>> freq = {{"k", 3}, {"rare", 1}, {"mid", 3}, {"big", 5}, {"alsomid", 3}};
  for (const auto& [label, n] : freq)
    for (int i = 0; i < n; ++i)
      records.push_back({label + std::to_string(i), label, Split::train, label == "k" ? 0u : 1u, {}});
  const Manifest m(records);
  const std::vector<StageSpec> stages = {{0, 1}, {1, 4}};
  const auto plan = plan_increments(m, {"k"}, stages, 1);
  CHECK(plan.increments[1].novel_labels == LabelSet{"big"});
  CHECK(plan.increments[2].novel_labels == LabelSet{"alsomid"});
  CHECK(plan.increments[3].novel_labels == LabelSet{"mid"});
  CHECK(plan.increments[4].novel_labels == LabelSet{"rare"});
  CHECK(validate_plan(plan, m).empty());
}

TEST_CASE("novel samples are spread over the remaining increments") {
  const auto sc = testing::open_world_scenario(3);
  const auto& plan = sc.plan;
  CHECK(validate_plan(plan, sc.manifest).empty());
  // Every class introduced at t has train samples in each increment from t on.
  for (const auto& inc : plan.increments) {
    for (const auto& label : inc.novel_labels) {
      for (std::size_t u = inc.index; u < plan.increments.size(); ++u) {
        const auto& ids = plan.increments[u].train_ids;
        CHECK(std::any_of(ids.begin(), ids.end(), [&](const auto& id) { return sc.manifest.find(id)->label == label; }));
      }
      for (std::size_t u = 0; u < inc.index; ++u)
        for (const auto& id : plan.increments[u].train_ids) CHECK(sc.manifest.find(id)->label != label);
    }
  }
  // Each manifest record lands in exactly one increment.
  std::set<std::string> placed;
  for (const auto& inc : plan.increments)
    for (Split s : {Split::train, Split::validation, Split::test}) placed.insert(inc.ids(s).begin(), inc.ids(s).end());
  CHECK(placed.size() == sc.manifest.size());
}

TEST_CASE("plans are deterministic in the seed") {
  const Manifest m = schedule_manifest({5, 4});
  const std::vector<StageSpec> stages = {{0, 1}, {1, 2}};
  const auto start = labels_of_source(m, 0);
  const auto a = plan_increments(m, start, stages, 5);
  CHECK(a == plan_increments(m, start, stages, 5));
  CHECK(a.increments[1].train_ids != plan_increments(m, start, stages, 6).increments[1].train_ids);
  PlanOptions ordered;
  ordered.shuffle_train_order = false;
  const auto b = plan_increments(m, start, stages, 5, ordered);
  for (const auto& inc : b.increments) {
    std::vector<std::size_t> pos;
    for (const auto& id : inc.train_ids)
      pos.push_back(static_cast<std::size_t>(m.find(id) - m.records().data()));
    CHECK(std::is_sorted(pos.begin(), pos.end()));
  }
}

TEST_CASE("planner errors") {
  const Manifest m = schedule_manifest({3, 2});
  const std::vector<StageSpec> stages = {{0, 1}, {1, 2}};
  CHECK_THROWS_AS(plan_increments(m, {"nope"}, stages, 1), DataError);
  const std::vector<StageSpec> missing = {{0, 1}};
  CHECK_THROWS_AS(plan_increments(m, {}, missing, 1), DataError);
  const std::vector<StageSpec> empty_stage = {{0, 1}, {1, 1}, {7, 1}};
  CHECK_THROWS_AS(plan_increments(m, {}, empty_stage, 1), DataError);
  const std::vector<StageSpec> none;
  CHECK_THROWS_AS(plan_increments(m, {}, none, 1), UsageError);
}

TEST_CASE("unify_labels keeps the latest label and the earliest split") {
  const Manifest r0({{"a", "run", Split::test, 9, {{"k", "1"}}}, {"b", "walk", Split::train, 9, {}}});
  const Manifest r1({{"a", "jog", Split::train, 9, {{"k", "2"}, {"z", "x"}}}, {"c", "sit", Split::train, 9, {}}});
  const std::vector<Manifest> releases = {r0, r1};
  const Manifest u = unify_labels(releases);
  REQUIRE(u.size() == 3);
  const auto* a = u.find("a");
  CHECK(a->label == "jog");
  CHECK(a->split == Split::test);
  CHECK(a->source == 0);
  CHECK(a->metadata == Metadata{{"k", "2"}, {"z", "x"}});
  CHECK(u.find("c")->source == 1);
  CHECK(u.records()[2].id == "c");
}
