#include <doctest.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "owl/io.hpp"
#include "owl/measures.hpp"
#include "support.hpp"

using namespace owl;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result owl_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = cli::execute(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, '\t');) out.push_back(f);
  return out;
}

/// Synthetic data, plan and a finished run inside one scratch directory.
struct Workspace {
  std::filesystem::path dir;
  std::string p(const std::string& name) const { return (dir / name).string(); }
};

Workspace build_workspace() {
  Workspace w{testing::scratch_dir("cli")};
  REQUIRE(owl_cli({"synth", "--classes", "6", "--dim", "4", "--per-class", "40", "--separation", "8",
                   "--sources", "4:0,2:1", "--seed", "3", "--manifest", w.p("m.csv"), "--features",
                   w.p("f.owlf"), "--known-out", w.p("known.txt")})
              .code == 0);
  REQUIRE(owl_cli({"plan", "--manifest", w.p("m.csv"), "--start-known", w.p("known.txt"), "--stages",
                   "0:1,1:2", "--seed", "4", "--out", w.p("plan.json")})
              .code == 0);
  const json config = {{"seed", 9},
                       {"plan_path", "plan.json"},
                       {"manifest_path", "m.csv"},
                       {"features_path", "f.owlf"},
                       {"output_path", "log.jsonl"},
                       {"outcomes_path", "outcomes.jsonl"},
                       {"checkpoint_dir", "ckpt"},
                       {"predictor", {{"kind", "gmm_finch"}, {"covariance", "diagonal"}}},
                       {"experiment", {{"cumulative", true}}}};
  std::ofstream(w.dir / "run.json") << config.dump(2);
  const auto run = owl_cli({"run", "--config", w.p("run.json")});
  INFO(run.err);
  REQUIRE(run.code == 0);
  return w;
}

}  // namespace

TEST_CASE("cli exit codes") {
  CHECK(owl_cli({"frobnicate"}).code == 1);
  CHECK(owl_cli({"metrics"}).code == 1);
  CHECK(owl_cli({"metrics", "--log", "/nonexistent/log.jsonl"}).code == 2);
  CHECK(owl_cli({"--help"}).code == 0);

  const auto dir = testing::scratch_dir("cli-config");
  std::ofstream(dir / "bad.json") << R"({"plan_path":"p","manifest_path":"m","features_path":"f",)"
                                     R"("output_path":"o","predictor":{"accepted_error":2}})";
  const auto bad = owl_cli({"run", "--config", (dir / "bad.json").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("predictor.accepted_error") != std::string::npos);
  std::ofstream(dir / "notjson.json") << "{";
  CHECK(owl_cli({"run", "--config", (dir / "notjson.json").string()}).code == 1);
}

TEST_CASE("cli pipeline") {
  const auto w = build_workspace();

  SUBCASE("validate") {
    const auto ok = owl_cli({"validate", "--plan", w.p("plan.json"), "--manifest", w.p("m.csv"), "--features",
                             w.p("f.owlf")});
    CHECK(ok.code == 0);
    CHECK(ok.out == "ok: 3 increments\n");
    auto plan = load_plan(w.p("plan.json"));
    plan.increments[1].test_ids.push_back(plan.increments[0].train_ids.front());
    save_plan(w.dir / "leaky.json", plan);
    const auto leaky = owl_cli({"validate", "--plan", w.p("leaky.json"), "--manifest", w.p("m.csv")});
    CHECK(leaky.code == 2);
    CHECK_FALSE(leaky.err.empty());
  }

  SUBCASE("plan to stdout matches the file") {
    const auto out = owl_cli({"plan", "--manifest", w.p("m.csv"), "--start-known", w.p("known.txt"), "--stages",
                              "0:1,1:2", "--seed", "4"});
    CHECK(out.code == 0);
    CHECK(plan_from_json(json::parse(out.out)) == load_plan(w.p("plan.json")));
    CHECK(owl_cli({"plan", "--manifest", w.p("m.csv"), "--stages", "0"}).code == 1);
  }

  SUBCASE("metrics recompute from logged matrices") {
    const auto log = load_log(w.p("log.jsonl"));
    REQUIRE(log.size() == 10);
    for (const auto& [reduction, measure] :
         std::vector<std::pair<std::string, std::string>>{{"raw", "mcc"}, {"detection", "accuracy"},
                                                           {"recognition", "nmi"}}) {
      const auto res = owl_cli({"metrics", "--log", w.p("log.jsonl"), "--reduction", reduction, "--measure", measure});
      REQUIRE(res.code == 0);
      const auto rows = lines(res.out);
      REQUIRE(rows.size() == log.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto f = fields(rows[i]);
        REQUIRE(f.size() == 3);
        CHECK(std::stod(f[0]) == log[i].step);
        CHECK(f[1] == to_string(log[i].split));
        const auto& m = log[i].report.matrices.at(parse_reduction(reduction));
        CHECK(std::stod(f[2]) == doctest::Approx(compute(parse_measure(measure), m)).epsilon(1e-12));
      }
    }
    const auto test_only = owl_cli({"metrics", "--log", w.p("log.jsonl"), "--split", "test", "--cumulative"});
    CHECK(test_only.code == 0);
    CHECK(lines(test_only.out).size() == 5);
    CHECK(owl_cli({"metrics", "--log", w.p("log.jsonl"), "--split", "holdout"}).code == 1);
    CHECK(owl_cli({"metrics", "--log", w.p("log.jsonl"), "--measure", "f1"}).code == 1);
  }

  SUBCASE("ablate groups by metadata") {
    const auto res = owl_cli({"ablate", "--outcomes", w.p("outcomes.jsonl"), "--log", w.p("log.jsonl"),
                              "--manifest", w.p("m.csv"), "--key", "radius", "--bins", "--split", "test"});
    INFO(res.err);
    REQUIRE(res.code == 0);
    const auto j = json::parse(res.out);
    CHECK(j.size() == 3);
    std::size_t total = 0;
    for (const auto& [group, v] : j.items()) {
      total += v["samples"].get<std::size_t>();
      CHECK(v["measures"].contains("mcc"));
    }
    std::size_t expected = 0;
    for (const auto& o : load_outcomes(w.p("outcomes.jsonl"))) expected += o.split == Split::test;
    CHECK(total == expected);
  }

  SUBCASE("perturb and replay") {
    CHECK(owl_cli({"perturb", "--features", w.p("f.owlf"), "--kind", "gaussian_noise", "--magnitude", "1",
                   "--seed", "2", "--out", w.p("noisy.owlf")})
              .code == 0);
    const auto clean = load_features(w.p("f.owlf"));
    const auto noisy = load_features(w.p("noisy.owlf"));
    CHECK(noisy.ids() == clean.ids());
    CHECK_FALSE(noisy == clean);
    CHECK(owl_cli({"perturb", "--features", w.p("f.owlf"), "--kind", "melt", "--out", w.p("x.owlf")}).code == 1);

    const auto res = owl_cli({"replay", "--checkpoint", w.p("ckpt/increment_1.owlc"), "--plan", w.p("plan.json"),
                              "--manifest", w.p("m.csv"), "--features", w.p("f.owlf"), "--increment", "2", "--kind",
                              "identity", "--kind", "gaussian_noise", "--magnitude", "4", "--out",
                              w.p("replay.jsonl")});
    INFO(res.err);
    REQUIRE(res.code == 0);
    const auto rows = lines(res.out);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "kind\tmagnitude\tstep\tsplit\taccuracy\tmcc\tnmi");
    CHECK(fields(rows[1])[0] == "identity");
    CHECK(fields(rows[3])[0] == "gaussian_noise");
    std::ifstream in(w.p("replay.jsonl"));
    const auto records = read_json_lines(in);
    REQUIRE(records.size() == 4);
    CHECK(records[0]["perturbation"]["kind"] == "identity");

    // Identity replay reproduces the logged pre-feedback records of increment 2.
    for (const auto& rec : load_log(w.p("log.jsonl")))
      if (rec.step == 2.0) {
        bool found = false;
        for (const auto& r : records)
          if (r["perturbation"]["kind"] == "identity" && r["split"] == std::string(to_string(rec.split))) {
            CHECK(r["report"] == step_to_json(rec)["report"]);
            found = true;
          }
        CHECK(found);
      }

    CHECK(owl_cli({"replay", "--checkpoint", w.p("ckpt/increment_1.owlc"), "--plan", w.p("plan.json"), "--manifest",
                   w.p("m.csv"), "--features", w.p("f.owlf"), "--increment", "7"})
              .code == 1);
    CHECK(owl_cli({"replay", "--checkpoint", w.p("plan.json"), "--plan", w.p("plan.json"), "--manifest",
                   w.p("m.csv"), "--features", w.p("f.owlf")})
              .code == 2);
  }
}
