#include <doctest.h>

#include <cmath>

#include "owl/error.hpp"
#include "owl/synth.hpp"

using namespace owl;

namespace {

double dist(std::span<const double> a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

FeatureStore sample_store() {
  BlobSpec spec;
  spec.classes = 3;
  spec.dim = 6;
  spec.per_class = {20};
  spec.seed = 1;
  return gen_blobs(spec).second;
}

}  // namespace

TEST_CASE("blob labels and counts") {
  CHECK(blob_label(7) == "class_007");
  BlobSpec spec;
  spec.classes = 3;
  spec.dim = 4;
  spec.per_class = {10, 20, 30};
  spec.split_fractions = {0.5, 0.3, 0.2};
  const auto [manifest, features] = gen_blobs(spec);
  CHECK(manifest.size() == 60);
  CHECK(features.size() == 60);
  std::map<std::pair<Label, Split>, int> counts;
  for (const auto& r : manifest.records()) {
    ++counts[{r.label, r.split}];
    CHECK(r.metadata.contains("radius"));
  }
  CHECK(counts[{"class_000", Split::train}] == 5);
  CHECK(counts[{"class_000", Split::validation}] == 3);
  CHECK(counts[{"class_000", Split::test}] == 2);
  CHECK(counts[{"class_002", Split::train}] == 15);
  CHECK(counts[{"class_002", Split::validation}] == 9);
  CHECK(counts[{"class_002", Split::test}] == 6);
}

TEST_CASE("one class stays near its center") {
  BlobSpec spec;
  spec.classes = 1;
  spec.dim = 5;
  spec.per_class = {10};
  const auto [manifest, features] = gen_blobs(spec);
  const auto center = blob_centers(spec).front();
  for (std::size_t i = 0; i < features.size(); ++i) CHECK(dist(features.row(i), center) < 6.0 * std::sqrt(5.0));
}

TEST_CASE("centers respect the separation and nearest-center is perfect") {
  BlobSpec spec;
  spec.classes = 3;
  spec.dim = 4;
  spec.separation = 10;
  spec.seed = 5;
  const auto centers = blob_centers(spec);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) CHECK(dist(centers[a], centers[b]) >= 10.0);
  const auto [manifest, features] = gen_blobs(spec);
  std::size_t right = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c)
      if (dist(features.row(i), centers[c]) < dist(features.row(i), centers[best])) best = c;
    right += blob_label(best) == manifest.find(features.ids()[i])->label;
  }
  CHECK(right == features.size());
}

TEST_CASE("generation is deterministic") {
  BlobSpec spec;
  spec.classes = 4;
  spec.seed = 99;
  const auto a = gen_blobs(spec), b = gen_blobs(spec);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  spec.seed = 100;
  CHECK_FALSE(gen_blobs(spec).second == a.second);
}

TEST_CASE("carried samples are spread over later sources") {
  BlobSpec spec;
  spec.classes = 2;
  spec.per_class = {100};
  spec.class_source = {0, 1};
  spec.last_source = 2;
  spec.carry_fraction = 0.5;
  const auto [manifest, features] = gen_blobs(spec);
  std::map<std::pair<Label, std::uint32_t>, int> by_source;
  for (const auto& r : manifest.records()) ++by_source[{r.label, r.source}];
  CHECK(by_source[{"class_000", 0}] == 50);
  CHECK(by_source[{"class_000", 1}] == 25);
  CHECK(by_source[{"class_000", 2}] == 25);
  CHECK(by_source[{"class_001", 0}] == 0);
  CHECK(by_source[{"class_001", 1}] == 50);
  CHECK(by_source[{"class_001", 2}] == 50);
}

TEST_CASE("invalid specs") {
  BlobSpec spec;
  spec.split_fractions = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(gen_blobs(spec), DataError);
  spec = {};
  spec.classes = 50;
  spec.dim = 2;
  spec.separation = 10;
  spec.extent = 20;
  CHECK_THROWS_WITH_AS(gen_blobs(spec), doctest::Contains("cannot place"), DataError);
  spec.classes = 4;
  CHECK_NOTHROW(gen_blobs(spec));
  spec = {};
  spec.per_class = {1, 2};
  CHECK_THROWS_AS(gen_blobs(spec), DataError);
}

TEST_CASE("perturbation kinds") {
  for (auto k : {PerturbationKind::identity, PerturbationKind::gaussian_noise, PerturbationKind::uniform_scale,
                 PerturbationKind::orthogonal_rotation, PerturbationKind::coordinate_flip_sign})
    CHECK(parse_perturbation(to_string(k)) == k);
  CHECK_THROWS_AS(parse_perturbation("blur"), UsageError);
}

TEST_CASE("perturbations preserve ids and dimension") {
  const auto fs = sample_store();
  CHECK(perturb(fs, {PerturbationKind::identity, 3.0, 1}) == fs);
  CHECK(perturb(fs, {PerturbationKind::gaussian_noise, 0.0, 1}) == fs);
  for (auto k : {PerturbationKind::gaussian_noise, PerturbationKind::uniform_scale,
                 PerturbationKind::orthogonal_rotation, PerturbationKind::coordinate_flip_sign}) {
    const auto out = perturb(fs, {k, 0.5, 3});
    CHECK(out.ids() == fs.ids());
    CHECK(out.dim() == fs.dim());
    CHECK_FALSE(out == fs);
    CHECK(perturb(fs, {k, 0.5, 3}) == out);
  }
  CHECK_THROWS_AS(perturb(fs, {PerturbationKind::uniform_scale, -1.0, 0}), DataError);
}

TEST_CASE("noise has the requested spread") {
  const auto fs = sample_store();
  const auto out = perturb(fs, {PerturbationKind::gaussian_noise, 2.0, 4});
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (std::size_t j = 0; j < fs.dim(); ++j, ++n) sq += std::pow(out.row(i)[j] - fs.row(i)[j], 2);
  CHECK(std::sqrt(sq / static_cast<double>(n)) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("scale, rotation and flips") {
  const auto fs = sample_store();
  const auto scaled = perturb(fs, {PerturbationKind::uniform_scale, 0.5, 0});
  CHECK(scaled.row(3)[2] == doctest::Approx(1.5 * fs.row(3)[2]));

  const auto rotated = perturb(fs, {PerturbationKind::orthogonal_rotation, 0.8, 2});
  for (std::size_t i = 0; i < fs.size(); ++i) CHECK(std::abs(norm(rotated.row(i)) - norm(fs.row(i))) < 1e-9);
  // Rotating by a then b is not rotating by a + b: the magnitude is not additive in general.
  const auto twice = perturb(perturb(fs, {PerturbationKind::orthogonal_rotation, 0.3, 2}),
                             {PerturbationKind::orthogonal_rotation, 0.5, 7});
  const auto once = perturb(fs, {PerturbationKind::orthogonal_rotation, 0.8, 2});
  CHECK_FALSE(twice == once);

  const auto flipped = perturb(fs, {PerturbationKind::coordinate_flip_sign, 0.5, 6});
  std::size_t negated = 0;
  for (std::size_t j = 0; j < fs.dim(); ++j) {
    const bool flip = flipped.row(0)[j] == -fs.row(0)[j];
    negated += flip;
    for (std::size_t i = 0; i < fs.size(); ++i)
      CHECK(flipped.row(i)[j] == (flip ? -fs.row(i)[j] : fs.row(i)[j]));
  }
  CHECK(negated == 3);
}
