#include "owl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <numeric>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "owl/error.hpp"
#include "owl/rng.hpp"

namespace owl {
namespace {

template <typename T>
T per_class_value(const std::vector<T>& values, std::size_t c) {
  return values.size() == 1 ? values.front() : values[c];
}

void check_spec(const BlobSpec& spec) {
  if (spec.classes == 0) throw DataError("blob spec: classes must be positive");
  if (spec.dim == 0) throw DataError("blob spec: dim must be positive");
  if (spec.per_class.size() != 1 && spec.per_class.size() != spec.classes)
    throw DataError("blob spec: per_class needs 1 or " + std::to_string(spec.classes) + " entries");
  for (auto n : spec.per_class)
    if (n == 0) throw DataError("blob spec: per_class entries must be positive");
  if (!(spec.separation > 0.0)) throw DataError("blob spec: separation must be positive");
  double sum = 0.0;
  for (double f : spec.split_fractions) {
    if (f < 0.0) throw DataError("blob spec: split fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DataError("blob spec: split fractions must sum to 1");
  if (spec.class_source.size() != 1 && spec.class_source.size() != spec.classes)
    throw DataError("blob spec: class_source needs 1 or " + std::to_string(spec.classes) + " entries");
  for (auto s : spec.class_source)
    if (s > spec.last_source) throw DataError("blob spec: class source beyond last_source");
  if (!(spec.extent >= 0.0)) throw DataError("blob spec: extent must be non-negative");
  if (!(spec.carry_fraction >= 0.0 && spec.carry_fraction < 1.0))
    throw DataError("blob spec: carry_fraction must lie in [0, 1)");
}

std::string sample_id(const Label& label, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return label + "-" + buf;
}

}  // namespace

Label blob_label(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "class_%03zu", k);
  return buf;
}

std::vector<std::vector<double>> blob_centers(const BlobSpec& spec) {
  check_spec(spec);
  const double per_axis = std::ceil(std::pow(static_cast<double>(spec.classes), 1.0 / static_cast<double>(spec.dim)));
  const double side = spec.extent > 0.0 ? spec.extent : 2.0 * spec.separation * std::max(1.0, per_axis);
  const double min_sq = spec.separation * spec.separation;
  // Balls of radius separation/2 around the centers must fit in the grown cube.
  const double d = static_cast<double>(spec.dim);
  const double log_ball = 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0) +
                          d * std::log(0.5 * spec.separation);
  if (spec.classes > 1 && std::log(static_cast<double>(spec.classes)) + log_ball > d * std::log(side + spec.separation))
    throw DataError("cannot place " + std::to_string(spec.classes) + " centers " + std::to_string(spec.separation) +
                    " apart in a cube of side " + std::to_string(side) + " in " + std::to_string(spec.dim) +
                    " dimensions");

  Rng rng(derive_seed(spec.seed, "centers"));
  std::vector<std::vector<double>> centers;
  const std::size_t budget = 10000 * spec.classes;
  for (std::size_t attempt = 0; centers.size() < spec.classes; ++attempt) {
    if (attempt >= budget)
      throw DataError("cannot place " + std::to_string(spec.classes) + " centers " +
                      std::to_string(spec.separation) + " apart in " + std::to_string(spec.dim) +
                      " dimensions");
    std::vector<double> c(spec.dim);
    for (auto& v : c) v = (rng.uniform() - 0.5) * side;
    const bool clear = std::all_of(centers.begin(), centers.end(), [&](const auto& other) {
      double sq = 0.0;
      for (std::size_t j = 0; j < spec.dim; ++j) sq += (c[j] - other[j]) * (c[j] - other[j]);
      return sq >= min_sq;
    });
    if (clear) centers.push_back(std::move(c));
  }
  return centers;
}

std::pair<Manifest, FeatureStore> gen_blobs(const BlobSpec& spec) {
  const auto centers = blob_centers(spec);
  std::vector<SampleRecord> records;
  FeatureStore store(spec.dim);
  std::vector<double> x(spec.dim);

  for (std::size_t c = 0; c < spec.classes; ++c) {
    const Label label = blob_label(c);
    const std::size_t n = per_class_value(spec.per_class, c);
    const std::uint32_t first_source = per_class_value(spec.class_source, c);
    const std::uint32_t later = spec.last_source - first_source;

    std::size_t n_train = static_cast<std::size_t>(std::llround(spec.split_fractions[0] * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::llround(spec.split_fractions[1] * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);
    const std::size_t bounds[3] = {n_train, n_train + n_val, n};

    Rng rng(derive_seed(spec.seed, label));
    std::size_t begin = 0;
    for (int s = 0; s < 3; ++s) {
      const std::size_t m = bounds[s] - begin;
      const std::size_t carried =
          later == 0 ? 0 : static_cast<std::size_t>(std::llround(spec.carry_fraction * static_cast<double>(m)));
      for (std::size_t i = begin; i < bounds[s]; ++i) {
        SampleRecord rec;
        rec.id = sample_id(label, i);
        rec.label = label;
        rec.split = static_cast<Split>(s);
        const std::size_t local = i - begin;
        rec.source = first_source;
        if (local >= m - carried)
          rec.source = first_source + 1 + static_cast<std::uint32_t>((local - (m - carried)) % later);
        double radius = 0.0;
        for (std::size_t j = 0; j < spec.dim; ++j) {
          const double z = rng.normal();
          radius += z * z;
          x[j] = centers[c][j] + z;
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", std::sqrt(radius));
        rec.metadata["radius"] = buf;
        store.insert(rec.id, x);
        records.push_back(std::move(rec));
      }
      begin = bounds[s];
    }
  }
  return {Manifest(std::move(records)), std::move(store)};
}

std::string_view to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::identity: return "identity";
    case PerturbationKind::gaussian_noise: return "gaussian_noise";
    case PerturbationKind::uniform_scale: return "uniform_scale";
    case PerturbationKind::orthogonal_rotation: return "orthogonal_rotation";
    case PerturbationKind::coordinate_flip_sign: return "coordinate_flip_sign";
  }
  return "identity";
}

PerturbationKind parse_perturbation(std::string_view text) {
  for (auto kind : {PerturbationKind::identity, PerturbationKind::gaussian_noise, PerturbationKind::uniform_scale,
                    PerturbationKind::orthogonal_rotation, PerturbationKind::coordinate_flip_sign})
    if (text == to_string(kind)) return kind;
  throw UsageError("unknown perturbation kind '" + std::string(text) + "'");
}

FeatureStore perturb(const FeatureStore& features, const Perturbation& p) {
  if (!(p.magnitude >= 0.0)) throw DataError("perturbation magnitude must be non-negative");
  if (p.kind == PerturbationKind::identity || p.magnitude == 0.0) return features;

  const std::size_t d = features.dim();
  FeatureStore out(d);
  std::vector<double> x(d);

  switch (p.kind) {
    case PerturbationKind::gaussian_noise:
      for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& id = features.ids()[i];
        Rng rng(derive_seed(p.seed, id));
        const auto row = features.row(i);
        for (std::size_t j = 0; j < d; ++j) x[j] = row[j] + p.magnitude * rng.normal();
        out.insert(id, x);
      }
      break;
    case PerturbationKind::uniform_scale:
      for (std::size_t i = 0; i < features.size(); ++i) {
        const auto row = features.row(i);
        for (std::size_t j = 0; j < d; ++j) x[j] = row[j] * (1.0 + p.magnitude);
        out.insert(features.ids()[i], x);
      }
      break;
    case PerturbationKind::orthogonal_rotation: {
      Rng rng(derive_seed(p.seed, "rotation"));
      const auto n = static_cast<Eigen::Index>(d);
      Eigen::MatrixXd g(n, n);
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) g(r, c) = rng.normal();
      const Eigen::MatrixXd skew = 0.5 * (g - g.transpose());
      const Eigen::MatrixXd rotation = (p.magnitude * skew).exp();
      for (std::size_t i = 0; i < features.size(); ++i) {
        const auto row = features.row(i);
        const Eigen::Map<const Eigen::VectorXd> v(row.data(), n);
        Eigen::Map<Eigen::VectorXd>(x.data(), n) = rotation * v;
        out.insert(features.ids()[i], x);
      }
      break;
    }
    case PerturbationKind::coordinate_flip_sign: {
      const auto flips = static_cast<std::size_t>(std::llround(std::min(p.magnitude, 1.0) * static_cast<double>(d)));
      std::vector<std::size_t> axes(d);
      std::iota(axes.begin(), axes.end(), 0);
      Rng rng(derive_seed(p.seed, "flip"));
      shuffle(std::span<std::size_t>(axes), rng);
      std::vector<double> sign(d, 1.0);
      for (std::size_t k = 0; k < flips; ++k) sign[axes[k]] = -1.0;
      for (std::size_t i = 0; i < features.size(); ++i) {
        const auto row = features.row(i);
        for (std::size_t j = 0; j < d; ++j) x[j] = row[j] * sign[j];
        out.insert(features.ids()[i], x);
      }
      break;
    }
    case PerturbationKind::identity:
      break;
  }
  return out;
}

}  // namespace owl
