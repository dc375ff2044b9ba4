#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "owl/dataset.hpp"

namespace owl {

/// Gaussian blobs with unit covariance, one per class, standing in for
/// extracted feature vectors.
struct BlobSpec {
  std::size_t classes = 3;
  std::size_t dim = 2;
  /// Samples per class; a single entry applies to every class.
  std::vector<std::size_t> per_class = {100};
  /// Minimum distance between class centers, in units of the intra-class std.
  double separation = 10.0;
  std::array<double, 3> split_fractions = {0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
  /// Release index per class (a single entry applies to every class).
  std::vector<std::uint32_t> class_source = {0};
  /// Fraction of each class's samples re-released in every later source, so
  /// known classes keep receiving samples after their first release.
  double carry_fraction = 0.0;
  /// Last release index; samples are carried up to and including it.
  std::uint32_t last_source = 0;
  /// Side of the cube holding the class centers; 0 picks one that always fits.
  double extent = 0.0;
};

/// "class_000", "class_001", ...
Label blob_label(std::size_t k);

/// Throws DataError on an invalid spec or when the centers cannot be placed.
std::pair<Manifest, FeatureStore> gen_blobs(const BlobSpec& spec);

/// Class centers only, in class order.
std::vector<std::vector<double>> blob_centers(const BlobSpec& spec);

enum class PerturbationKind { identity, gaussian_noise, uniform_scale, orthogonal_rotation, coordinate_flip_sign };

std::string_view to_string(PerturbationKind kind);
PerturbationKind parse_perturbation(std::string_view text);

/// Feature-space stand-ins for nuisance transforms of the raw input.
struct Perturbation {
  PerturbationKind kind = PerturbationKind::identity;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
};

/// identity: unchanged. gaussian_noise: adds N(0, magnitude^2) per coordinate,
/// drawn per id. uniform_scale: multiplies by (1 + magnitude).
/// orthogonal_rotation: applies exp(magnitude * A) for one seeded skew-symmetric A.
/// coordinate_flip_sign: negates round(min(magnitude, 1) * d) seeded coordinates.
FeatureStore perturb(const FeatureStore& features, const Perturbation& p);

}  // namespace owl
