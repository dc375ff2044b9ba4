#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "owl/dataset.hpp"

namespace owl {

enum class CovarianceKind { full, diagonal };

/// Ridge added to a fitted covariance: scale * max(1, trace / d) when
/// relative, otherwise scale itself.
struct Regularization {
  double scale = 1e-6;
  bool relative = true;
};

struct GaussianComponent {
  Eigen::VectorXd mean;
  /// Full covariance, or a d x 1 column of variances for the diagonal kind.
  Eigen::MatrixXd covariance;
  CovarianceKind kind = CovarianceKind::full;
  double weight = 1.0;
  /// -0.5 * (d log 2pi + log det covariance)
  double log_norm_const = 0.0;
  /// Lower Cholesky factor (full kind) or standard deviations (diagonal kind).
  Eigen::MatrixXd factor;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Sample mean and unbiased covariance of the rows of `points` plus the ridge.
/// A single point gets ridge * I. Throws DataError on empty or non-finite input.
GaussianComponent fit_gaussian(const Eigen::MatrixXd& points, const Regularization& reg = {},
                               CovarianceKind kind = CovarianceKind::full);

/// Rebuilds the cached factor and normalizer from mean/covariance/kind.
void refresh_cache(GaussianComponent& component);

struct ClassModel {
  Label label;
  std::vector<GaussianComponent> components;
};

/// log sum_k w_k N(x; mu_k, Sigma_k), evaluated with log-sum-exp.
double gmm_log_prob(const ClassModel& model, std::span<const double> x);

}  // namespace owl
