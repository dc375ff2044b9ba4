#include "owl/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "owl/error.hpp"

namespace owl {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

void refresh_cache(GaussianComponent& c) {
  const auto d = static_cast<double>(c.mean.size());
  if (c.kind == CovarianceKind::diagonal) {
    c.factor = c.covariance.array().sqrt().matrix();
    c.log_norm_const = -0.5 * (d * kLog2Pi + c.covariance.array().log().sum());
    return;
  }
  // Escalate the ridge if rounding left the matrix indefinite.
  Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
  double bump = 1e-12 * std::max(1.0, c.covariance.diagonal().cwiseAbs().maxCoeff());
  while (llt.info() != Eigen::Success) {
    c.covariance.diagonal().array() += bump;
    llt.compute(c.covariance);
    bump *= 10.0;
    if (!std::isfinite(bump)) throw DataError("covariance is not positive definite");
  }
  c.factor = llt.matrixL();
  c.log_norm_const = -0.5 * (d * kLog2Pi) - c.factor.diagonal().array().log().sum();
}

double GaussianComponent::log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd diff = x - mean;
  double maha;
  if (kind == CovarianceKind::diagonal) {
    maha = (diff.array() / factor.col(0).array()).square().sum();
  } else {
    maha = factor.triangularView<Eigen::Lower>().solve(diff).squaredNorm();
  }
  return log_norm_const - 0.5 * maha;
}

GaussianComponent fit_gaussian(const Eigen::MatrixXd& points, const Regularization& reg,
                               CovarianceKind kind) {
  if (points.rows() == 0) throw DataError("fit_gaussian: no points");
  if (!points.allFinite()) throw DataError("fit_gaussian: non-finite input");
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();

  GaussianComponent c;
  c.kind = kind;
  c.mean = points.colwise().mean().transpose();

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  if (n > 1) {
    const Eigen::MatrixXd centered = points.rowwise() - c.mean.transpose();
    cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  }
  const double ridge =
      reg.relative ? reg.scale * std::max(1.0, cov.trace() / static_cast<double>(d)) : reg.scale;
  if (!(ridge > 0.0)) throw DataError("fit_gaussian: regularization must be positive");
  cov.diagonal().array() += ridge;

  if (kind == CovarianceKind::diagonal)
    c.covariance = cov.diagonal();
  else
    c.covariance = std::move(cov);
  refresh_cache(c);
  return c;
}

double gmm_log_prob(const ClassModel& model, std::span<const double> x) {
  if (model.components.empty()) throw DataError("class model '" + model.label + "' has no components");
  const std::size_t d = model.components.front().dim();
  if (x.size() != d)
    throw DataError("gmm_log_prob: input has " + std::to_string(x.size()) +
                    " dimensions, model '" + model.label + "' has " + std::to_string(d));
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(d));

  thread_local std::vector<double> terms;
  terms.clear();
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& c : model.components) {
    const double t = std::log(c.weight) + c.log_density(v);
    terms.push_back(t);
    peak = std::max(peak, t);
  }
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

}  // namespace owl
