#pragma once

#include <cstddef>
#include <span>

namespace owl {

struct NoveltyThreshold {
  double value = 0.0;
  std::size_t calibration_size = 0;

  /// Strictly below the threshold is novel.
  bool is_novel(double max_score) const { return max_score < value; }
};

/// Nearest-rank lower-tail quantile of the per-sample maximum known-class
/// scores: the ceil(accepted_error * n)-th smallest score (at least the first).
/// Throws DataError on empty input or accepted_error outside (0, 1).
NoveltyThreshold calibrate_threshold(std::span<const double> max_scores, double accepted_error);

}  // namespace owl
