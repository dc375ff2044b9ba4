#include "owl/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "owl/error.hpp"

namespace owl {

NoveltyThreshold calibrate_threshold(std::span<const double> max_scores, double accepted_error) {
  if (max_scores.empty()) throw DataError("calibrate_threshold: no calibration scores");
  if (!(accepted_error > 0.0 && accepted_error < 1.0))
    throw DataError("calibrate_threshold: accepted error must lie in (0, 1)");
  std::vector<double> sorted(max_scores.begin(), max_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // Tolerance keeps products like 0.1 * 100 on rank 10 rather than 11.
  auto rank = static_cast<std::size_t>(std::ceil(accepted_error * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return {sorted[rank - 1], sorted.size()};
}

}  // namespace owl
