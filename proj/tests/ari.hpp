#pragma once

#include <map>
#include <utility>
#include <vector>

namespace owl::testing {

/// Adjusted Rand index from the contingency table of two labelings.
template <typename A, typename B>
double adjusted_rand_index(const std::vector<A>& x, const std::vector<B>& y) {
  std::map<std::pair<A, B>, double> joint;
  std::map<A, double> rows;
  std::map<B, double> cols;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++joint[{x[i], y[i]}];
    ++rows[x[i]];
    ++cols[y[i]];
  }
  auto c2 = [](double n) { return n * (n - 1) / 2; };
  double sum_joint = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [k, n] : joint) sum_joint += c2(n);
  for (const auto& [k, n] : rows) sum_rows += c2(n);
  for (const auto& [k, n] : cols) sum_cols += c2(n);
  const double expected = sum_rows * sum_cols / c2(static_cast<double>(x.size()));
  const double max_index = (sum_rows + sum_cols) / 2;
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

}  // namespace owl::testing
