#include "owl/finch.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "owl/error.hpp"
#include "owl/parallel.hpp"

namespace owl {
namespace {

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Components of the first-neighbor graph, relabelled by first occurrence.
Partition link_first_neighbors(const std::vector<std::size_t>& nn) {
  const std::size_t n = nn.size();
  DisjointSet sets(n);
  // i-nn(i) covers both "j = nn(i)" and "i = nn(j)"; a shared neighbor joins
  // through that neighbor.
  for (std::size_t i = 0; i < n; ++i) sets.unite(i, nn[i]);
  Partition out(n);
  std::vector<std::size_t> id_of_root(n, std::numeric_limits<std::size_t>::max());
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& id = id_of_root[sets.find(i)];
    if (id == std::numeric_limits<std::size_t>::max()) id = next++;
    out[i] = id;
  }
  return out;
}

Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& points, const Partition& partition,
                              std::size_t clusters) {
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(clusters), points.cols());
  std::vector<double> sizes(clusters, 0.0);
  for (std::size_t i = 0; i < partition.size(); ++i) {
    means.row(static_cast<Eigen::Index>(partition[i])) += points.row(static_cast<Eigen::Index>(i));
    sizes[partition[i]] += 1.0;
  }
  for (std::size_t c = 0; c < clusters; ++c) means.row(static_cast<Eigen::Index>(c)) /= sizes[c];
  return means;
}

}  // namespace

std::size_t cluster_count(const Partition& partition) {
  if (partition.empty()) return 0;
  return *std::max_element(partition.begin(), partition.end()) + 1;
}

std::vector<std::size_t> first_neighbors(const Eigen::MatrixXd& points, DistanceMetric metric) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<std::size_t> nn(n, 0);
  if (n <= 1) return nn;

  Eigen::MatrixXd rows = points;
  if (metric == DistanceMetric::cosine) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const double norm = rows.row(i).norm();
      if (norm > 0.0) rows.row(i) /= norm;
    }
  }

  parallel_for(n, [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto jj = static_cast<Eigen::Index>(j);
      double dist;
      if (metric == DistanceMetric::cosine)
        dist = 1.0 - rows.row(ii).dot(rows.row(jj));
      else
        dist = (rows.row(ii) - rows.row(jj)).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = j;
      }
    }
    nn[i] = arg;
  });
  return nn;
}

std::vector<Partition> finch_cluster(const Eigen::MatrixXd& points, DistanceMetric metric) {
  if (points.rows() == 0) throw DataError("finch_cluster: no points");
  if (!points.allFinite()) throw DataError("finch_cluster: non-finite input");
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<Partition> levels;
  if (n == 1) {
    levels.push_back(Partition{0});
    return levels;
  }

  Partition current = link_first_neighbors(first_neighbors(points, metric));
  levels.push_back(current);
  std::size_t clusters = cluster_count(current);
  while (clusters > 1) {
    const Eigen::MatrixXd means = cluster_means(points, current, clusters);
    const Partition merged = link_first_neighbors(first_neighbors(means, metric));
    Partition next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = merged[current[i]];
    // Renumber by first occurrence over the original points.
    std::vector<std::size_t> remap(cluster_count(merged), std::numeric_limits<std::size_t>::max());
    std::size_t id = 0;
    for (auto& c : next) {
      if (remap[c] == std::numeric_limits<std::size_t>::max()) remap[c] = id++;
      c = remap[c];
    }
    current = std::move(next);
    clusters = id;
    levels.push_back(current);
  }
  return levels;
}

}  // namespace owl
