#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace owl {

enum class DistanceMetric { euclidean, cosine };

/// Cluster id per point; ids are dense, numbered by first occurrence.
using Partition = std::vector<std::size_t>;

std::size_t cluster_count(const Partition& partition);

/// Index of each row's nearest other row (ties to the lower index). A single
/// row is its own neighbor.
std::vector<std::size_t> first_neighbors(const Eigen::MatrixXd& points, DistanceMetric metric);

/// FINCH hierarchy over the rows of `points`, finest partition first. Each level
/// links i and j when one is the other's first neighbor or both share a first
/// neighbor, takes connected components, then recurses on the cluster means
/// until a single cluster remains.
std::vector<Partition> finch_cluster(const Eigen::MatrixXd& points,
                                     DistanceMetric metric = DistanceMetric::euclidean);

}  // namespace owl
