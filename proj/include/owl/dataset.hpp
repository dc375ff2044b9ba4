#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace owl {

using Label = std::string;
using LabelSet = std::set<Label>;
using Metadata = std::map<std::string, std::string>;

/// Catch-all prediction for anything outside the known label space.
inline constexpr std::string_view kUnknownLabel = "unknown";
/// Detection / recognition reductions fold known labels into this one.
inline constexpr std::string_view kKnownLabel = "known";

/// True for "unknown" and recognized-cluster labels "unknown_<k>".
bool is_unknown_namespace(std::string_view label);
/// Labels that input manifests may not use.
bool is_reserved_label(std::string_view label);
/// "unknown_<k>" for 1-based k.
Label recognized_label(std::size_t k);

enum class Split { train, validation, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct SampleRecord {
  std::string id;
  Label label;
  Split split = Split::train;
  std::uint32_t source = 0;
  Metadata metadata;

  bool operator==(const SampleRecord&) const = default;
};

/// Ordered sample records with unique ids.
class Manifest {
 public:
  Manifest() = default;
  explicit Manifest(std::vector<SampleRecord> records);

  const std::vector<SampleRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const SampleRecord* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  LabelSet labels() const;

  bool operator==(const Manifest& other) const { return records_ == other.records_; }

 private:
  std::vector<SampleRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct IncrementPlan {
  std::size_t index = 0;
  LabelSet known_labels;
  LabelSet novel_labels;
  std::vector<std::string> train_ids;
  std::vector<std::string> validation_ids;
  std::vector<std::string> test_ids;

  const std::vector<std::string>& ids(Split split) const;
  std::vector<std::string>& ids(Split split);

  bool operator==(const IncrementPlan&) const = default;
};

struct ExperimentPlan {
  std::vector<IncrementPlan> increments;
  std::uint64_t seed = 0;
  LabelSet label_universe;

  bool operator==(const ExperimentPlan&) const = default;
};

/// Returns one human-readable line per violated plan invariant; empty means valid.
std::vector<std::string> validate_plan(const ExperimentPlan& plan, const Manifest& manifest);

/// Dense d-dimensional feature vectors keyed by sample id, kept in insertion order.
class FeatureStore {
 public:
  explicit FeatureStore(std::size_t dim = 1);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  /// Throws DataError on dimension mismatch, non-finite entries or duplicate id.
  void insert(std::string id, std::span<const double> values);

  bool contains(std::string_view id) const;
  /// Throws DataError naming the id when absent.
  std::span<const double> at(std::string_view id) const;
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  bool operator==(const FeatureStore& other) const {
    return dim_ == other.dim_ && ids_ == other.ids_ && data_ == other.data_;
  }

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct PredictionRecord {
  std::string sample_id;
  std::map<Label, double> scores;
  bool novelty_flag = false;

  /// Highest-scoring label; ties go to the lexicographically smallest label.
  Label argmax() const;
  /// Label the evaluator scores. A flagged sample resolves to its best
  /// unknown-namespace label ("unknown" if none is scored); an unflagged one to
  /// its best label outside that namespace.
  Label decision() const;
  /// Largest score among labels outside the unknown namespace (the novelty score).
  double max_known_score() const;
};

}  // namespace owl
