#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "owl/dataset.hpp"

namespace owl {

/// Sparse count matrix with truth rows and predicted columns. Row and column
/// label sets are kept sorted; zero-count labels may be present for padding.
class ConfusionMatrix {
 public:
  using Cell = std::pair<Label, Label>;

  void add(const Label& truth, const Label& predicted, std::int64_t count = 1);
  void add_row_label(const Label& label) { rows_.insert(label); }
  void add_col_label(const Label& label) { cols_.insert(label); }

  const LabelSet& row_labels() const { return rows_; }
  const LabelSet& col_labels() const { return cols_; }
  const std::map<Cell, std::int64_t>& cells() const { return cells_; }

  std::int64_t count(const Label& truth, const Label& predicted) const;
  std::int64_t total() const { return total_; }

  std::map<Label, std::int64_t> row_sums() const;
  std::map<Label, std::int64_t> col_sums() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  LabelSet rows_;
  LabelSet cols_;
  std::map<Cell, std::int64_t> cells_;
  std::int64_t total_ = 0;
};

enum class Reduction { raw, classification, detection, recognition };

std::string_view to_string(Reduction mode);
Reduction parse_reduction(std::string_view text);

struct LabeledPrediction {
  Label truth;
  PredictionRecord prediction;
};

/// One count per pair at (truth, prediction.decision()). Throws on empty input.
ConfusionMatrix build_confusion(std::span<const LabeledPrediction> pairs);
/// Same, from already-resolved (truth, predicted) label pairs.
ConfusionMatrix build_confusion(std::span<const std::pair<Label, Label>> pairs);

struct RankedOutcome {
  Label truth;
  std::vector<Label> ranking;
};

/// Hit within the first k ranks counts on the diagonal, a miss at (truth, rank-1).
ConfusionMatrix topk_confusion(std::span<const RankedOutcome> outcomes, std::size_t k);

/// Label folding for the three open-world subtasks. `raw` returns the input.
ConfusionMatrix reduce_confusion(const ConfusionMatrix& cm, Reduction mode, const LabelSet& known);

/// Cell-wise sum over the label union. Throws on empty input.
ConfusionMatrix aggregate(std::span<const ConfusionMatrix> matrices);

}  // namespace owl
