#include "owl/confusion.hpp"

#include "owl/error.hpp"

namespace owl {

void ConfusionMatrix::add(const Label& truth, const Label& predicted, std::int64_t count) {
  if (count < 0) throw DataError("confusion counts must be non-negative");
  rows_.insert(truth);
  cols_.insert(predicted);
  if (count == 0) return;
  cells_[{truth, predicted}] += count;
  total_ += count;
}

std::int64_t ConfusionMatrix::count(const Label& truth, const Label& predicted) const {
  auto it = cells_.find({truth, predicted});
  return it == cells_.end() ? 0 : it->second;
}

std::map<Label, std::int64_t> ConfusionMatrix::row_sums() const {
  std::map<Label, std::int64_t> out;
  for (const auto& label : rows_) out[label] = 0;
  for (const auto& [cell, n] : cells_) out[cell.first] += n;
  return out;
}

std::map<Label, std::int64_t> ConfusionMatrix::col_sums() const {
  std::map<Label, std::int64_t> out;
  for (const auto& label : cols_) out[label] = 0;
  for (const auto& [cell, n] : cells_) out[cell.second] += n;
  return out;
}

std::string_view to_string(Reduction mode) {
  switch (mode) {
    case Reduction::raw: return "raw";
    case Reduction::classification: return "classification";
    case Reduction::detection: return "detection";
    case Reduction::recognition: return "recognition";
  }
  return "raw";
}

Reduction parse_reduction(std::string_view text) {
  if (text == "raw") return Reduction::raw;
  if (text == "classification") return Reduction::classification;
  if (text == "detection") return Reduction::detection;
  if (text == "recognition") return Reduction::recognition;
  throw UsageError("unknown reduction '" + std::string(text) + "'");
}

ConfusionMatrix build_confusion(std::span<const LabeledPrediction> pairs) {
  if (pairs.empty()) throw DataError("build_confusion: no predictions");
  ConfusionMatrix cm;
  for (const auto& p : pairs) cm.add(p.truth, p.prediction.decision());
  return cm;
}

ConfusionMatrix build_confusion(std::span<const std::pair<Label, Label>> pairs) {
  if (pairs.empty()) throw DataError("build_confusion: no predictions");
  ConfusionMatrix cm;
  for (const auto& [truth, predicted] : pairs) cm.add(truth, predicted);
  return cm;
}

ConfusionMatrix topk_confusion(std::span<const RankedOutcome> outcomes, std::size_t k) {
  if (k < 1) throw UsageError("topk_confusion: k must be at least 1");
  if (outcomes.empty()) throw DataError("topk_confusion: no outcomes");
  ConfusionMatrix cm;
  for (const auto& o : outcomes) {
    if (o.ranking.empty()) throw DataError("topk_confusion: empty ranking for '" + o.truth + "'");
    const std::size_t depth = std::min(k, o.ranking.size());
    bool hit = false;
    for (std::size_t i = 0; i < depth && !hit; ++i) hit = o.ranking[i] == o.truth;
    cm.add(o.truth, hit ? o.truth : o.ranking.front());
  }
  return cm;
}

namespace {

Label fold(const Label& label, Reduction mode, const LabelSet& known) {
  const bool is_known = known.contains(label);
  switch (mode) {
    case Reduction::classification: return is_known ? label : Label(kUnknownLabel);
    case Reduction::detection: return Label(is_known ? kKnownLabel : kUnknownLabel);
    case Reduction::recognition: return is_known ? Label(kKnownLabel) : label;
    case Reduction::raw: break;
  }
  return label;
}

}  // namespace

ConfusionMatrix reduce_confusion(const ConfusionMatrix& cm, Reduction mode, const LabelSet& known) {
  if (mode == Reduction::raw) return cm;
  ConfusionMatrix out;
  for (const auto& label : cm.row_labels()) out.add_row_label(fold(label, mode, known));
  for (const auto& label : cm.col_labels()) out.add_col_label(fold(label, mode, known));
  for (const auto& [cell, n] : cm.cells())
    out.add(fold(cell.first, mode, known), fold(cell.second, mode, known), n);
  if (mode == Reduction::detection) {
    for (auto label : {kKnownLabel, kUnknownLabel}) {
      out.add_row_label(Label(label));
      out.add_col_label(Label(label));
    }
  }
  return out;
}

ConfusionMatrix aggregate(std::span<const ConfusionMatrix> matrices) {
  if (matrices.empty()) throw DataError("aggregate: no matrices");
  ConfusionMatrix out;
  for (const auto& m : matrices) {
    for (const auto& label : m.row_labels()) out.add_row_label(label);
    for (const auto& label : m.col_labels()) out.add_col_label(label);
    for (const auto& [cell, n] : m.cells()) out.add(cell.first, cell.second, n);
  }
  return out;
}

}  // namespace owl
