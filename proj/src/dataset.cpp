#include "owl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "owl/error.hpp"

namespace owl {

bool is_unknown_namespace(std::string_view label) {
  if (label == kUnknownLabel) return true;
  constexpr std::string_view prefix = "unknown_";
  return label.size() > prefix.size() && label.substr(0, prefix.size()) == prefix;
}

bool is_reserved_label(std::string_view label) {
  return label == kKnownLabel || label == kUnknownLabel || label.starts_with("unknown_");
}

Label recognized_label(std::size_t k) { return "unknown_" + std::to_string(k); }

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "validation") return Split::validation;
  if (text == "test") return Split::test;
  throw DataError("unknown split '" + std::string(text) + "'");
}

Manifest::Manifest(std::vector<SampleRecord> records) : records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.id.empty()) throw DataError("record " + std::to_string(i) + ": empty id");
    if (r.label.empty()) throw DataError("record '" + r.id + "': empty label");
    if (is_reserved_label(r.label))
      throw DataError("record '" + r.id + "': label '" + r.label + "' is reserved");
    if (!index_.emplace(r.id, i).second) throw DataError("duplicate id '" + r.id + "'");
  }
}

const SampleRecord* Manifest::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

LabelSet Manifest::labels() const {
  LabelSet out;
  for (const auto& r : records_) out.insert(r.label);
  return out;
}

const std::vector<std::string>& IncrementPlan::ids(Split split) const {
  switch (split) {
    case Split::validation: return validation_ids;
    case Split::test: return test_ids;
    default: return train_ids;
  }
}

std::vector<std::string>& IncrementPlan::ids(Split split) {
  return const_cast<std::vector<std::string>&>(std::as_const(*this).ids(split));
}

std::vector<std::string> validate_plan(const ExperimentPlan& plan, const Manifest& manifest) {
  std::vector<std::string> out;
  std::map<Label, std::size_t> introduced_at;

  for (std::size_t t = 0; t < plan.increments.size(); ++t) {
    const auto& inc = plan.increments[t];
    const std::string where = "increment " + std::to_string(t);
    if (inc.index != t)
      out.push_back(where + ": index field is " + std::to_string(inc.index));
    for (const auto& label : inc.novel_labels) {
      if (inc.known_labels.contains(label))
        out.push_back(where + ": label '" + label + "' is both known and novel");
      auto [it, fresh] = introduced_at.emplace(label, t);
      if (!fresh)
        out.push_back("disjointness: label '" + label + "' is novel in increments " +
                      std::to_string(it->second) + " and " + std::to_string(t));
    }
    if (!plan.label_universe.empty()) {
      for (const auto* set : {&inc.known_labels, &inc.novel_labels})
        for (const auto& label : *set)
          if (!plan.label_universe.contains(label))
            out.push_back(where + ": label '" + label + "' is outside the label universe");
    }
    if (t + 1 < plan.increments.size()) {
      LabelSet expected = inc.known_labels;
      expected.insert(inc.novel_labels.begin(), inc.novel_labels.end());
      if (expected != plan.increments[t + 1].known_labels)
        out.push_back("increment " + std::to_string(t + 1) +
                      ": known labels differ from known ∪ novel of increment " +
                      std::to_string(t));
    }
  }

  std::map<std::string, std::size_t> seen_ids;
  for (std::size_t t = 0; t < plan.increments.size(); ++t) {
    const auto& inc = plan.increments[t];
    for (Split split : {Split::train, Split::validation, Split::test}) {
      for (const auto& id : inc.ids(split)) {
        const std::string where = "increment " + std::to_string(t) + ": id '" + id + "'";
        auto [it, fresh] = seen_ids.emplace(id, t);
        if (!fresh) out.push_back(where + " already placed in increment " + std::to_string(it->second));
        const SampleRecord* rec = manifest.find(id);
        if (rec == nullptr) {
          out.push_back(where + " is not in the manifest");
          continue;
        }
        if (rec->split != split)
          out.push_back(where + " listed under " + std::string(to_string(split)) +
                        " but its split is " + std::string(to_string(rec->split)));
        auto intro = introduced_at.find(rec->label);
        const bool known_here = inc.known_labels.contains(rec->label);
        if (intro != introduced_at.end() && intro->second > t)
          out.push_back(where + " has label '" + rec->label + "' introduced later at increment " +
                        std::to_string(intro->second));
        else if (intro == introduced_at.end() && !known_here)
          out.push_back(where + " has label '" + rec->label + "' that is never known or introduced");
      }
    }
  }
  return out;
}

FeatureStore::FeatureStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw DataError("feature dimension must be positive");
}

void FeatureStore::insert(std::string id, std::span<const double> values) {
  if (values.size() != dim_)
    throw DataError("feature vector for '" + id + "' has " + std::to_string(values.size()) +
                    " entries, expected " + std::to_string(dim_));
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("feature vector for '" + id + "' is not finite");
  if (index_.contains(id)) throw DataError("duplicate feature id '" + id + "'");
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), values.begin(), values.end());
}

bool FeatureStore::contains(std::string_view id) const {
  return index_.contains(std::string(id));
}

std::span<const double> FeatureStore::at(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw DataError("missing feature vector for id '" + std::string(id) + "'");
  return row(it->second);
}

namespace {

// Strict > keeps the first (lexicographically smallest) label on ties since
// std::map iterates in label order.
template <typename Pred>
const std::pair<const Label, double>* best_where(const std::map<Label, double>& scores, Pred keep) {
  const std::pair<const Label, double>* best = nullptr;
  for (const auto& entry : scores) {
    if (!keep(entry.first)) continue;
    if (best == nullptr || entry.second > best->second) best = &entry;
  }
  return best;
}

}  // namespace

Label PredictionRecord::argmax() const {
  const auto* best = best_where(scores, [](const Label&) { return true; });
  if (best == nullptr) throw DataError("prediction for '" + sample_id + "' has no scores");
  return best->first;
}

Label PredictionRecord::decision() const {
  if (novelty_flag) {
    const auto* best = best_where(scores, [](const Label& l) { return is_unknown_namespace(l); });
    return best == nullptr ? Label(kUnknownLabel) : best->first;
  }
  const auto* best = best_where(scores, [](const Label& l) { return !is_unknown_namespace(l); });
  return best == nullptr ? argmax() : best->first;
}

double PredictionRecord::max_known_score() const {
  const auto* best = best_where(scores, [](const Label& l) { return !is_unknown_namespace(l); });
  return best == nullptr ? -std::numeric_limits<double>::infinity() : best->second;
}

}  // namespace owl
