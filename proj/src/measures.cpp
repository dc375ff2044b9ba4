#include "owl/measures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "owl/error.hpp"

namespace owl {
namespace {

void require_total(const ConfusionMatrix& cm, const char* what) {
  if (cm.total() <= 0) throw DataError(std::string(what) + ": confusion matrix is empty");
}

// sum x log x with 0 log 0 = 0
double entropy(const std::map<Label, std::int64_t>& counts, double total) {
  double h = 0.0;
  for (const auto& [label, n] : counts) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / total;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

double accuracy(const ConfusionMatrix& cm) {
  require_total(cm, "accuracy");
  std::int64_t hit = 0;
  for (const auto& [cell, n] : cm.cells())
    if (cell.first == cell.second) hit += n;
  return static_cast<double>(hit) / static_cast<double>(cm.total());
}

double mcc(const ConfusionMatrix& cm) {
  require_total(cm, "mcc");
  const auto truth = cm.row_sums();
  const auto pred = cm.col_sums();
  const double s = static_cast<double>(cm.total());
  double c = 0.0;
  for (const auto& [cell, n] : cm.cells())
    if (cell.first == cell.second) c += static_cast<double>(n);

  double pt = 0.0, pp = 0.0, tt = 0.0;
  for (const auto& [label, t] : truth) {
    tt += static_cast<double>(t) * static_cast<double>(t);
    auto it = pred.find(label);
    if (it != pred.end()) pt += static_cast<double>(it->second) * static_cast<double>(t);
  }
  for (const auto& [label, p] : pred) pp += static_cast<double>(p) * static_cast<double>(p);

  const double denom = (s * s - pp) * (s * s - tt);
  if (denom <= 0.0) return 0.0;
  const double value = (c * s - pt) / std::sqrt(denom);
  return std::clamp(value, -1.0, 1.0);
}

double nmi_arith(const ConfusionMatrix& cm) {
  require_total(cm, "nmi");
  const double total = static_cast<double>(cm.total());
  const auto rows = cm.row_sums();
  const auto cols = cm.col_sums();
  const double h_rows = entropy(rows, total);
  const double h_cols = entropy(cols, total);
  const bool rows_zero = h_rows <= 0.0;
  const bool cols_zero = h_cols <= 0.0;
  if (rows_zero && cols_zero) return 1.0;
  if (rows_zero || cols_zero) return 0.0;

  double mi = 0.0;
  for (const auto& [cell, n] : cm.cells()) {
    if (n == 0) continue;
    const double joint = static_cast<double>(n);
    const double r = static_cast<double>(rows.at(cell.first));
    const double c = static_cast<double>(cols.at(cell.second));
    mi += (joint / total) * std::log(joint * total / (r * c));
  }
  return std::clamp(mi / (0.5 * (h_rows + h_cols)), 0.0, 1.0);
}

std::string_view to_string(Measure measure) {
  switch (measure) {
    case Measure::accuracy: return "accuracy";
    case Measure::mcc: return "mcc";
    case Measure::nmi: return "nmi";
  }
  return "accuracy";
}

Measure parse_measure(std::string_view text) {
  if (text == "accuracy") return Measure::accuracy;
  if (text == "mcc") return Measure::mcc;
  if (text == "nmi") return Measure::nmi;
  throw UsageError("unknown measure '" + std::string(text) + "'");
}

double compute(Measure measure, const ConfusionMatrix& cm) {
  switch (measure) {
    case Measure::accuracy: return accuracy(cm);
    case Measure::mcc: return mcc(cm);
    case Measure::nmi: return nmi_arith(cm);
  }
  return 0.0;
}

std::optional<double> reaction_time(std::span<const bool> truth_novel,
                                    std::span<const bool> pred_novel) {
  if (truth_novel.size() != pred_novel.size())
    throw DataError("reaction_time: truth has " + std::to_string(truth_novel.size()) +
                    " samples but predictions have " + std::to_string(pred_novel.size()));
  const auto first = std::find(truth_novel.begin(), truth_novel.end(), true);
  if (first == truth_novel.end()) return std::nullopt;

  const std::size_t a = static_cast<std::size_t>(first - truth_novel.begin());
  const std::size_t z = truth_novel.size() - 1;
  const auto r = static_cast<double>(std::count(truth_novel.begin(), truth_novel.end(), true));

  std::size_t d = a;
  while (d <= z && !pred_novel[d]) ++d;
  if (d > z) return 1.0;
  if (d == a) return 0.0;

  const auto m = static_cast<double>(std::count(truth_novel.begin() + static_cast<std::ptrdiff_t>(a),
                                                truth_novel.begin() + static_cast<std::ptrdiff_t>(d) + 1,
                                                true));
  const double elapsed = static_cast<double>(z + 1 - a) / static_cast<double>(d - a);
  return 2.0 / (elapsed + r / m);
}

std::vector<std::string> group_values(std::span<const Outcome> outcomes, const std::string& key,
                                      bool tercile_bins) {
  std::vector<std::string> values(outcomes.size());
  std::vector<std::pair<double, std::size_t>> numeric;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const Metadata* meta = outcomes[i].metadata;
    auto it = meta == nullptr ? Metadata::const_iterator{} : meta->find(key);
    if (meta == nullptr || it == meta->end() || it->second.empty()) {
      values[i] = std::string(kMissingGroup);
      continue;
    }
    values[i] = it->second;
    if (tercile_bins) {
      double x = 0.0;
      const auto& text = it->second;
      auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
      if (ec == std::errc{} && end == text.data() + text.size() && std::isfinite(x))
        numeric.emplace_back(x, i);
    }
  }
  if (tercile_bins && !numeric.empty()) {
    std::stable_sort(numeric.begin(), numeric.end(),
                     [](const auto& l, const auto& r) { return l.first < r.first; });
    static constexpr const char* kBins[] = {"small", "medium", "large"};
    const std::size_t n = numeric.size();
    for (std::size_t rank = 0; rank < n; ++rank) values[numeric[rank].second] = kBins[3 * rank / n];
  }
  return values;
}

std::map<std::string, GroupResult> group_metrics(std::span<const Outcome> outcomes,
                                                 const GroupOptions& options) {
  std::vector<Measure> measures;
  for (const auto& name : options.measures) measures.push_back(parse_measure(name));

  const auto values = group_values(outcomes, options.key, options.tercile_bins);
  static const LabelSet kEmpty;

  // group -> known set -> raw matrix
  std::map<std::string, std::map<const LabelSet*, ConfusionMatrix>> raw;
  std::map<std::string, std::size_t> sizes;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const LabelSet* known = outcomes[i].known ? outcomes[i].known.get() : &kEmpty;
    raw[values[i]][known].add(outcomes[i].truth, outcomes[i].predicted);
    ++sizes[values[i]];
  }

  std::map<std::string, GroupResult> out;
  for (auto& [group, by_known] : raw) {
    std::vector<ConfusionMatrix> reduced;
    for (const auto& [known, cm] : by_known)
      reduced.push_back(reduce_confusion(cm, options.reduction, *known));
    GroupResult result;
    result.samples = sizes[group];
    result.matrix = aggregate(reduced);
    for (Measure m : measures) result.values[std::string(to_string(m))] = compute(m, result.matrix);
    out.emplace(group, std::move(result));
  }
  return out;
}

}  // namespace owl
