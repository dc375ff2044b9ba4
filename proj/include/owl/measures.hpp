#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "owl/confusion.hpp"

namespace owl {

/// Fraction of counts on the diagonal (cells whose row and column label match).
double accuracy(const ConfusionMatrix& cm);

/// Multiclass Matthews correlation (Gorodkin's R_K) over the row/column label
/// union. A zero denominator yields 0.
double mcc(const ConfusionMatrix& cm);

/// Mutual information normalized by the arithmetic mean of the row and column
/// entropies. Both entropies zero gives 1; exactly one zero gives 0.
double nmi_arith(const ConfusionMatrix& cm);

enum class Measure { accuracy, mcc, nmi };

std::string_view to_string(Measure measure);
Measure parse_measure(std::string_view text);
double compute(Measure measure, const ConfusionMatrix& cm);

/// Novelty reaction time for one increment's sample stream.
///
/// `truth_novel[i]` marks samples of classes that are actually novel,
/// `pred_novel[i]` the predictor's novelty flags, both in presentation order.
/// With a the first novel index, d the first flag at or after a, z the last
/// index, r the novel count and m the novel count in [a, d]:
///
///     score = 2 / ((z + 1 - a) / (d - a) + r / m)
///
/// Returns nullopt when nothing is novel, 1 when novelty is never flagged and
/// 0 when it is flagged at a itself.
std::optional<double> reaction_time(std::span<const bool> truth_novel,
                                    std::span<const bool> pred_novel);

/// A resolved prediction with the context needed for grouped evaluation.
struct Outcome {
  Label truth;
  Label predicted;
  const Metadata* metadata = nullptr;
  /// Known set the reductions use for this outcome (e.g. that of its step).
  std::shared_ptr<const LabelSet> known;
};

struct GroupOptions {
  std::string key;
  /// Tercile-bin numeric values into small / medium / large.
  bool tercile_bins = false;
  Reduction reduction = Reduction::raw;
  std::vector<std::string> measures;
};

inline constexpr std::string_view kMissingGroup = "N/A";

struct GroupResult {
  std::size_t samples = 0;
  ConfusionMatrix matrix;
  std::map<std::string, double> values;
};

/// Group value per outcome: metadata value, "N/A" when absent, or its tercile
/// bin ("small", "medium", "large") by ascending rank when binning. Non-numeric
/// values are left as-is when binning.
std::vector<std::string> group_values(std::span<const Outcome> outcomes, const std::string& key,
                                      bool tercile_bins);

/// Per-group reduced confusion (summed over distinct known sets) and measures.
/// Throws UsageError on an unknown measure name.
std::map<std::string, GroupResult> group_metrics(std::span<const Outcome> outcomes,
                                                 const GroupOptions& options);

}  // namespace owl
