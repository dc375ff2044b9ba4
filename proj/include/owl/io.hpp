#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "owl/dataset.hpp"
#include "owl/evaluator.hpp"

namespace owl {

// Manifest CSV: header "id,label,split,source" plus sorted "meta.<key>"
// columns; RFC 4180 quoting.
std::vector<std::vector<std::string>> parse_csv(std::istream& in);
std::string csv_escape(std::string_view field);
Manifest read_manifest_csv(std::istream& in);
void write_manifest_csv(std::ostream& out, const Manifest& manifest);
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

// Features, binary: "OWLF", u16 version = 1, u32 dim, then per record
// u16 id length, id bytes, dim x f32; all little-endian.
FeatureStore read_features_binary(std::istream& in);
void write_features_binary(std::ostream& out, const FeatureStore& features);
// Features, CSV: "id,f0,...,f{d-1}".
FeatureStore read_features_csv(std::istream& in);
void write_features_csv(std::ostream& out, const FeatureStore& features);
/// Picks the format from the magic bytes.
FeatureStore load_features(const std::filesystem::path& path);
/// Binary unless the extension is ".csv".
void save_features(const std::filesystem::path& path, const FeatureStore& features);

nlohmann::json plan_to_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const nlohmann::json& j);
ExperimentPlan load_plan(const std::filesystem::path& path);
void save_plan(const std::filesystem::path& path, const ExperimentPlan& plan);

nlohmann::json confusion_to_json(const ConfusionMatrix& cm);
ConfusionMatrix confusion_from_json(const nlohmann::json& j);

nlohmann::json step_to_json(const StepRecord& rec);
StepRecord step_from_json(const nlohmann::json& j);
nlohmann::json outcome_to_json(const SampleOutcome& o);
SampleOutcome outcome_from_json(const nlohmann::json& j);

/// One JSON document per non-empty line.
std::vector<nlohmann::json> read_json_lines(std::istream& in);
std::vector<StepRecord> load_log(const std::filesystem::path& path);
std::vector<SampleOutcome> load_outcomes(const std::filesystem::path& path);

/// Label per line, blank lines ignored.
LabelSet read_label_list(std::istream& in);
LabelSet load_label_list(const std::filesystem::path& path);

}  // namespace owl
