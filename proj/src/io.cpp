#include "owl/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "owl/error.hpp"

namespace owl {
namespace {

using nlohmann::json;

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::uint64_t parse_uint(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size())
    throw DataError(what + ": '" + text + "' is not a non-negative integer");
  return v;
}

double parse_double(const std::string& text, const std::string& what) {
  // from_chars for double is unavailable on older libstdc++; strtod is locale
  // sensitive but the CLI never changes the locale.
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) throw DataError(what + ": '" + text + "' is not a number");
  return v;
}

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw DataError(std::string("features: truncated ") + what);
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(b[i]) << (8 * i));
  return v;
}

template <typename T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  char c;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row.front().empty())) rows.push_back(std::move(row));
    row.clear();
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

Manifest read_manifest_csv(std::istream& in) {
  const auto rows = parse_csv(in);
  if (rows.empty()) throw DataError("manifest: missing header");
  const auto& header = rows.front();
  const std::vector<std::string> fixed = {"id", "label", "split", "source"};
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin()))
    throw DataError("manifest: header must start with id,label,split,source");
  std::vector<std::string> meta_keys;
  for (std::size_t c = fixed.size(); c < header.size(); ++c) {
    if (!header[c].starts_with("meta.") || header[c].size() == 5)
      throw DataError("manifest: unexpected column '" + header[c] + "'");
    meta_keys.push_back(header[c].substr(5));
  }
  std::vector<SampleRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "manifest line " + std::to_string(r + 1);
    if (row.size() != header.size())
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(row.size()));
    SampleRecord rec;
    rec.id = row[0];
    rec.label = row[1];
    rec.split = parse_split(row[2]);
    const auto source = parse_uint(row[3], where + " source");
    if (source > UINT32_MAX) throw DataError(where + ": source out of range");
    rec.source = static_cast<std::uint32_t>(source);
    for (std::size_t k = 0; k < meta_keys.size(); ++k)
      if (!row[fixed.size() + k].empty()) rec.metadata[meta_keys[k]] = row[fixed.size() + k];
    records.push_back(std::move(rec));
  }
  return Manifest(std::move(records));
}

void write_manifest_csv(std::ostream& out, const Manifest& manifest) {
  std::set<std::string> keys;
  for (const auto& rec : manifest.records())
    for (const auto& [key, value] : rec.metadata) keys.insert(key);
  out << "id,label,split,source";
  for (const auto& key : keys) out << ',' << csv_escape("meta." + key);
  out << '\n';
  for (const auto& rec : manifest.records()) {
    out << csv_escape(rec.id) << ',' << csv_escape(rec.label) << ',' << to_string(rec.split) << ','
        << rec.source;
    for (const auto& key : keys) {
      out << ',';
      auto it = rec.metadata.find(key);
      if (it != rec.metadata.end()) out << csv_escape(it->second);
    }
    out << '\n';
  }
}

Manifest load_manifest(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_manifest_csv(in);
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  auto out = open_out(path);
  write_manifest_csv(out, manifest);
}

FeatureStore read_features_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "OWLF", 4) != 0) throw DataError("features: bad magic");
  const auto version = get_le<std::uint16_t>(in, "version");
  if (version != 1) throw DataError("features: unsupported version " + std::to_string(version));
  const auto dim = get_le<std::uint32_t>(in, "dimension");
  FeatureStore store(dim);
  std::vector<double> x(dim);
  while (in.peek() != std::char_traits<char>::eof()) {
    const auto len = get_le<std::uint16_t>(in, "id length");
    std::string id(len, '\0');
    if (!in.read(id.data(), len)) throw DataError("features: truncated id");
    for (auto& v : x) v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in, "vector")));
    store.insert(std::move(id), x);
  }
  return store;
}

void write_features_binary(std::ostream& out, const FeatureStore& features) {
  out.write("OWLF", 4);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(features.dim()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& id = features.ids()[i];
    if (id.size() > UINT16_MAX) throw DataError("features: id '" + id.substr(0, 32) + "...' is too long");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (double v : features.row(i)) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) throw DataError("features: write failed");
}

FeatureStore read_features_csv(std::istream& in) {
  const auto rows = parse_csv(in);
  if (rows.empty() || rows.front().size() < 2 || rows.front().front() != "id")
    throw DataError("features csv: header must be id,f0,...");
  const std::size_t dim = rows.front().size() - 1;
  FeatureStore store(dim);
  std::vector<double> x(dim);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "features csv line " + std::to_string(r + 1);
    if (row.size() != dim + 1) throw DataError(where + ": expected " + std::to_string(dim + 1) + " fields");
    for (std::size_t j = 0; j < dim; ++j) x[j] = parse_double(row[j + 1], where);
    store.insert(row[0], x);
  }
  return store;
}

void write_features_csv(std::ostream& out, const FeatureStore& features) {
  out << "id";
  for (std::size_t j = 0; j < features.dim(); ++j) out << ",f" << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < features.size(); ++i) {
    out << csv_escape(features.ids()[i]);
    for (double v : features.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

FeatureStore load_features(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  char magic[4] = {};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  if (std::memcmp(magic, "OWLF", 4) == 0) return read_features_binary(in);
  return read_features_csv(in);
}

void save_features(const std::filesystem::path& path, const FeatureStore& features) {
  if (path.extension() == ".csv") {
    auto out = open_out(path);
    write_features_csv(out, features);
  } else {
    auto out = open_out(path, true);
    write_features_binary(out, features);
  }
}

json plan_to_json(const ExperimentPlan& plan) {
  json increments = json::array();
  for (const auto& inc : plan.increments) {
    increments.push_back({{"index", inc.index},
                          {"known_labels", inc.known_labels},
                          {"novel_labels", inc.novel_labels},
                          {"train_ids", inc.train_ids},
                          {"validation_ids", inc.validation_ids},
                          {"test_ids", inc.test_ids}});
  }
  return {{"seed", plan.seed}, {"label_universe", plan.label_universe}, {"increments", std::move(increments)}};
}

ExperimentPlan plan_from_json(const json& j) {
  ExperimentPlan plan;
  plan.seed = get_field<std::uint64_t>(j, "seed");
  plan.label_universe = get_field<LabelSet>(j, "label_universe");
  for (const auto& inc : get_field<json>(j, "increments")) {
    IncrementPlan p;
    p.index = get_field<std::size_t>(inc, "index");
    p.known_labels = get_field<LabelSet>(inc, "known_labels");
    p.novel_labels = get_field<LabelSet>(inc, "novel_labels");
    p.train_ids = get_field<std::vector<std::string>>(inc, "train_ids");
    p.validation_ids = get_field<std::vector<std::string>>(inc, "validation_ids");
    p.test_ids = get_field<std::vector<std::string>>(inc, "test_ids");
    plan.increments.push_back(std::move(p));
  }
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return plan_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_plan(const std::filesystem::path& path, const ExperimentPlan& plan) {
  auto out = open_out(path);
  out << plan_to_json(plan).dump() << '\n';
}

json confusion_to_json(const ConfusionMatrix& cm) {
  const std::vector<Label> rows(cm.row_labels().begin(), cm.row_labels().end());
  const std::vector<Label> cols(cm.col_labels().begin(), cm.col_labels().end());
  json cells = json::array();
  for (const auto& [cell, n] : cm.cells()) {
    const auto r = std::lower_bound(rows.begin(), rows.end(), cell.first) - rows.begin();
    const auto c = std::lower_bound(cols.begin(), cols.end(), cell.second) - cols.begin();
    cells.push_back({r, c, n});
  }
  return {{"rows", rows}, {"cols", cols}, {"cells", std::move(cells)}};
}

ConfusionMatrix confusion_from_json(const json& j) {
  const auto rows = get_field<std::vector<Label>>(j, "rows");
  const auto cols = get_field<std::vector<Label>>(j, "cols");
  ConfusionMatrix cm;
  for (const auto& r : rows) cm.add_row_label(r);
  for (const auto& c : cols) cm.add_col_label(c);
  for (const auto& cell : get_field<json>(j, "cells")) {
    if (!cell.is_array() || cell.size() != 3) throw DataError("confusion cell must be [row, col, count]");
    const auto r = cell[0].get<std::size_t>();
    const auto c = cell[1].get<std::size_t>();
    if (r >= rows.size() || c >= cols.size()) throw DataError("confusion cell index out of range");
    cm.add(rows[r], cols[c], cell[2].get<std::int64_t>());
  }
  return cm;
}

namespace {

json report_to_json(const MatrixReport& report) {
  json matrices = json::object(), measures = json::object();
  for (const auto& [mode, cm] : report.matrices) matrices[std::string(to_string(mode))] = confusion_to_json(cm);
  for (const auto& [mode, m] : report.measures)
    measures[std::string(to_string(mode))] = {{"accuracy", m.accuracy}, {"mcc", m.mcc}, {"nmi", m.nmi}};
  return {{"matrices", std::move(matrices)}, {"measures", std::move(measures)}};
}

MatrixReport report_from_json(const json& j) {
  MatrixReport report;
  const json matrices = get_field<json>(j, "matrices");
  const json measures = get_field<json>(j, "measures");
  for (const auto& [key, value] : matrices.items())
    report.matrices.emplace(parse_reduction(key), confusion_from_json(value));
  for (const auto& [key, value] : measures.items())
    report.measures.emplace(parse_reduction(key),
                            MeasureValues{get_field<double>(value, "accuracy"), get_field<double>(value, "mcc"),
                                          get_field<double>(value, "nmi")});
  return report;
}

}  // namespace

json step_to_json(const StepRecord& rec) {
  json j = {{"step", rec.step},
            {"split", to_string(rec.split)},
            {"samples", rec.samples},
            {"known", rec.known},
            {"report", report_to_json(rec.report)},
            {"reaction_time", rec.reaction_time ? json(*rec.reaction_time) : json(nullptr)},
            {"feedback_granted_ids", rec.feedback_granted_ids}};
  if (rec.cumulative) j["cumulative"] = report_to_json(*rec.cumulative);
  return j;
}

StepRecord step_from_json(const json& j) {
  StepRecord rec;
  rec.step = get_field<double>(j, "step");
  rec.split = parse_split(get_field<std::string>(j, "split"));
  rec.samples = get_field<std::size_t>(j, "samples");
  rec.known = get_field<LabelSet>(j, "known");
  rec.report = report_from_json(get_field<json>(j, "report"));
  if (j.contains("reaction_time") && !j["reaction_time"].is_null()) rec.reaction_time = j["reaction_time"].get<double>();
  rec.feedback_granted_ids = get_field<std::vector<std::string>>(j, "feedback_granted_ids");
  if (j.contains("cumulative")) rec.cumulative = report_from_json(j["cumulative"]);
  return rec;
}

json outcome_to_json(const SampleOutcome& o) {
  return {{"step", o.step}, {"split", to_string(o.split)}, {"id", o.id},
          {"truth", o.truth}, {"predicted", o.predicted}, {"novel", o.novelty_flag}};
}

SampleOutcome outcome_from_json(const json& j) {
  return {get_field<double>(j, "step"),        parse_split(get_field<std::string>(j, "split")),
          get_field<std::string>(j, "id"),     get_field<std::string>(j, "truth"),
          get_field<std::string>(j, "predicted"), get_field<bool>(j, "novel")};
}

std::vector<json> read_json_lines(std::istream& in) {
  std::vector<json> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::vector<StepRecord> load_log(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<StepRecord> out;
  for (const auto& j : read_json_lines(in)) out.push_back(step_from_json(j));
  return out;
}

std::vector<SampleOutcome> load_outcomes(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<SampleOutcome> out;
  for (const auto& j : read_json_lines(in)) out.push_back(outcome_from_json(j));
  return out;
}

LabelSet read_label_list(std::istream& in) {
  LabelSet out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

LabelSet load_label_list(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_label_list(in);
}

}  // namespace owl
