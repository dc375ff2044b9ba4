#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace owl {

/// Binary container: "OWLC", u32 LE header length, UTF-8 JSON header, then the
/// f64 LE blocks in the order and lengths the header's "blocks" array declares.
struct Checkpoint {
  nlohmann::json header = nlohmann::json::object();
  std::vector<std::pair<std::string, std::vector<double>>> blocks;

  void add_block(std::string name, std::vector<double> values) {
    blocks.emplace_back(std::move(name), std::move(values));
  }
  /// Throws DataError if absent.
  const std::vector<double>& block(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace owl
