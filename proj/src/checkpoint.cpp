#include "owl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "owl/error.hpp"

namespace owl {
namespace {

constexpr char kMagic[4] = {'O', 'W', 'L', 'C'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("checkpoint: truncated header");
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 |
         std::uint32_t{b[3]} << 24;
}

}  // namespace

const std::vector<double>& Checkpoint::block(const std::string& name) const {
  for (const auto& [key, values] : blocks)
    if (key == name) return values;
  throw DataError("checkpoint: missing block '" + name + "'");
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  nlohmann::json header = ckpt.header;
  auto& listing = header["blocks"] = nlohmann::json::array();
  for (const auto& [name, values] : ckpt.blocks)
    listing.push_back({{"name", name}, {"length", values.size()}});
  const std::string text = header.dump();

  out.write(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, values] : ckpt.blocks) {
    for (double v : values) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      unsigned char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
      out.write(reinterpret_cast<const char*>(b), 8);
    }
  }
  if (!out) throw DataError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("checkpoint: bad magic");
  const std::uint32_t length = get_u32(in);
  std::string text(length, '\0');
  if (!in.read(text.data(), length)) throw DataError("checkpoint: truncated header");

  Checkpoint ckpt;
  try {
    ckpt.header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: header is not JSON: ") + e.what());
  }
  if (!ckpt.header.contains("blocks") || !ckpt.header["blocks"].is_array())
    throw DataError("checkpoint: header lacks a blocks array");
  for (const auto& entry : ckpt.header["blocks"]) {
    const auto name = entry.at("name").get<std::string>();
    const auto n = entry.at("length").get<std::size_t>();
    std::vector<double> values(n);
    for (auto& v : values) {
      unsigned char b[8];
      if (!in.read(reinterpret_cast<char*>(b), 8))
        throw DataError("checkpoint: block '" + name + "' is truncated");
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= std::uint64_t{b[i]} << (8 * i);
      v = std::bit_cast<double>(bits);
    }
    ckpt.blocks.emplace_back(name, std::move(values));
  }
  ckpt.header.erase("blocks");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace owl
