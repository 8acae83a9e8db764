#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "forecastnet/errors.hpp"
#include "forecastnet/tensor.hpp"

namespace forecastnet {

// Binary container: 8-byte magic, u64 LE header length, JSON header, then
// one little-endian f64 array per parameter in header order.
namespace checkpoint {

inline constexpr std::array<char, 8> kMagic = {'F', 'C', 'N', 'E', 'T', 'C', 'K', 'P'};
inline constexpr int kVersion = 1;

struct Contents {
  nlohmann::json header;
  std::map<std::uint64_t, Tensor> tensors;  // keyed by parameter id
};

namespace detail {

inline void put_u64(std::string &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_u64(const unsigned char *p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

// Serializes to bytes. `header` must not contain a "params" key; it is filled
// from `params`.
inline std::string encode(nlohmann::json header,
                          const std::vector<const Param *> &params) {
  header["format"] = "forecastnet-checkpoint";
  header["version"] = kVersion;
  nlohmann::json list = nlohmann::json::array();
  for (const Param *p : params)
    list.push_back({{"id", p->id},
                    {"name", p->name},
                    {"shape", p->value.shape()},
                    {"length", p->value.size()}});
  header["params"] = std::move(list);
  const std::string text = header.dump();

  std::string out(kMagic.begin(), kMagic.end());
  detail::put_u64(out, text.size());
  out += text;
  for (const Param *p : params)
    for (double v : p->value.data()) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline Contents decode(const std::string &bytes) {
  const auto *raw = reinterpret_cast<const unsigned char *>(bytes.data());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic.data(), 8) != 0)
    throw FormatError("checkpoint: bad magic or truncated preamble");
  const std::uint64_t hlen = detail::get_u64(raw + 8);
  if (hlen > bytes.size() - 16) throw FormatError("checkpoint: truncated header");
  Contents c;
  try {
    c.header = nlohmann::json::parse(bytes.substr(16, hlen));
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("checkpoint: corrupt header: ") + e.what());
  }
  if (c.header.value("format", "") != "forecastnet-checkpoint")
    throw FormatError("checkpoint: not a forecastnet checkpoint");
  const int version = c.header.value("version", -1);
  if (version != kVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  std::size_t off = 16 + hlen;
  try {
    for (const auto &entry : c.header.at("params")) {
      const auto id = entry.at("id").get<std::uint64_t>();
      const auto shape = entry.at("shape").get<Shape>();
      const auto len = entry.at("length").get<std::size_t>();
      if (shape_numel(shape) != len)
        throw FormatError("checkpoint: length/shape disagreement for param " +
                          std::to_string(id));
      if ((bytes.size() - off) / 8 < len)
        throw FormatError("checkpoint: truncated payload");
      std::vector<double> data(len);
      for (std::size_t i = 0; i < len; ++i, off += 8)
        data[i] = std::bit_cast<double>(detail::get_u64(raw + off));
      if (!c.tensors.emplace(id, Tensor(shape, std::move(data))).second)
        throw FormatError("checkpoint: duplicate param id " + std::to_string(id));
    }
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("checkpoint: malformed param table: ") + e.what());
  }
  if (off != bytes.size()) throw FormatError("checkpoint: trailing bytes after payload");
  return c;
}

inline void write_file(const std::string &path, const std::string &bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open '" + path + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError("write failed for '" + path + "'");
}

inline std::string read_file(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Copies decoded values into freshly built parameters, verifying id, name and
// shape agreement.
inline void restore(const Contents &c, const std::vector<Param *> &params) {
  if (c.tensors.size() != params.size())
    throw FormatError("checkpoint: expected " + std::to_string(params.size()) +
                      " params, file has " + std::to_string(c.tensors.size()));
  for (Param *p : params) {
    auto it = c.tensors.find(p->id);
    if (it == c.tensors.end())
      throw FormatError("checkpoint: missing param id " + std::to_string(p->id));
    if (it->second.shape() != p->value.shape())
      throw FormatError("checkpoint: shape mismatch for " + p->name);
    p->value = it->second;
    p->zero_grad();
  }
}

}  // namespace checkpoint
}  // namespace forecastnet
