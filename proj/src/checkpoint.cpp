// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/checkpoint.hpp"

#include <set>

#include "descatter/bytes.hpp"

namespace descatter {

namespace {

constexpr std::size_t kMagicLen = 8;
constexpr std::uint32_t kMaxName = 4096;
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxConfig = 1 << 20;

std::vector<ArchitectureMismatch::Field> diff_configs(const UNetConfig& expected, const UNetConfig& actual) {
  std::vector<ArchitectureMismatch::Field> out;
  const auto e = expected.fields();
  const auto a = actual.fields();
  for (const auto& [name, value] : e) {
    auto it = a.find(name);
    const std::string got = it == a.end() ? "<missing>" : it->second;
    if (got != value) out.push_back({name, value, got});
  }
  return out;
}

}  // namespace

std::vector<char> encode_checkpoint(const UNetModel<float>& model) {
  std::set<std::string> seen;
  ByteWriter w;
  w.bytes(std::string_view(kCheckpointMagic, kMagicLen));
  const std::string cfg = model.config().to_text();
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  w.bytes(cfg);
  for (const auto& p : model.params()) {
    if (!seen.insert(p.name).second) throw ConfigError("duplicate parameter name '" + p.name + "'");
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (int d : p.value.shape()) w.u32(static_cast<std::uint32_t>(d));
    w.f32s(p.value.values());
  }
  return w.take();
}

UNetModel<float> decode_checkpoint(std::span<const char> bytes, const std::optional<UNetConfig>& expected) {
  ByteReader r(bytes);
  if (r.bytes(kMagicLen, "checkpoint magic") != std::string_view(kCheckpointMagic, kMagicLen)) {
    throw FormatError("bad checkpoint magic", 0);
  }
  const std::size_t cfg_at = r.offset();
  const std::uint32_t cfg_len = r.u32("config length");
  if (cfg_len > kMaxConfig) throw FormatError("config block too large", cfg_at);
  UNetConfig config;
  try {
    config = UNetConfig::from_text(r.bytes(cfg_len, "config block"));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid config block: ") + e.what(), cfg_at + 4);
  }
  if (expected) {
    auto fields = diff_configs(*expected, config);
    if (!fields.empty()) throw ArchitectureMismatch(std::move(fields));
  }

  // Bound the allocation before trusting the stored config.
  if (config.base_filters < 1 || config.depth < 1 || config.depth > 16 ||
      (static_cast<std::uint64_t>(config.base_filters) << config.depth) > bytes.size()) {
    throw FormatError("config block describes a model larger than the file", cfg_at + 4);
  }
  UNetModel<float> model = [&] {
    try {
      return UNetModel<float>::zeroed(config);
    } catch (const ConfigError& e) {
      throw FormatError(std::string("invalid config block: ") + e.what(), cfg_at + 4);
    }
  }();
  for (auto& p : model.params()) {
    const std::size_t at = r.offset();
    const std::uint32_t name_len = r.u32("parameter name length");
    if (name_len > kMaxName) throw FormatError("parameter name too long", at);
    const std::string name = r.bytes(name_len, "parameter name");
    if (name != p.name) {
      throw FormatError("expected parameter '" + p.name + "', found '" + name + "'", at + 4);
    }
    const std::size_t rank_at = r.offset();
    const std::uint32_t rank = r.u32("parameter rank");
    if (rank != static_cast<std::uint32_t>(p.value.rank()) || rank > kMaxRank) {
      throw FormatError("parameter '" + name + "' has rank " + std::to_string(rank) + ", expected " +
                            std::to_string(p.value.rank()),
                        rank_at);
    }
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::size_t dim_at = r.offset();
      const std::uint32_t d = r.u32("parameter dim");
      if (d != static_cast<std::uint32_t>(p.value.dim(static_cast<int>(i)))) {
        throw FormatError("parameter '" + name + "' dim " + std::to_string(i) + " is " + std::to_string(d) +
                              ", expected " + std::to_string(p.value.dim(static_cast<int>(i))),
                          dim_at);
      }
    }
    r.f32s(p.value.values(), "parameter values");
  }
  if (!r.at_end()) throw FormatError("trailing bytes after last parameter", r.offset());
  return model;
}

void save_checkpoint(const UNetModel<float>& model, const std::string& path) {
  write_file_atomic(path, encode_checkpoint(model));
}

UNetModel<float> load_checkpoint(const std::string& path, const std::optional<UNetConfig>& expected) {
  const std::vector<char> bytes = read_file(path);
  return decode_checkpoint(bytes, expected);
}

}  // namespace descatter
