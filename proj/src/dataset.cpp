// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/dataset.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <sstream>

#include "descatter/bytes.hpp"
#include "descatter/glyph.hpp"
#include "descatter/idx.hpp"
#include "descatter/rng.hpp"

namespace descatter {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMagicLen = 8;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string_view alphabet(const std::string& symbols) {
  if (symbols == "digits") return kDigits;
  if (symbols == "letters") return kLetters;
  throw ConfigError("unknown symbol set '" + symbols + "' (expected digits or letters)");
}

Image shifted(const Image& img, int dy, int dx) {
  if (dx == 0 && dy == 0) return img;
  const int n = img.n();
  Image out(n);
  for (int r = 0; r < n; ++r) {
    const int sr = r - dy;
    if (sr < 0 || sr >= n) continue;
    for (int c = 0; c < n; ++c) {
      const int sc = c - dx;
      if (sc >= 0 && sc < n) out.at(r, c) = img.at(sr, sc);
    }
  }
  return out;
}

bool is_idx_source(const std::string& source) { return source.rfind("idx:", 0) == 0; }

Image make_source(const DatasetManifest& m, int index, const std::vector<Image>* idx_images,
                  std::string* source_id) {
  RandomStream rng = derive_rng(m.master_seed, static_cast<std::uint64_t>(index));
  Image img;
  std::string id;
  if (m.source == "glyphs") {
    const std::string_view set = alphabet(m.symbols);
    const char symbol = set[rng.index(set.size())];
    const std::uint64_t style = rng.next_u64();
    img = render_glyph({symbol, style}, m.n);
    id = std::string(m.symbols == "digits" ? "digit-" : "letter-") + symbol + "/seed-" + std::to_string(style);
  } else if (is_idx_source(m.source)) {
    if (!idx_images || index >= static_cast<int>(idx_images->size())) {
      throw ConfigError("idx source '" + m.source + "' has fewer than " + std::to_string(index + 1) + " images");
    }
    const Image& raw = (*idx_images)[static_cast<std::size_t>(index)];
    if (raw.n() > m.n) {
      throw ConfigError("idx images (" + std::to_string(raw.n()) + "px) are larger than n=" + std::to_string(m.n));
    }
    img = normalize(resize_bilinear(raw, m.n));
    id = "idx:" + std::to_string(index);
  } else {
    throw ConfigError("unknown source '" + m.source + "' (expected glyphs or idx:PATH)");
  }
  if (m.shift_px > 0) {
    const int span = 2 * m.shift_px + 1;
    const int dy = static_cast<int>(rng.index(static_cast<std::uint64_t>(span))) - m.shift_px;
    const int dx = static_cast<int>(rng.index(static_cast<std::uint64_t>(span))) - m.shift_px;
    img = shifted(img, dy, dx);
  }
  if (source_id) *source_id = id;
  return img;
}

}  // namespace

std::string DatasetManifest::label() const {
  if (source == "glyphs" && symbols == "letters") return "letters";
  if (channel_config.kind == ChannelKind::diffuser &&
      (rotation_step_deg != 0.0 || channel_config.diffuser.rotation_deg != 0.0)) {
    return "rotated";
  }
  return to_string(channel_config.kind);
}

std::string DatasetManifest::to_text() const {
  KeyValues kv;
  kv.set("format_version", std::to_string(format_version));
  kv.set("n", std::to_string(n));
  kv.set("count", std::to_string(count));
  kv.set("master_seed", std::to_string(master_seed));
  kv.set("source", source);
  kv.set("symbols", symbols);
  kv.set("rotation_step_deg", format_double(rotation_step_deg));
  kv.set("shift_px", std::to_string(shift_px));
  kv.set("label", label());
  channel_config.store(kv);
  for (std::size_t i = 0; i < source_ids.size(); ++i) {
    const std::uint64_t sum = i < checksums.size() ? checksums[i] : 0;
    kv.set("pair." + std::to_string(i), hex64(sum) + " " + source_ids[i]);
  }
  return kv.to_text();
}

DatasetManifest DatasetManifest::parse(const std::string& text) {
  KeyValues kv;
  try {
    kv = KeyValues::parse(text);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("manifest: ") + e.what(), 0);
  }
  DatasetManifest m;
  try {
    m.format_version = kv.get_int("format_version");
    if (m.format_version != kDatasetFormatVersion) {
      throw FormatError("manifest: unsupported format_version " + std::to_string(m.format_version), 0);
    }
    m.n = kv.get_int("n");
    m.count = kv.get_int("count");
    m.master_seed = kv.get_u64("master_seed");
    m.source = kv.get_or("source", "glyphs");
    m.symbols = kv.get_or("symbols", "digits");
    m.rotation_step_deg = kv.get_double_or("rotation_step_deg", 0.0);
    m.shift_px = kv.get_int_or("shift_px", 0);
    m.channel_config = ChannelConfig::from(kv);
    if (m.n < 1 || m.count < 0) throw FormatError("manifest: invalid n or count", 0);
    for (int i = 0; i < m.count; ++i) {
      const std::string key = "pair." + std::to_string(i);
      if (!kv.has(key)) break;
      const std::string& v = kv.get(key);
      const auto space = v.find(' ');
      if (space != 16) throw FormatError("manifest: malformed entry '" + key + "'", 0);
      m.checksums.push_back(std::stoull(v.substr(0, 16), nullptr, 16));
      m.source_ids.push_back(v.substr(17));
    }
  } catch (const ConfigError& e) {
    throw FormatError(std::string("manifest: ") + e.what(), 0);
  } catch (const std::invalid_argument&) {
    throw FormatError("manifest: malformed checksum", 0);
  }
  return m;
}

std::vector<char> encode_pair(const SamplePair& pair) {
  if (pair.object.n() != pair.speckle.n()) {
    throw ShapeError("pair object side " + std::to_string(pair.object.n()) + " != speckle side " +
                     std::to_string(pair.speckle.n()));
  }
  ByteWriter w;
  w.bytes(std::string_view(kPairMagic, kMagicLen));
  w.u32(static_cast<std::uint32_t>(pair.object.n()));
  w.f32s(pair.object.pixels());
  w.f32s(pair.speckle.pixels());
  return w.take();
}

SamplePair decode_pair(std::span<const char> bytes) {
  ByteReader r(bytes);
  if (r.bytes(kMagicLen, "pair magic") != std::string_view(kPairMagic, kMagicLen)) {
    throw FormatError("bad pair magic", 0);
  }
  const std::size_t n_at = r.offset();
  const std::uint32_t n = r.u32("pair side");
  const std::uint64_t per = static_cast<std::uint64_t>(n) * n;
  if (n == 0 || n > 65536 || 8 * per != r.remaining()) {
    throw FormatError("pair side " + std::to_string(n) + " inconsistent with file size", n_at);
  }
  std::vector<float> obj(per), spk(per);
  r.f32s(obj, "object pixels");
  r.f32s(spk, "speckle pixels");
  SamplePair p;
  p.object = Image(static_cast<int>(n), std::move(obj));
  p.speckle = Image(static_cast<int>(n), std::move(spk));
  return p;
}

SamplePair read_pair_file(const std::string& path) {
  const std::vector<char> bytes = read_file(path);
  return decode_pair(bytes);
}

std::string pair_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "pair_%06d.bin", index);
  return buf;
}

void write_dataset(const Dataset& dataset, const std::string& dir) {
  DatasetManifest m = dataset.manifest;
  m.count = static_cast<int>(dataset.pairs.size());
  m.source_ids.clear();
  m.checksums.clear();
  const fs::path target(dir);
  fs::path tmp = target;
  tmp += ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    const SamplePair& p = dataset.pairs[i];
    if (p.object.n() != m.n) {
      throw ShapeError("pair " + std::to_string(i) + " has side " + std::to_string(p.object.n()) +
                       ", manifest says " + std::to_string(m.n));
    }
    const std::vector<char> blob = encode_pair(p);
    write_file_atomic((tmp / pair_file_name(static_cast<int>(i))).string(), blob);
    m.source_ids.push_back(p.source_id);
    m.checksums.push_back(fnv1a64(blob));
  }
  write_file_atomic((tmp / "manifest").string(), std::string_view(m.to_text()));
  fs::remove_all(target);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::rename(tmp, target);
}

Dataset read_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw ConfigError("dataset directory '" + dir + "' does not exist");
  const std::vector<char> text = read_file((root / "manifest").string());
  Dataset ds;
  ds.manifest = DatasetManifest::parse(std::string(text.begin(), text.end()));
  const DatasetManifest& m = ds.manifest;
  if (static_cast<int>(m.checksums.size()) != m.count) {
    throw FormatError("manifest lists " + std::to_string(m.checksums.size()) + " pairs, count is " +
                          std::to_string(m.count),
                      0);
  }
  for (int i = 0; i < m.count; ++i) {
    const std::string path = (root / pair_file_name(i)).string();
    const std::vector<char> blob = read_file(path);
    if (fnv1a64(blob) != m.checksums[static_cast<std::size_t>(i)]) {
      throw FormatError("checksum mismatch in " + path, 0);
    }
    SamplePair p = decode_pair(blob);
    if (p.object.n() != m.n) {
      throw FormatError(path + ": side " + std::to_string(p.object.n()) + " != manifest n " +
                            std::to_string(m.n),
                        8);
    }
    p.channel = m.channel();
    p.source_id = m.source_ids[static_cast<std::size_t>(i)];
    ds.pairs.push_back(std::move(p));
  }
  return ds;
}

Image source_image(const DatasetManifest& manifest, int index, std::string* source_id) {
  std::vector<Image> idx_images;
  if (is_idx_source(manifest.source)) idx_images = read_idx(manifest.source.substr(4)).images;
  return make_source(manifest, index, &idx_images, source_id);
}

Dataset generate_dataset(DatasetManifest manifest) {
  if (manifest.count < 0) throw ConfigError("count must be >= 0");
  if (manifest.shift_px < 0) throw ConfigError("shift_px must be >= 0");
  manifest.channel_config.validate(manifest.n);
  alphabet(manifest.symbols);

  std::vector<Image> idx_images;
  if (is_idx_source(manifest.source)) idx_images = read_idx(manifest.source.substr(4)).images;

  Dataset ds;
  const bool per_sample = manifest.rotation_step_deg != 0.0;
  std::unique_ptr<ScatteringChannel> shared;
  if (!per_sample) shared = std::make_unique<ScatteringChannel>(manifest.channel_config, manifest.n);
  manifest.source_ids.clear();
  manifest.checksums.clear();
  for (int i = 0; i < manifest.count; ++i) {
    SamplePair p;
    const Image src = make_source(manifest, i, &idx_images, &p.source_id);
    p.object = free_channel(src);
    if (per_sample) {
      ChannelConfig cfg = manifest.channel_config;
      cfg.diffuser.rotation_deg += manifest.rotation_step_deg * i;
      p.speckle = ScatteringChannel(cfg, manifest.n).apply(p.object);
    } else {
      p.speckle = shared->apply(p.object);
    }
    p.channel = manifest.channel();
    manifest.source_ids.push_back(p.source_id);
    manifest.checksums.push_back(fnv1a64(encode_pair(p)));
    ds.pairs.push_back(std::move(p));
  }
  ds.manifest = std::move(manifest);
  return ds;
}

std::string default_data_root() {
  const char* env = std::getenv("DESCATTER_DATA");
  return env && *env ? env : ".";
}

}  // namespace descatter
