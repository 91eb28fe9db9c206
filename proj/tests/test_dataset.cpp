// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "descatter/bytes.hpp"
#include "descatter/checkpoint.hpp"
#include "descatter/dataset.hpp"
#include "descatter/idx.hpp"
#include "support.hpp"

namespace descatter {
namespace {

using testing::TempDir;

SamplePair random_pair(int n, std::uint64_t seed) {
  RandomStream rng(seed);
  SamplePair p;
  p.object = Image(n);
  p.speckle = Image(n);
  for (float& v : p.object.pixels()) v = static_cast<float>(rng.uniform());
  for (float& v : p.speckle.pixels()) v = static_cast<float>(rng.uniform());
  p.channel = ChannelKind::mmf;
  return p;
}

DatasetManifest small_manifest(ChannelKind kind, int count = 4, int n = 32) {
  DatasetManifest m;
  m.n = n;
  m.count = count;
  m.master_seed = 17;
  m.channel_config.kind = kind;
  m.channel_config.seed = 5;
  m.channel_config.mmf.modes = 64;
  return m;
}

void write_bytes(const std::string& path, std::span<const char> bytes) {
  std::ofstream(path, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Every strict prefix of a valid blob must be rejected as malformed.
template <typename Decode>
void expect_prefixes_rejected(const std::vector<char>& blob, Decode decode) {
  RandomStream rng(blob.size());
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t len = trial < 20 ? static_cast<std::size_t>(trial) : rng.index(blob.size());
    const std::span<const char> prefix(blob.data(), len);
    EXPECT_THROW(decode(prefix), FormatError) << "prefix length " << len;
  }
}

TEST(PairFile, RoundTripsExactly) {
  const SamplePair p = random_pair(64, 1);
  const auto bytes = encode_pair(p);
  EXPECT_EQ(bytes.size(), 8u + 4u + 2u * 4u * 64u * 64u);
  const SamplePair q = decode_pair(bytes);
  EXPECT_EQ(q.object, p.object);
  EXPECT_EQ(q.speckle, p.speckle);
}

TEST(PairFile, RejectsBadMagicAndSize) {
  auto bytes = encode_pair(random_pair(8, 2));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_pair(bad), FormatError);
  bytes.push_back(0);
  EXPECT_THROW(decode_pair(bytes), FormatError);
  SamplePair mismatched = random_pair(8, 3);
  mismatched.speckle = Image(4);
  EXPECT_THROW(encode_pair(mismatched), ShapeError);
}

TEST(PairFile, TruncationsAreFormatErrors) {
  expect_prefixes_rejected(encode_pair(random_pair(16, 4)), [](std::span<const char> b) { decode_pair(b); });
}

TEST(Manifest, TextRoundTrip) {
  DatasetManifest m = small_manifest(ChannelKind::diffuser, 2);
  m.shift_px = 3;
  m.rotation_step_deg = 13.0;
  m.source_ids = {"digit-1/seed-9", "digit-4/seed-2"};
  m.checksums = {0x0123456789abcdefULL, 42};
  const DatasetManifest back = DatasetManifest::parse(m.to_text());
  EXPECT_EQ(back.to_text(), m.to_text());
  EXPECT_EQ(back.source_ids, m.source_ids);
  EXPECT_EQ(back.checksums, m.checksums);
  EXPECT_EQ(back.channel_config, m.channel_config);
}

TEST(Manifest, RejectsOtherVersions) {
  DatasetManifest m = small_manifest(ChannelKind::mmf, 0);
  std::string text = m.to_text();
  const auto at = text.find("format_version = 1");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 18, "format_version = 2");
  EXPECT_THROW(DatasetManifest::parse(text), FormatError);
}

TEST(Manifest, TruncationNeverParsesToTheOriginal) {
  const Dataset d = generate_dataset(small_manifest(ChannelKind::mmf, 3, 16));
  const std::string text = d.manifest.to_text();
  for (std::size_t len = 0; len < text.size(); len += std::max<std::size_t>(1, text.size() / 100)) {
    try {
      const DatasetManifest m = DatasetManifest::parse(text.substr(0, len));
      EXPECT_NE(m.to_text(), text) << len;
    } catch (const FormatError&) {
    }
  }
}

TEST(Manifest, Labels) {
  EXPECT_EQ(small_manifest(ChannelKind::mmf).label(), "mmf");
  EXPECT_EQ(small_manifest(ChannelKind::diffuser).label(), "diffuser");
  DatasetManifest rot = small_manifest(ChannelKind::diffuser);
  rot.rotation_step_deg = 13.0;
  EXPECT_EQ(rot.label(), "rotated");
  DatasetManifest letters = small_manifest(ChannelKind::diffuser);
  letters.symbols = "letters";
  EXPECT_EQ(letters.label(), "letters");
}

TEST(Dataset, WriteReadIsBitwise) {
  TempDir dir("ds");
  const Dataset d = generate_dataset(small_manifest(ChannelKind::diffuser));
  write_dataset(d, dir / "set");
  const Dataset r = read_dataset(dir / "set");
  ASSERT_EQ(r.pairs.size(), d.pairs.size());
  for (std::size_t i = 0; i < d.pairs.size(); ++i) {
    EXPECT_EQ(encode_pair(r.pairs[i]), encode_pair(d.pairs[i]));
    EXPECT_EQ(r.pairs[i].source_id, d.pairs[i].source_id);
    EXPECT_EQ(r.pairs[i].channel, ChannelKind::diffuser);
  }
  EXPECT_EQ(r.manifest.to_text(), d.manifest.to_text());
  EXPECT_FALSE(std::filesystem::exists(dir / "set.tmp"));
}

TEST(Dataset, DetectsTamperedPairs) {
  TempDir dir("ds");
  write_dataset(generate_dataset(small_manifest(ChannelKind::mmf, 2)), dir / "set");
  const std::string path = dir / ("set/" + pair_file_name(1));
  auto bytes = read_file(path);
  bytes[100] ^= 1;
  write_bytes(path, bytes);
  EXPECT_THROW(read_dataset(dir / "set"), FormatError);
  EXPECT_THROW(read_dataset(dir / "absent"), ConfigError);
}

TEST(Dataset, GenerationIsDeterministic) {
  const Dataset a = generate_dataset(small_manifest(ChannelKind::mmf));
  const Dataset b = generate_dataset(small_manifest(ChannelKind::mmf));
  EXPECT_EQ(a.manifest.to_text(), b.manifest.to_text());
  DatasetManifest other = small_manifest(ChannelKind::mmf);
  other.master_seed = 18;
  EXPECT_NE(generate_dataset(other).manifest.checksums, a.manifest.checksums);
}

TEST(Dataset, PairsAreReferenceAndChannelOutputOfOneSource) {
  const DatasetManifest m = small_manifest(ChannelKind::diffuser, 3);
  const Dataset d = generate_dataset(m);
  for (int i = 0; i < m.count; ++i) {
    std::string id;
    const Image src = source_image(m, i, &id);
    EXPECT_EQ(id, d.pairs[static_cast<std::size_t>(i)].source_id);
    EXPECT_EQ(d.pairs[static_cast<std::size_t>(i)].object, free_channel(src));
    EXPECT_EQ(d.pairs[static_cast<std::size_t>(i)].speckle, apply_channel(free_channel(src), m.channel_config));
  }
}

TEST(Dataset, RotationStepAdvancesPerSample) {
  DatasetManifest m = small_manifest(ChannelKind::diffuser, 3);
  m.rotation_step_deg = 13.0;
  const Dataset d = generate_dataset(m);
  for (int i = 0; i < m.count; ++i) {
    ChannelConfig cfg = m.channel_config;
    cfg.diffuser.rotation_deg = 13.0 * i;
    const auto& p = d.pairs[static_cast<std::size_t>(i)];
    EXPECT_EQ(p.speckle, apply_channel(p.object, cfg)) << i;
  }
}

TEST(Dataset, ShiftTranslatesTheSourceWithinBounds) {
  DatasetManifest plain = small_manifest(ChannelKind::diffuser, 20);
  DatasetManifest shifted = plain;
  shifted.shift_px = 3;
  int moved = 0;
  for (int i = 0; i < plain.count; ++i) {
    const Image a = source_image(plain, i, nullptr), b = source_image(shifted, i, nullptr);
    bool matched = false;
    for (int dy = -3; dy <= 3 && !matched; ++dy) {
      for (int dx = -3; dx <= 3 && !matched; ++dx) {
        Image t(a.n());
        for (int r = 0; r < a.n(); ++r)
          for (int c = 0; c < a.n(); ++c) {
            const int sr = r - dy, sc = c - dx;
            if (sr >= 0 && sr < a.n() && sc >= 0 && sc < a.n()) t.at(r, c) = a.at(sr, sc);
          }
        if (t == b) {
          matched = true;
          moved += (dy != 0 || dx != 0);
        }
      }
    }
    EXPECT_TRUE(matched) << i;
  }
  EXPECT_GT(moved, 10);
}

TEST(Dataset, RejectsBadManifests) {
  DatasetManifest m = small_manifest(ChannelKind::diffuser);
  m.symbols = "runes";
  EXPECT_THROW(generate_dataset(m), ConfigError);
  m = small_manifest(ChannelKind::diffuser, 2, 48);
  EXPECT_THROW(generate_dataset(m), ConfigError);
  m = small_manifest(ChannelKind::diffuser);
  m.source = "photos";
  EXPECT_THROW(generate_dataset(m), ConfigError);
}

IdxArray sample_idx(int count, int side) {
  IdxArray a;
  a.dims = {static_cast<std::uint32_t>(count), static_cast<std::uint32_t>(side), static_cast<std::uint32_t>(side)};
  RandomStream rng(7);
  for (int i = 0; i < count * side * side; ++i) a.data.push_back(static_cast<std::uint8_t>(rng.index(256)));
  return a;
}

TEST(Idx, EncodeParseRoundTrip) {
  const IdxArray a = sample_idx(3, 5);
  const auto bytes = encode_idx(a);
  EXPECT_EQ(bytes.size(), 16u + 75u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[2]), 0x08);
  EXPECT_EQ(static_cast<unsigned char>(bytes[3]), 0x03);
  const IdxArray b = parse_idx(bytes);
  EXPECT_EQ(b.dims, a.dims);
  EXPECT_EQ(b.data, a.data);
  expect_prefixes_rejected(bytes, [](std::span<const char> s) { parse_idx(s); });
}

TEST(Idx, ReadsImagesAndLabels) {
  TempDir dir("idx");
  const IdxArray imgs = sample_idx(2, 4);
  IdxArray labels;
  labels.dims = {2};
  labels.data = {3, 9};
  write_bytes(dir / "img", encode_idx(imgs));
  write_bytes(dir / "lab", encode_idx(labels));
  const IdxSamples s = read_idx(dir / "img", dir / "lab");
  ASSERT_EQ(s.images.size(), 2u);
  EXPECT_FLOAT_EQ(s.images[1].at(2, 3), imgs.data[16 + 11] / 255.0f);
  EXPECT_EQ(s.labels, labels.data);
  labels.dims = {3};
  labels.data.push_back(1);
  write_bytes(dir / "lab", encode_idx(labels));
  EXPECT_THROW(read_idx(dir / "img", dir / "lab"), FormatError);
}

TEST(Idx, SourcesAreResizedAndNormalized) {
  TempDir dir("idx");
  const IdxArray imgs = sample_idx(3, 28);
  write_bytes(dir / "img", encode_idx(imgs));
  DatasetManifest m = small_manifest(ChannelKind::mmf, 3);
  m.source = "idx:" + (dir / "img");
  const IdxSamples raw = read_idx(dir / "img");
  std::string id;
  EXPECT_EQ(source_image(m, 2, &id), normalize(resize_bilinear(raw.images[2], 32)));
  EXPECT_EQ(id.rfind("idx:", 0), 0u);
  EXPECT_THROW(source_image(m, 5, nullptr), ConfigError);
}

UNetConfig tiny_config() { return UNetConfig{16, 2, 2, 3}; }

TEST(Checkpoint, RoundTripPreservesPredictionsBitwise) {
  TempDir dir("ckpt");
  const UNetModel<float> model(tiny_config(), 3);
  save_checkpoint(model, dir / "m.ckpt");
  const UNetModel<float> back = load_checkpoint(dir / "m.ckpt", tiny_config());
  RandomStream rng(1);
  Tensor<float> x(Shape{2, 1, 16, 16});
  for (float& v : x.storage()) v = static_cast<float>(rng.uniform());
  EXPECT_EQ(back.predict(x).storage(), model.predict(x).storage());
  EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(model));
}

TEST(Checkpoint, InitializationIsPrecisionIndependent) {
  const UNetModel<float> f(tiny_config(), 8);
  const UNetModel<double> d(tiny_config(), 8);
  ASSERT_EQ(f.params().size(), d.params().size());
  for (std::size_t i = 0; i < f.params().size(); ++i) {
    const auto& pf = f.params()[i].value.storage();
    const auto& pd = d.params()[i].value.storage();
    ASSERT_EQ(pf.size(), pd.size());
    for (std::size_t j = 0; j < pf.size(); ++j) EXPECT_EQ(pf[j], static_cast<float>(pd[j]));
  }
}

TEST(Checkpoint, ArchitectureMismatchNamesFields) {
  const auto bytes = encode_checkpoint(UNetModel<float>(tiny_config(), 1));
  UNetConfig other = tiny_config();
  other.depth = 3;
  other.base_filters = 4;
  try {
    decode_checkpoint(bytes, other);
    FAIL() << "expected ArchitectureMismatch";
  } catch (const ArchitectureMismatch& e) {
    std::set<std::string> names;
    for (const auto& f : e.fields()) names.insert(f.name);
    EXPECT_EQ(names, (std::set<std::string>{"base_filters", "depth"}));
  }
}

TEST(Checkpoint, RejectsCorruption) {
  auto bytes = encode_checkpoint(UNetModel<float>(tiny_config(), 1));
  expect_prefixes_rejected(bytes, [](std::span<const char> b) { decode_checkpoint(b); });
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), FormatError);
  auto bad_magic = bytes;
  bad_magic[3] = '?';
  EXPECT_THROW(decode_checkpoint(bad_magic), FormatError);
  // The first parameter's first dimension follows magic, config and name.
  ByteReader r(bytes);
  r.raw(8, "magic");
  const std::uint32_t cfg = r.u32("cfg");
  r.raw(cfg, "cfg");
  const std::uint32_t name = r.u32("name");
  r.raw(name + 4, "name+rank");
  auto tampered = bytes;
  tampered[r.offset()] ^= 0x40;
  EXPECT_THROW(decode_checkpoint(tampered), FormatError);
}

TEST(Checkpoint, RandomByteFlipsNeverCrash) {
  const auto bytes = encode_checkpoint(UNetModel<float>(UNetConfig{8, 1, 1, 3}, 1));
  RandomStream rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto b = bytes;
    b[rng.index(b.size())] = static_cast<char>(rng.index(256));
    try {
      decode_checkpoint(b);
    } catch (const FormatError&) {
    } catch (const ArchitectureMismatch&) {
    }
  }
}

}  // namespace
}  // namespace descatter
