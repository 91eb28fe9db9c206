// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/idx.hpp"

#include "descatter/bytes.hpp"

namespace descatter {

IdxArray parse_idx(std::span<const char> bytes) {
  ByteReader in(bytes);
  const std::uint32_t magic = in.u32_be("idx magic");
  if (magic != kIdxImagesMagic && magic != kIdxLabelsMagic) {
    throw FormatError("bad idx magic " + std::to_string(magic), 0);
  }
  IdxArray out;
  const std::uint32_t rank = magic & 0xffu;
  std::uint64_t total = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::size_t at = in.offset();
    const std::uint32_t d = in.u32_be("idx dimension");
    total *= d;
    if (total > in.remaining() + 4ull * (rank - i - 1)) {
      throw FormatError("idx dimensions exceed file size", at);
    }
    out.dims.push_back(d);
  }
  const auto raw = in.raw(static_cast<std::size_t>(total), "idx payload");
  out.data.assign(raw.begin(), raw.end());
  return out;
}

IdxArray read_idx_file(const std::string& path) {
  const std::vector<char> bytes = read_file(path);
  return parse_idx(bytes);
}

std::vector<char> encode_idx(const IdxArray& array) {
  std::vector<char> out;
  const std::uint32_t magic = array.dims.size() == 1 ? kIdxLabelsMagic : (0x0800u | static_cast<std::uint32_t>(array.dims.size()));
  auto be = [&](std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  };
  be(magic);
  for (auto d : array.dims) be(d);
  out.insert(out.end(), array.data.begin(), array.data.end());
  return out;
}

IdxSamples read_idx(const std::string& images_path, const std::string& labels_path) {
  const IdxArray imgs = read_idx_file(images_path);
  if (imgs.dims.size() != 3) {
    throw FormatError("idx image file must be 3-D, got rank " + std::to_string(imgs.dims.size()), 3);
  }
  if (imgs.dims[1] != imgs.dims[2] || imgs.dims[1] == 0) {
    throw FormatError("idx images must be square and non-empty", 8);
  }
  IdxSamples out;
  const std::uint32_t count = imgs.dims[0], side = imgs.dims[1];
  const std::size_t per = static_cast<std::size_t>(side) * side;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::vector<float> px(per);
    for (std::size_t j = 0; j < per; ++j) px[j] = static_cast<float>(imgs.data[i * per + j]) / 255.0f;
    out.images.emplace_back(static_cast<int>(side), std::move(px));
  }
  if (!labels_path.empty()) {
    const IdxArray labels = read_idx_file(labels_path);
    if (labels.dims.size() != 1 || labels.dims[0] != count) {
      throw FormatError("idx label file does not match image count", 4);
    }
    out.labels = labels.data;
  }
  return out;
}

}  // namespace descatter
