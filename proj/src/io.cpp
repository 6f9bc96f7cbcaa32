// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "weakprior/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace weakprior::io {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

double get_f32(const std::vector<std::uint8_t>& in, std::size_t at) {
  return static_cast<double>(std::bit_cast<float>(get_u32(in, at)));
}

void check_magic(const std::vector<std::uint8_t>& in, std::size_t at, const char* magic) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (at + i >= in.size() || in[at + i] != static_cast<std::uint8_t>(magic[i])) {
      throw FormatError(std::string("bad magic, expected \"") + magic + "\"", at + i);
    }
  }
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFULL) throw InvalidArgument(std::string(what) + " exceeds u32 range");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_image(const ImageGrid& grid) {
  const auto& s = grid.shape();
  std::vector<std::uint8_t> out;
  out.reserve(kImageHeaderBytes + 4 * s.size());
  out.insert(out.end(), {'W', 'P', 'L', '1'});
  put_u32(out, checked_u32(s.height, "height"));
  put_u32(out, checked_u32(s.width, "width"));
  put_u32(out, checked_u32(s.channels, "channels"));
  put_u32(out, 0);
  for (double p : grid.pixels().span()) put_f32(out, p);
  return out;
}

ImageGrid decode_image(const std::vector<std::uint8_t>& bytes, ValueRange range) {
  if (bytes.size() < kImageHeaderBytes) {
    throw FormatError("WPL1 header truncated: need " + std::to_string(kImageHeaderBytes) +
                          " bytes, have " + std::to_string(bytes.size()),
                      bytes.size());
  }
  check_magic(bytes, 0, "WPL1");
  const std::size_t h = get_u32(bytes, 4);
  const std::size_t w = get_u32(bytes, 8);
  const std::size_t c = get_u32(bytes, 12);
  if (h == 0) throw FormatError("WPL1 height is zero", 4);
  if (w == 0) throw FormatError("WPL1 width is zero", 8);
  if (c == 0) throw FormatError("WPL1 channel count is zero", 12);
  if (get_u32(bytes, 16) != 0) throw FormatError("WPL1 reserved field is nonzero", 16);
  const std::size_t count = h * w * c;
  const std::size_t expected = 4 * count;
  const std::size_t actual = bytes.size() - kImageHeaderBytes;
  if (actual != expected) {
    throw FormatError("WPL1 payload length mismatch: expected " + std::to_string(expected) +
                          " bytes, actual " + std::to_string(actual),
                      kImageHeaderBytes);
  }
  Vector px(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) px[static_cast<Eigen::Index>(i)] = get_f32(bytes, kImageHeaderBytes + 4 * i);
  return ImageGrid({h, w, c}, Vec64(std::move(px)), range);
}

std::vector<std::uint8_t> encode_vector(const Vec64& v) {
  std::vector<std::uint8_t> out;
  out.reserve(kVectorHeaderBytes + 4 * v.size());
  out.insert(out.end(), {'W', 'P', 'V', '1'});
  put_u32(out, checked_u32(v.size(), "vector length"));
  for (double x : v.span()) put_f32(out, x);
  return out;
}

std::vector<Vec64> decode_vectors(const std::vector<std::uint8_t>& bytes) {
  std::vector<Vec64> out;
  std::size_t at = 0;
  if (bytes.empty()) throw FormatError("WPV1 file is empty", 0);
  while (at < bytes.size()) {
    if (bytes.size() - at < kVectorHeaderBytes) {
      throw FormatError("WPV1 header truncated: need " + std::to_string(kVectorHeaderBytes) +
                            " bytes, have " + std::to_string(bytes.size() - at),
                        at);
    }
    check_magic(bytes, at, "WPV1");
    const std::size_t len = get_u32(bytes, at + 4);
    if (len == 0) throw FormatError("WPV1 length is zero", at + 4);
    const std::size_t payload_at = at + kVectorHeaderBytes;
    const std::size_t expected = 4 * len;
    const std::size_t available = bytes.size() - payload_at;
    if (available < expected) {
      throw FormatError("WPV1 payload length mismatch: expected " + std::to_string(expected) +
                            " bytes, actual " + std::to_string(available),
                        payload_at);
    }
    Vector v(static_cast<Eigen::Index>(len));
    for (std::size_t i = 0; i < len; ++i) v[static_cast<Eigen::Index>(i)] = get_f32(bytes, payload_at + 4 * i);
    out.emplace_back(std::move(v));
    at = payload_at + expected;
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for reading: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void save_image(const std::filesystem::path& path, const ImageGrid& grid) { write_file(path, encode_image(grid)); }

ImageGrid load_image(const std::filesystem::path& path, ValueRange range) {
  return decode_image(read_file(path), range);
}

void save_vector(const std::filesystem::path& path, const Vec64& v) { write_file(path, encode_vector(v)); }

void save_vectors(const std::filesystem::path& path, const std::vector<Vec64>& vs) {
  std::vector<std::uint8_t> out;
  for (const auto& v : vs) {
    auto rec = encode_vector(v);
    out.insert(out.end(), rec.begin(), rec.end());
  }
  write_file(path, out);
}

Vec64 load_vector(const std::filesystem::path& path) {
  auto all = decode_vectors(read_file(path));
  if (all.size() != 1) {
    throw FormatError("expected a single WPV1 record, found " + std::to_string(all.size()), 0);
  }
  return std::move(all.front());
}

std::vector<Vec64> load_vectors(const std::filesystem::path& path) { return decode_vectors(read_file(path)); }

}  // namespace weakprior::io
