// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WEAKPRIOR_IO_HPP
#define WEAKPRIOR_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "weakprior/core.hpp"

namespace weakprior::io {

// Binary formats. All integers are u32 little-endian, all payload values
// IEEE-754 float32 little-endian. Values are rounded to float32 on write.
//
//   WPL1 image : "WPL1" height width channels reserved(=0) | h*w*c floats
//   WPV1 vector: "WPV1" length                             | length floats
//
// A vector file may hold several WPV1 records back to back.

inline constexpr std::size_t kImageHeaderBytes = 20;
inline constexpr std::size_t kVectorHeaderBytes = 8;

std::vector<std::uint8_t> encode_image(const ImageGrid& grid);
ImageGrid decode_image(const std::vector<std::uint8_t>& bytes, ValueRange range = {});

std::vector<std::uint8_t> encode_vector(const Vec64& v);
/// Decodes every WPV1 record in `bytes` in order.
std::vector<Vec64> decode_vectors(const std::vector<std::uint8_t>& bytes);

void save_image(const std::filesystem::path& path, const ImageGrid& grid);
ImageGrid load_image(const std::filesystem::path& path, ValueRange range = {});

void save_vector(const std::filesystem::path& path, const Vec64& v);
void save_vectors(const std::filesystem::path& path, const std::vector<Vec64>& vs);
Vec64 load_vector(const std::filesystem::path& path);
std::vector<Vec64> load_vectors(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace weakprior::io

#endif  // WEAKPRIOR_IO_HPP
