// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lightfuse/tensor.hpp"

namespace lightfuse {

/// Binary PPM (P6) codec. Only the canonical 8-bit form is accepted:
///   "P6" <ws> width <ws> height <ws> "255" <ws> payload
/// with exactly one whitespace byte between header fields and no comments.
class PpmError : public std::runtime_error {
 public:
  enum class Field { kMagic, kWidth, kHeight, kMaxval, kPayload };

  PpmError(Field field, const std::string& message);
  Field field() const { return field_; }

 private:
  Field field_;
};

const char* to_string(PpmError::Field field);

Image8 decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Image8& img);

Image8 read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image8& img);

}  // namespace lightfuse
