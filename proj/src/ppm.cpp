// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "lightfuse/ppm.hpp"

#include <limits>

#include "lightfuse/io.hpp"

namespace lightfuse {

namespace {

bool is_space(std::uint8_t b) {
  return b == ' ' || b == '\t' || b == '\n' || b == '\r' || b == '\v' || b == '\f';
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Reads a decimal field followed by exactly one whitespace byte.
  long long number(PpmError::Field field) {
    const char* name = to_string(field);
    if (pos_ >= bytes_.size()) {
      throw PpmError(field, std::string("missing ") + name + " field");
    }
    if (bytes_[pos_] < '0' || bytes_[pos_] > '9') {
      throw PpmError(field, std::string(name) + " field is not a decimal number");
    }
    long long value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > std::numeric_limits<int>::max()) {
        throw PpmError(field, std::string(name) + " field out of range");
      }
      ++pos_;
    }
    separator(field);
    return value;
  }

  void separator(PpmError::Field field) {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw PpmError(field, std::string(to_string(field)) +
                                " field must be followed by a single whitespace byte");
    }
    ++pos_;
    if (pos_ < bytes_.size() && is_space(bytes_[pos_]) && field != PpmError::Field::kMaxval) {
      throw PpmError(field, std::string("extra whitespace after ") + to_string(field) + " field");
    }
  }

  std::size_t position() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

PpmError::PpmError(Field field, const std::string& message)
    : std::runtime_error("ppm " + std::string(to_string(field)) + ": " + message), field_(field) {}

const char* to_string(PpmError::Field field) {
  switch (field) {
    case PpmError::Field::kMagic: return "magic";
    case PpmError::Field::kWidth: return "width";
    case PpmError::Field::kHeight: return "height";
    case PpmError::Field::kMaxval: return "maxval";
    case PpmError::Field::kPayload: return "payload";
  }
  return "unknown";
}

Image8 decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw PpmError(PpmError::Field::kMagic, "expected \"P6\"");
  }
  HeaderReader reader(bytes);
  reader.skip(2);
  reader.separator(PpmError::Field::kMagic);

  const long long width = reader.number(PpmError::Field::kWidth);
  if (width <= 0) throw PpmError(PpmError::Field::kWidth, "width must be positive");
  const long long height = reader.number(PpmError::Field::kHeight);
  if (height <= 0) throw PpmError(PpmError::Field::kHeight, "height must be positive");
  const long long maxval = reader.number(PpmError::Field::kMaxval);
  if (maxval != 255) {
    throw PpmError(PpmError::Field::kMaxval, "maxval must be 255, got " + std::to_string(maxval));
  }

  const std::size_t expected = static_cast<std::size_t>(width) * height * 3;
  const std::size_t available = bytes.size() - reader.position();
  if (available < expected) {
    throw PpmError(PpmError::Field::kPayload, "truncated: expected " + std::to_string(expected) +
                                                  " bytes, found " + std::to_string(available));
  }
  if (available > expected) {
    throw PpmError(PpmError::Field::kPayload, std::to_string(available - expected) +
                                                  " trailing bytes after pixel data");
  }
  auto payload = bytes.subspan(reader.position());
  return Image8(static_cast<int>(height), static_cast<int>(width),
                std::vector<std::uint8_t>(payload.begin(), payload.end()));
}

std::vector<std::uint8_t> encode_ppm(const Image8& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out;
  out.reserve(header.size() + img.data.size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

Image8 read_ppm(const std::filesystem::path& path) { return decode_ppm(read_bytes(path)); }

void write_ppm(const std::filesystem::path& path, const Image8& img) {
  write_bytes(path, encode_ppm(img));
}

}  // namespace lightfuse
