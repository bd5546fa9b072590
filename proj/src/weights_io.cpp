// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "lightfuse/weights_io.hpp"

#include <bit>
#include <cstring>
#include <map>

#include "lightfuse/io.hpp"

namespace lightfuse {

namespace {

constexpr std::uint8_t kMagic[4] = {'L', 'F', 'W', '1'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  // `what` names the tensor being read so truncation errors point at it.
  void need(std::size_t n, const std::string& what) const {
    if (in_.size() - pos_ < n) {
      throw WeightError(WeightError::Kind::kTruncated, what,
                        "file truncated: needed " + std::to_string(n) + " more bytes at offset " +
                            std::to_string(pos_));
    }
  }
  std::uint8_t u8(const std::string& what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint16_t u16(const std::string& what) {
    need(2, what);
    std::uint16_t v = in_[pos_] | (in_[pos_ + 1] << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const std::string& what) { return std::bit_cast<float>(u32(what)); }
  std::string str(std::size_t n, const std::string& what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> save_weights(const WeightStore& w, const ModelGraph& graph) {
  w.validate(graph);
  const auto specs = parameter_specs(graph);
  Writer out;
  out.raw(kMagic);
  out.u32(static_cast<std::uint32_t>(specs.size()));
  for (const auto& spec : specs) {
    const Parameter& p = w.at(spec.name);
    out.u16(static_cast<std::uint16_t>(spec.name.size()));
    out.raw({reinterpret_cast<const std::uint8_t*>(spec.name.data()), spec.name.size()});
    out.u8(static_cast<std::uint8_t>(p.dims.size()));
    for (auto d : p.dims) out.u32(d);
    for (float v : p.values) out.f32(v);
  }
  return out.take();
}

WeightStore load_weights(std::span<const std::uint8_t> bytes, const ModelGraph& graph) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw WeightError(WeightError::Kind::kBadMagic, "", "bad magic: not an LFW1 weight file");
  }
  std::map<std::string, std::vector<std::uint32_t>> expected;
  for (const auto& spec : parameter_specs(graph)) expected[spec.name] = spec.dims;

  Reader in(bytes.subspan(4));
  const std::uint32_t count = in.u32("<header>");
  WeightStore store;
  std::string previous = "<header>";
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string context = "<after " + previous + ">";
    const std::uint16_t name_len = in.u16(context);
    const std::string name = in.str(name_len, context);
    if (!expected.count(name)) {
      throw WeightError(WeightError::Kind::kUnexpectedParameter, name,
                        "not a parameter of graph '" + graph.name + "'");
    }
    if (store.contains(name)) {
      throw WeightError(WeightError::Kind::kDuplicateParameter, name, "tensor appears twice");
    }
    const std::uint8_t ndim = in.u8(name);
    Parameter p;
    std::size_t elements = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      p.dims.push_back(in.u32(name));
      elements *= p.dims.back();
    }
    if (p.dims != expected[name]) {
      throw WeightError(WeightError::Kind::kShapeMismatch, name,
                        "stored shape does not match the graph");
    }
    in.need(elements * 4, name);
    p.values.resize(elements);
    for (float& v : p.values) v = in.f32(name);
    store.set(name, std::move(p));
    previous = name;
  }
  if (in.remaining() != 0) {
    throw WeightError(WeightError::Kind::kTrailingData, previous,
                      std::to_string(in.remaining()) + " trailing bytes after last tensor");
  }
  for (const auto& [name, dims] : expected) {
    if (!store.contains(name)) {
      throw WeightError(WeightError::Kind::kMissingParameter, name, "missing parameter");
    }
  }
  return store;
}

void write_weights_file(const std::filesystem::path& path, const WeightStore& w,
                        const ModelGraph& graph) {
  write_bytes(path, save_weights(w, graph));
}

WeightStore read_weights_file(const std::filesystem::path& path, const ModelGraph& graph) {
  return load_weights(read_bytes(path), graph);
}

}  // namespace lightfuse
