// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

// LFW1 weight files, all integers little-endian:
//
//   "LFW1"                         4-byte magic
//   u32 tensor count
//   per tensor:
//     u16 name length, UTF-8 name
//     u8 ndim, ndim x u32 dims
//     product(dims) x f32, row-major
//
// Dim order: depthwise (k, k, channels), pointwise (in, out), bias (channels).

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lightfuse/model.hpp"

namespace lightfuse {

/// Serializes tensors in the graph's parameter order. The store must validate
/// against `graph`.
std::vector<std::uint8_t> save_weights(const WeightStore& w, const ModelGraph& graph);

/// Parses and validates every tensor against `graph`. Errors are WeightError
/// values naming the offending tensor.
WeightStore load_weights(std::span<const std::uint8_t> bytes, const ModelGraph& graph);

void write_weights_file(const std::filesystem::path& path, const WeightStore& w,
                        const ModelGraph& graph);
WeightStore read_weights_file(const std::filesystem::path& path, const ModelGraph& graph);

}  // namespace lightfuse
