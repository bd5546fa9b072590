// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lightfuse/ops.hpp"
#include "lightfuse/tensor.hpp"

namespace lightfuse {

enum class LayerKind { kDepthwise, kPointwise, kSeparable, kUpsample, kRelu, kTanh, kAdd };

const char* to_string(LayerKind kind);

/// One node of a branch. A separable layer is a bias-free depthwise stage
/// followed by a biased pointwise stage, so it owns exactly one bias vector.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kRelu;
  int k = 1;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  bool bias = true;  // only consulted for depthwise layers

  bool has_parameters() const {
    return kind == LayerKind::kDepthwise || kind == LayerKind::kPointwise ||
           kind == LayerKind::kSeparable;
  }
};

struct Branch {
  std::string name;
  std::vector<LayerSpec> layers;
};

/// Input channels are two RGB exposures, underexposed first.
struct ModelGraph {
  std::string name;
  int input_channels = 6;
  std::vector<Branch> branches;
  std::vector<LayerSpec> merge;

  /// Spatial dims of the input must be multiples of this.
  int spatial_divisor() const;
};

struct LightFuseOptions {
  /// ReLU after the two stride-2 depthwise encoder layers of the global branch.
  bool encoder_relu = true;
  /// ReLU after the third (separable) encoder layer as well. Off by default:
  /// both branches would then be non-negative and the output confined to [0, 1).
  bool final_encoder_relu = false;
};

ModelGraph build_lightfuse(const LightFuseOptions& options = {});
ModelGraph build_tcnn();

/// One named parameter tensor a graph expects.
struct ParamSpec {
  std::string name;
  std::vector<std::uint32_t> dims;
  int fan_in = 1;
  bool is_bias = false;
};

std::vector<ParamSpec> parameter_specs(const LayerSpec& layer);
std::vector<ParamSpec> parameter_specs(const ModelGraph& graph);

/// Problems with a weight store or weight file, always tied to one tensor
/// (except kBadMagic).
class WeightError : public std::runtime_error {
 public:
  enum class Kind {
    kBadMagic,
    kTruncated,
    kShapeMismatch,
    kMissingParameter,
    kUnexpectedParameter,
    kDuplicateParameter,
    kTrailingData,
  };

  WeightError(Kind kind, std::string tensor, const std::string& message);
  Kind kind() const { return kind_; }
  const std::string& tensor() const { return tensor_; }

 private:
  Kind kind_;
  std::string tensor_;
};

struct Parameter {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  bool operator==(const Parameter&) const = default;
};

class WeightStore {
 public:
  const Parameter& at(const std::string& name) const;
  Parameter& at(const std::string& name);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  void set(const std::string& name, Parameter p) { params_[name] = std::move(p); }

  std::size_t tensor_count() const { return params_.size(); }
  std::size_t element_count() const;
  const std::map<std::string, Parameter>& entries() const { return params_; }
  std::map<std::string, Parameter>& entries() { return params_; }

  /// Throws WeightError when a tensor is missing, unexpected, or misshapen.
  void validate(const ModelGraph& graph) const;

  bool operator==(const WeightStore&) const = default;

 private:
  std::map<std::string, Parameter> params_;
};

/// Fan-in scaled uniform init: weights in +-sqrt(6 / fan_in), biases zero.
WeightStore init_weights(const ModelGraph& graph, std::uint64_t seed);

/// Same names and shapes as `graph`, every value zero.
WeightStore zero_weights(const ModelGraph& graph);

DepthwiseKernel depthwise_kernel(const LayerSpec& layer, const WeightStore& w);
PointwiseKernel pointwise_kernel(const LayerSpec& layer, const WeightStore& w);

Shape layer_output_shape(const LayerSpec& layer, const Shape& in);

Tensor run_branch(const Branch& branch, const WeightStore& w, const Tensor& input);

/// Applies the merge stage to per-branch outputs.
Tensor run_merge(const ModelGraph& graph, const std::vector<Tensor>& branch_outputs);

/// Checks both exposures against the graph and returns their 6-channel concatenation.
Tensor prepare_input(const ModelGraph& graph, const Tensor& under, const Tensor& over);

Tensor forward(const ModelGraph& graph, const WeightStore& w, const Tensor& under,
               const Tensor& over);

/// forward() on a prepared 6-channel input, evaluated in double. Only used as
/// the finite-difference reference when checking gradients. If `relu_mask` is
/// given it receives, in evaluation order, whether each ReLU input was positive.
Tensor64 forward_reference(const ModelGraph& graph, const WeightStore& w, const Tensor64& input,
                           std::vector<bool>* relu_mask = nullptr);

/// Activations kept for backpropagation.
struct ForwardTrace {
  struct LayerRecord {
    Tensor input;
    Tensor mid;  // depthwise result inside a separable layer
    Tensor output;
  };
  Tensor input;
  std::vector<std::vector<LayerRecord>> branches;
  std::vector<LayerRecord> merge;
  Tensor output;
};

ForwardTrace forward_trace(const ModelGraph& graph, const WeightStore& w, const Tensor& input);

/// Gradient of a scalar loss w.r.t. every parameter, given dLoss/dOutput.
WeightStore backward(const ModelGraph& graph, const WeightStore& w, const ForwardTrace& trace,
                     const Tensor& output_grad);

}  // namespace lightfuse
