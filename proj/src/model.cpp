// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "lightfuse/model.hpp"

#include <cmath>
#include <set>

#include "lightfuse/random.hpp"

namespace lightfuse {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDepthwise: return "depthwise";
    case LayerKind::kPointwise: return "pointwise";
    case LayerKind::kSeparable: return "separable";
    case LayerKind::kUpsample: return "upsample_nn";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kTanh: return "tanh";
    case LayerKind::kAdd: return "add";
  }
  return "unknown";
}

namespace {

LayerSpec depthwise(std::string name, int channels, int stride) {
  return {std::move(name), LayerKind::kDepthwise, 3, channels, channels, stride, true};
}
LayerSpec separable(std::string name, int in, int out, int stride) {
  return {std::move(name), LayerKind::kSeparable, 3, in, out, stride, false};
}
LayerSpec pointwise(std::string name, int in, int out) {
  return {std::move(name), LayerKind::kPointwise, 1, in, out, 1, true};
}
LayerSpec unary(std::string name, LayerKind kind, int channels) {
  return {std::move(name), kind, 1, channels, channels, 1, false};
}

}  // namespace

int ModelGraph::spatial_divisor() const {
  int divisor = 1;
  for (const auto& b : branches) {
    int product = 1;
    for (const auto& l : b.layers) {
      if (l.kind == LayerKind::kDepthwise || l.kind == LayerKind::kSeparable) product *= l.stride;
    }
    divisor = std::max(divisor, product);
  }
  return divisor;
}

ModelGraph build_lightfuse(const LightFuseOptions& options) {
  ModelGraph g;
  g.name = "lightfuse";
  g.input_channels = 6;

  Branch global{"global", {}};
  global.layers.push_back(depthwise("global.dconv1", 6, 2));
  if (options.encoder_relu) global.layers.push_back(unary("global.relu1", LayerKind::kRelu, 6));
  global.layers.push_back(depthwise("global.dconv2", 6, 2));
  if (options.encoder_relu) global.layers.push_back(unary("global.relu2", LayerKind::kRelu, 6));
  // Linear output: with the detail branch ending in ReLU, this is the only
  // source of negative values before the tanh.
  global.layers.push_back(separable("global.dsconv3", 6, 3, 2));
  if (options.final_encoder_relu) {
    global.layers.push_back(unary("global.relu3", LayerKind::kRelu, 3));
  }
  for (int i = 1; i <= 3; ++i) {
    global.layers.push_back(unary("global.up" + std::to_string(i), LayerKind::kUpsample, 3));
  }

  Branch detail{"detail", {}};
  detail.layers.push_back(pointwise("detail.pconv1", 6, 32));
  detail.layers.push_back(unary("detail.relu1", LayerKind::kRelu, 32));
  detail.layers.push_back(pointwise("detail.pconv2", 32, 32));
  detail.layers.push_back(unary("detail.relu2", LayerKind::kRelu, 32));
  detail.layers.push_back(pointwise("detail.pconv3", 32, 3));
  detail.layers.push_back(unary("detail.relu3", LayerKind::kRelu, 3));

  g.branches = {std::move(global), std::move(detail)};
  g.merge = {unary("merge.add", LayerKind::kAdd, 3), unary("merge.tanh", LayerKind::kTanh, 3)};
  return g;
}

ModelGraph build_tcnn() {
  ModelGraph g;
  g.name = "tcnn";
  g.input_channels = 6;
  Branch b{"tcnn", {}};
  b.layers.push_back(separable("tcnn.dsconv1", 6, 32, 1));
  b.layers.push_back(unary("tcnn.relu1", LayerKind::kRelu, 32));
  b.layers.push_back(separable("tcnn.dsconv2", 32, 32, 1));
  b.layers.push_back(unary("tcnn.relu2", LayerKind::kRelu, 32));
  b.layers.push_back(separable("tcnn.dsconv3", 32, 3, 1));
  g.branches = {std::move(b)};
  g.merge = {unary("merge.tanh", LayerKind::kTanh, 3)};
  return g;
}

std::vector<ParamSpec> parameter_specs(const LayerSpec& l) {
  const auto k = static_cast<std::uint32_t>(l.k);
  const auto in = static_cast<std::uint32_t>(l.in_channels);
  const auto out = static_cast<std::uint32_t>(l.out_channels);
  switch (l.kind) {
    case LayerKind::kDepthwise: {
      std::vector<ParamSpec> p{{l.name + ".weights", {k, k, in}, l.k * l.k, false}};
      if (l.bias) p.push_back({l.name + ".bias", {in}, 1, true});
      return p;
    }
    case LayerKind::kPointwise:
      return {{l.name + ".weights", {in, out}, l.in_channels, false},
              {l.name + ".bias", {out}, 1, true}};
    case LayerKind::kSeparable:
      return {{l.name + ".depthwise", {k, k, in}, l.k * l.k, false},
              {l.name + ".pointwise", {in, out}, l.in_channels, false},
              {l.name + ".bias", {out}, 1, true}};
    default:
      return {};
  }
}

std::vector<ParamSpec> parameter_specs(const ModelGraph& graph) {
  std::vector<ParamSpec> all;
  for (const auto& b : graph.branches) {
    for (const auto& l : b.layers) {
      auto p = parameter_specs(l);
      all.insert(all.end(), p.begin(), p.end());
    }
  }
  return all;
}

WeightError::WeightError(Kind kind, std::string tensor, const std::string& message)
    : std::runtime_error(tensor.empty() ? message : "tensor '" + tensor + "': " + message),
      kind_(kind),
      tensor_(std::move(tensor)) {}

const Parameter& WeightStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw WeightError(WeightError::Kind::kMissingParameter, name, "missing parameter");
  }
  return it->second;
}

Parameter& WeightStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw WeightError(WeightError::Kind::kMissingParameter, name, "missing parameter");
  }
  return it->second;
}

std::size_t WeightStore::element_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.values.size();
  return n;
}

namespace {

std::string dims_string(const std::vector<std::uint32_t>& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims[i]);
  }
  return s + ")";
}

std::size_t dims_product(const std::vector<std::uint32_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace

void WeightStore::validate(const ModelGraph& graph) const {
  std::set<std::string> expected;
  for (const auto& spec : parameter_specs(graph)) {
    expected.insert(spec.name);
    const Parameter& p = at(spec.name);
    if (p.dims != spec.dims || p.values.size() != dims_product(spec.dims)) {
      throw WeightError(WeightError::Kind::kShapeMismatch, spec.name,
                        "shape " + dims_string(p.dims) + " does not match expected " +
                            dims_string(spec.dims));
    }
  }
  for (const auto& [name, p] : params_) {
    if (!expected.count(name)) {
      throw WeightError(WeightError::Kind::kUnexpectedParameter, name,
                        "not a parameter of graph '" + graph.name + "'");
    }
  }
}

WeightStore init_weights(const ModelGraph& graph, std::uint64_t seed) {
  Rng rng(seed);
  WeightStore store;
  for (const auto& spec : parameter_specs(graph)) {
    Parameter p{spec.dims, std::vector<float>(dims_product(spec.dims), 0.0f)};
    if (!spec.is_bias) {
      const double bound = std::sqrt(6.0 / spec.fan_in);
      for (float& v : p.values) v = static_cast<float>(rng.uniform(-bound, bound));
    }
    store.set(spec.name, std::move(p));
  }
  return store;
}

WeightStore zero_weights(const ModelGraph& graph) {
  WeightStore store;
  for (const auto& spec : parameter_specs(graph)) {
    store.set(spec.name, {spec.dims, std::vector<float>(dims_product(spec.dims), 0.0f)});
  }
  return store;
}

DepthwiseKernel depthwise_kernel(const LayerSpec& l, const WeightStore& w) {
  DepthwiseKernel k;
  k.k = l.k;
  k.channels = l.in_channels;
  k.stride = l.stride;
  if (l.kind == LayerKind::kSeparable) {
    k.weights = w.at(l.name + ".depthwise").values;
  } else {
    k.weights = w.at(l.name + ".weights").values;
    if (l.bias) k.bias = w.at(l.name + ".bias").values;
  }
  return k;
}

PointwiseKernel pointwise_kernel(const LayerSpec& l, const WeightStore& w) {
  PointwiseKernel k;
  k.in_channels = l.in_channels;
  k.out_channels = l.out_channels;
  k.weights = w.at(l.name + (l.kind == LayerKind::kSeparable ? ".pointwise" : ".weights")).values;
  k.bias = w.at(l.name + ".bias").values;
  return k;
}

Shape layer_output_shape(const LayerSpec& l, const Shape& in) {
  switch (l.kind) {
    case LayerKind::kDepthwise:
    case LayerKind::kSeparable:
      return {(in.height + l.stride - 1) / l.stride, (in.width + l.stride - 1) / l.stride,
              l.out_channels};
    case LayerKind::kPointwise: return {in.height, in.width, l.out_channels};
    case LayerKind::kUpsample: return {in.height * 2, in.width * 2, in.channels};
    default: return in;
  }
}

namespace {

ForwardTrace::LayerRecord run_layer(const LayerSpec& l, const WeightStore& w, Tensor input) {
  if (input.channels() != l.in_channels) {
    throw ShapeError("layer " + l.name + " expects " + std::to_string(l.in_channels) +
                     " channels, got " + to_string(input.shape()));
  }
  ForwardTrace::LayerRecord rec;
  switch (l.kind) {
    case LayerKind::kDepthwise:
      rec.output = depthwise_forward(input, depthwise_kernel(l, w));
      break;
    case LayerKind::kPointwise:
      rec.output = pointwise_forward(input, pointwise_kernel(l, w));
      break;
    case LayerKind::kSeparable:
      rec.mid = depthwise_forward(input, depthwise_kernel(l, w));
      rec.output = pointwise_forward(rec.mid, pointwise_kernel(l, w));
      break;
    case LayerKind::kUpsample: rec.output = upsample_nn(input); break;
    case LayerKind::kRelu: rec.output = relu(input); break;
    case LayerKind::kTanh: rec.output = lightfuse::tanh(input); break;
    case LayerKind::kAdd: throw ShapeError("add is only valid in the merge stage");
  }
  const Shape expected = layer_output_shape(l, input.shape());
  if (rec.output.shape() != expected) {
    throw ShapeError("layer " + l.name + " produced " + to_string(rec.output.shape()) +
                     ", expected " + to_string(expected));
  }
  rec.input = std::move(input);
  return rec;
}

std::vector<ForwardTrace::LayerRecord> run_branch_traced(const Branch& branch,
                                                         const WeightStore& w,
                                                         const Tensor& input) {
  std::vector<ForwardTrace::LayerRecord> records;
  records.reserve(branch.layers.size());
  Tensor current = input;
  for (const auto& l : branch.layers) {
    records.push_back(run_layer(l, w, std::move(current)));
    current = records.back().output;
  }
  if (current.height() != input.height() || current.width() != input.width()) {
    throw ShapeError("branch " + branch.name + " ends at " + to_string(current.shape()) +
                     " but its input was " + to_string(input.shape()));
  }
  return records;
}

std::vector<ForwardTrace::LayerRecord> run_merge_traced(const ModelGraph& graph,
                                                        const std::vector<Tensor>& outputs) {
  if (outputs.size() != graph.branches.size() || outputs.empty()) {
    throw ShapeError("merge: expected one output per branch");
  }
  std::vector<ForwardTrace::LayerRecord> records;
  std::size_t start = 0;
  Tensor current;
  if (!graph.merge.empty() && graph.merge.front().kind == LayerKind::kAdd) {
    current = outputs.front();
    for (std::size_t b = 1; b < outputs.size(); ++b) current = add(current, outputs[b]);
    records.push_back({Tensor(), Tensor(), current});
    start = 1;
  } else {
    if (outputs.size() != 1) throw ShapeError("merge: multiple branches need an add");
    current = outputs.front();
  }
  for (std::size_t i = start; i < graph.merge.size(); ++i) {
    records.push_back(run_layer(graph.merge[i], WeightStore{}, std::move(current)));
    current = records.back().output;
  }
  return records;
}

}  // namespace

Tensor run_branch(const Branch& branch, const WeightStore& w, const Tensor& input) {
  Tensor current = input;
  for (const auto& l : branch.layers) current = run_layer(l, w, std::move(current)).output;
  if (current.height() != input.height() || current.width() != input.width()) {
    throw ShapeError("branch " + branch.name + " ends at " + to_string(current.shape()) +
                     " but its input was " + to_string(input.shape()));
  }
  return current;
}

Tensor run_merge(const ModelGraph& graph, const std::vector<Tensor>& branch_outputs) {
  auto records = run_merge_traced(graph, branch_outputs);
  return records.empty() ? branch_outputs.front() : records.back().output;
}

Tensor prepare_input(const ModelGraph& graph, const Tensor& under, const Tensor& over) {
  if (under.channels() != 3 || over.channels() != 3) {
    throw ShapeError("exposures must have 3 channels");
  }
  if (under.shape() != over.shape()) {
    throw ShapeError("exposure dims differ: " + to_string(under.shape()) + " vs " +
                     to_string(over.shape()));
  }
  const int d = graph.spatial_divisor();
  if (under.height() % d != 0 || under.width() % d != 0) {
    throw ShapeError("input dims " + std::to_string(under.height()) + "x" +
                     std::to_string(under.width()) + " must be divisible by " +
                     std::to_string(d));
  }
  return concat_channels(under, over);
}

Tensor forward(const ModelGraph& graph, const WeightStore& w, const Tensor& under,
               const Tensor& over) {
  const Tensor input = prepare_input(graph, under, over);
  std::vector<Tensor> outputs;
  outputs.reserve(graph.branches.size());
  for (const auto& b : graph.branches) outputs.push_back(run_branch(b, w, input));
  return run_merge(graph, outputs);
}

Tensor64 forward_reference(const ModelGraph& graph, const WeightStore& w, const Tensor64& input,
                           std::vector<bool>* relu_mask) {
  if (relu_mask) relu_mask->clear();
  auto apply = [&](const LayerSpec& l, const Tensor64& x) -> Tensor64 {
    switch (l.kind) {
      case LayerKind::kDepthwise: return depthwise_forward(x, depthwise_kernel(l, w));
      case LayerKind::kPointwise: return pointwise_forward(x, pointwise_kernel(l, w));
      case LayerKind::kSeparable:
        return pointwise_forward(depthwise_forward(x, depthwise_kernel(l, w)), pointwise_kernel(l, w));
      case LayerKind::kUpsample: return upsample_nn(x);
      case LayerKind::kRelu:
        if (relu_mask) {
          for (double v : x.data()) relu_mask->push_back(v > 0.0);
        }
        return relu(x);
      case LayerKind::kTanh: return lightfuse::tanh(x);
      case LayerKind::kAdd: break;
    }
    throw ShapeError("add is only valid in the merge stage");
  };
  std::vector<Tensor64> outputs;
  for (const auto& b : graph.branches) {
    Tensor64 current = input;
    for (const auto& l : b.layers) current = apply(l, current);
    outputs.push_back(std::move(current));
  }
  Tensor64 current = outputs.front();
  std::size_t start = 0;
  if (!graph.merge.empty() && graph.merge.front().kind == LayerKind::kAdd) {
    for (std::size_t i = 1; i < outputs.size(); ++i) current = add(current, outputs[i]);
    start = 1;
  }
  for (std::size_t i = start; i < graph.merge.size(); ++i) current = apply(graph.merge[i], current);
  return current;
}

ForwardTrace forward_trace(const ModelGraph& graph, const WeightStore& w, const Tensor& input) {
  if (input.channels() != graph.input_channels) {
    throw ShapeError("model input must have " + std::to_string(graph.input_channels) +
                     " channels, got " + to_string(input.shape()));
  }
  ForwardTrace t;
  t.input = input;
  std::vector<Tensor> outputs;
  for (const auto& b : graph.branches) {
    t.branches.push_back(run_branch_traced(b, w, input));
    outputs.push_back(t.branches.back().empty() ? input : t.branches.back().back().output);
  }
  t.merge = run_merge_traced(graph, outputs);
  t.output = t.merge.empty() ? outputs.front() : t.merge.back().output;
  return t;
}

namespace {

void accumulate(WeightStore& grads, const std::string& name, const std::vector<float>& g) {
  auto& dst = grads.at(name).values;
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

Tensor layer_backward(const LayerSpec& l, const WeightStore& w,
                      const ForwardTrace::LayerRecord& rec, const Tensor& g, WeightStore& grads) {
  switch (l.kind) {
    case LayerKind::kDepthwise: {
      auto r = depthwise_backward(rec.input, depthwise_kernel(l, w), g);
      accumulate(grads, l.name + ".weights", r.weights);
      if (l.bias) accumulate(grads, l.name + ".bias", r.bias);
      return std::move(r.input);
    }
    case LayerKind::kPointwise: {
      auto r = pointwise_backward(rec.input, pointwise_kernel(l, w), g);
      accumulate(grads, l.name + ".weights", r.weights);
      accumulate(grads, l.name + ".bias", r.bias);
      return std::move(r.input);
    }
    case LayerKind::kSeparable: {
      auto pw = pointwise_backward(rec.mid, pointwise_kernel(l, w), g);
      accumulate(grads, l.name + ".pointwise", pw.weights);
      accumulate(grads, l.name + ".bias", pw.bias);
      auto dw = depthwise_backward(rec.input, depthwise_kernel(l, w), pw.input);
      accumulate(grads, l.name + ".depthwise", dw.weights);
      return std::move(dw.input);
    }
    case LayerKind::kUpsample: return upsample_nn_backward(rec.input, g);
    case LayerKind::kRelu: return relu_backward(rec.input, g);
    case LayerKind::kTanh: return tanh_backward(rec.output, g);
    case LayerKind::kAdd: return g;
  }
  return g;
}

}  // namespace

WeightStore backward(const ModelGraph& graph, const WeightStore& w, const ForwardTrace& trace,
                     const Tensor& output_grad) {
  if (output_grad.shape() != trace.output.shape()) {
    throw ShapeError("output gradient " + to_string(output_grad.shape()) +
                     " does not match output " + to_string(trace.output.shape()));
  }
  WeightStore grads = zero_weights(graph);
  Tensor g = output_grad;
  // Walk the merge stage back to the add, which hands g unchanged to every branch.
  for (std::size_t i = graph.merge.size(); i-- > 0;) {
    if (graph.merge[i].kind == LayerKind::kAdd) break;
    g = layer_backward(graph.merge[i], w, trace.merge[i], g, grads);
  }
  for (std::size_t b = 0; b < graph.branches.size(); ++b) {
    const auto& layers = graph.branches[b].layers;
    Tensor gb = g;
    for (std::size_t i = layers.size(); i-- > 0;) {
      gb = layer_backward(layers[i], w, trace.branches[b][i], gb, grads);
    }
  }
  return grads;
}

}  // namespace lightfuse
