// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "lightfuse/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "lightfuse/grad_check.hpp"
#include "lightfuse/random.hpp"

namespace lightfuse {

namespace {

void check_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

DepthwiseKernel random_depthwise(Rng& rng, int channels) {
  DepthwiseKernel k{3, channels, 1, std::vector<float>(9 * channels), {}};
  const double bound = std::sqrt(6.0 / 9.0);
  for (float& v : k.weights) v = static_cast<float>(rng.uniform(-bound, bound));
  return k;
}

PointwiseKernel random_pointwise(Rng& rng, int in, int out) {
  PointwiseKernel k{in, out, std::vector<float>(static_cast<std::size_t>(in) * out), {}};
  const double bound = std::sqrt(6.0 / in);
  for (float& v : k.weights) v = static_cast<float>(rng.uniform(-bound, bound));
  return k;
}

}  // namespace

Tensor IdentityExtractor::backward(const Tensor& x, const std::vector<Tensor>& feature_grads) const {
  if (feature_grads.size() != 1) throw ShapeError("identity extractor has exactly one stage");
  check_same(x, feature_grads.front(), "identity extractor backward");
  return feature_grads.front();
}

RandomConvExtractor::RandomConvExtractor(std::uint64_t seed) {
  Rng rng(seed);
  dw1_ = random_depthwise(rng, 3);
  pw1_ = random_pointwise(rng, 3, 8);
  dw2_ = random_depthwise(rng, 8);
  pw2_ = random_pointwise(rng, 8, 8);
}

std::vector<Tensor> RandomConvExtractor::features(const Tensor& x) const {
  Tensor f1 = relu(pointwise_forward(depthwise_forward(x, dw1_), pw1_));
  Tensor f2 = relu(pointwise_forward(depthwise_forward(f1, dw2_), pw2_));
  return {std::move(f1), std::move(f2)};
}

Tensor RandomConvExtractor::backward(const Tensor& x,
                                     const std::vector<Tensor>& feature_grads) const {
  if (feature_grads.size() != 2) throw ShapeError("random extractor has two stages");
  const Tensor d1 = depthwise_forward(x, dw1_);
  const Tensor p1 = pointwise_forward(d1, pw1_);
  const Tensor f1 = relu(p1);
  const Tensor d2 = depthwise_forward(f1, dw2_);
  const Tensor p2 = pointwise_forward(d2, pw2_);

  Tensor g = relu_backward(p2, feature_grads[1]);
  g = pointwise_backward(d2, pw2_, g).input;
  g = depthwise_backward(f1, dw2_, g).input;
  g = add(g, feature_grads[0]);
  g = relu_backward(p1, g);
  g = pointwise_backward(d1, pw1_, g).input;
  return depthwise_backward(x, dw1_, g).input;
}

double loss_mse(const Tensor& out, const Tensor& label) {
  check_same(out, label, "loss_mse");
  double acc = 0.0;
  auto a = out.data();
  auto b = label.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

Tensor loss_mse_grad(const Tensor& out, const Tensor& label) {
  check_same(out, label, "loss_mse_grad");
  Tensor g(out.shape());
  const double scale = 2.0 / static_cast<double>(out.size());
  auto a = out.data();
  auto b = label.data();
  auto d = g.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    d[i] = static_cast<float>(scale * (static_cast<double>(a[i]) - b[i]));
  }
  return g;
}

double loss_perceptual(const Tensor& out, const Tensor& label, const FeatureExtractor& f) {
  check_same(out, label, "loss_perceptual");
  const auto fo = f.features(out);
  const auto fl = f.features(label);
  double acc = 0.0;
  for (std::size_t s = 0; s < fo.size(); ++s) {
    auto a = fo[s].data();
    auto b = fl[s].data();
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(static_cast<double>(a[i]) - b[i]);
  }
  return acc;
}

Tensor loss_perceptual_grad(const Tensor& out, const Tensor& label, const FeatureExtractor& f) {
  check_same(out, label, "loss_perceptual_grad");
  const auto fo = f.features(out);
  const auto fl = f.features(label);
  std::vector<Tensor> grads;
  for (std::size_t s = 0; s < fo.size(); ++s) {
    Tensor g(fo[s].shape());
    auto a = fo[s].data();
    auto b = fl[s].data();
    auto d = g.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
      d[i] = a[i] > b[i] ? 1.0f : (a[i] < b[i] ? -1.0f : 0.0f);
    }
    grads.push_back(std::move(g));
  }
  return f.backward(out, grads);
}

LossReport loss_total(const Tensor& out, const Tensor& label, const FeatureExtractor& f) {
  LossReport r;
  r.l_mse = loss_mse(out, label);
  r.l_perceptual = loss_perceptual(out, label, f);
  r.l_total = r.l_mse + r.l_perceptual;
  return r;
}

AdamState AdamState::for_store(const WeightStore& params, AdamHyper hyper) {
  AdamState s;
  s.hyper = hyper;
  for (const auto& [name, p] : params.entries()) {
    s.m[name].assign(p.values.size(), 0.0);
    s.v[name].assign(p.values.size(), 0.0);
  }
  return s;
}

void adam_step(AdamState& state, WeightStore& params, const WeightStore& grads) {
  for (const auto& [name, p] : params.entries()) {
    const Parameter& g = grads.at(name);
    if (g.values.size() != p.values.size()) {
      throw WeightError(WeightError::Kind::kShapeMismatch, name,
                        "gradient size does not match parameter");
    }
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) m.assign(p.values.size(), 0.0);
    if (v.empty()) v.assign(p.values.size(), 0.0);
    if (m.size() != p.values.size() || v.size() != p.values.size()) {
      throw WeightError(WeightError::Kind::kShapeMismatch, name,
                        "optimizer state size does not match parameter");
    }
  }
  const AdamHyper& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (auto& [name, p] : params.entries()) {
    const auto& g = grads.at(name).values;
    auto& m = state.m[name];
    auto& v = state.v[name];
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double gi = g[i];
      if (gi == 0.0) continue;
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * gi;
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.values[i] = static_cast<float>(p.values[i] - h.lr * m_hat / (std::sqrt(v_hat) + h.epsilon));
    }
  }
}

namespace {

struct SampleResult {
  LossReport loss;
  WeightStore grads;
};

SampleResult sample_gradient(const ModelGraph& graph, const WeightStore& w,
                             const TrainingSample& s, const FeatureExtractor* perceptual) {
  const Tensor input = prepare_input(graph, s.under, s.over);
  const ForwardTrace trace = forward_trace(graph, w, input);
  SampleResult r;
  r.loss.l_mse = loss_mse(trace.output, s.label);
  Tensor g = loss_mse_grad(trace.output, s.label);
  if (perceptual) {
    r.loss.l_perceptual = loss_perceptual(trace.output, s.label, *perceptual);
    g = add(g, loss_perceptual_grad(trace.output, s.label, *perceptual));
  }
  r.loss.l_total = r.loss.l_mse + r.loss.l_perceptual;
  r.grads = backward(graph, w, trace, g);
  return r;
}

}  // namespace

LossReport evaluate_loss(const ModelGraph& graph, const WeightStore& w,
                         const std::vector<TrainingSample>& dataset,
                         const FeatureExtractor* perceptual) {
  if (dataset.empty()) throw std::invalid_argument("evaluate_loss: empty dataset");
  LossReport total;
  for (const auto& s : dataset) {
    const Tensor out = forward(graph, w, s.under, s.over);
    total.l_mse += loss_mse(out, s.label);
    if (perceptual) total.l_perceptual += loss_perceptual(out, s.label, *perceptual);
  }
  const double n = static_cast<double>(dataset.size());
  total.l_mse /= n;
  total.l_perceptual /= n;
  total.l_total = total.l_mse + total.l_perceptual;
  return total;
}

TrainResult train_toy(const ModelGraph& graph, WeightStore weights,
                      const std::vector<TrainingSample>& dataset, const TrainOptions& options) {
  if (dataset.empty()) throw std::invalid_argument("train_toy: empty dataset");
  const Shape shape = dataset.front().under.shape();
  for (const auto& s : dataset) {
    if (s.under.shape() != shape || s.over.shape() != shape || s.label.shape() != shape) {
      throw ShapeError("train_toy: every sample must share shape " + to_string(shape));
    }
  }
  weights.validate(graph);

  Rng rng(options.seed);
  const std::size_t batch =
      std::min<std::size_t>(std::max(options.batch_size, 1), dataset.size());
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();  // forces a shuffle on first use when batching

  AdamState adam = AdamState::for_store(weights, options.hyper);
  TrainResult result;
  result.curve.reserve(static_cast<std::size_t>(std::max(options.steps, 0)));

  for (int step = 0; step < options.steps; ++step) {
    std::vector<std::size_t> picked;
    if (batch == dataset.size()) {
      picked = order;
    } else {
      for (std::size_t i = 0; i < batch; ++i) {
        if (cursor == order.size()) {
          for (std::size_t j = order.size(); j > 1; --j) std::swap(order[j - 1], order[rng.below(j)]);
          cursor = 0;
        }
        picked.push_back(order[cursor++]);
      }
    }

    std::vector<SampleResult> per(picked.size());
    const int workers = std::clamp(options.threads, 1, static_cast<int>(picked.size()));
    auto work = [&](int worker) {
      for (std::size_t i = worker; i < picked.size(); i += workers) {
        per[i] = sample_gradient(graph, weights, dataset[picked[i]], options.perceptual);
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (int i = 0; i < workers; ++i) pool.emplace_back(work, i);
    }

    // Reduce in sample order so the result does not depend on scheduling.
    WeightStore grads = zero_weights(graph);
    LossPoint point{step, {}};
    const float inv = 1.0f / static_cast<float>(per.size());
    for (const auto& r : per) {
      point.loss.l_mse += r.loss.l_mse;
      point.loss.l_perceptual += r.loss.l_perceptual;
      for (auto& [name, p] : grads.entries()) {
        const auto& src = r.grads.at(name).values;
        for (std::size_t i = 0; i < src.size(); ++i) p.values[i] += src[i];
      }
    }
    for (auto& [name, p] : grads.entries()) {
      for (float& v : p.values) v *= inv;
    }
    point.loss.l_mse /= static_cast<double>(per.size());
    point.loss.l_perceptual /= static_cast<double>(per.size());
    point.loss.l_total = point.loss.l_mse + point.loss.l_perceptual;
    result.curve.push_back(point);

    adam_step(adam, weights, grads);
  }

  result.final_loss = evaluate_loss(graph, weights, dataset, options.perceptual);
  result.weights = std::move(weights);
  return result;
}

std::string loss_curve_csv(const std::vector<LossPoint>& curve) {
  std::ostringstream os;
  os << "step,l_mse,l_perceptual,l_total\n";
  char line[128];
  for (const auto& p : curve) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g\n", p.step, p.loss.l_mse,
                  p.loss.l_perceptual, p.loss.l_total);
    os << line;
  }
  return os.str();
}

GraphGradCheck graph_grad_check(const ModelGraph& graph, const WeightStore& w,
                                const TrainingSample& sample, int samples, std::uint64_t seed,
                                float epsilon, FdPrecision precision) {
  const Tensor input = prepare_input(graph, sample.under, sample.over);
  const Tensor64 input64 = tensor_cast<double>(input);
  const bool reference = precision == FdPrecision::kFloat64;
  auto loss = [&](const WeightStore& p, std::vector<bool>* mask) {
    if (!reference) return loss_mse(forward(graph, p, sample.under, sample.over), sample.label);
    const Tensor64 out = forward_reference(graph, p, input64, mask);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = out.data()[i] - static_cast<double>(sample.label.data()[i]);
      acc += d * d;
    }
    return acc / static_cast<double>(out.size());
  };
  const ForwardTrace trace = forward_trace(graph, w, input);
  const WeightStore analytic =
      backward(graph, w, trace, loss_mse_grad(trace.output, sample.label));

  std::vector<std::pair<std::string, std::size_t>> slots;
  for (const auto& [name, p] : w.entries()) {
    for (std::size_t i = 0; i < p.values.size(); ++i) slots.emplace_back(name, i);
  }
  std::vector<bool> base_mask, hi_mask, lo_mask;
  if (reference) loss(w, &base_mask);

  Rng rng(seed);
  WeightStore probe = w;
  GraphGradCheck result;
  const int max_draws = 20 * samples;
  for (int draw = 0; result.checked < samples && draw < max_draws; ++draw) {
    const auto& [name, index] = slots[rng.below(slots.size())];
    float& slot = probe.at(name).values[index];
    const float saved = slot;
    const float hi = saved + epsilon;
    const float lo = saved - epsilon;
    slot = hi;
    const double l_hi = loss(probe, &hi_mask);
    slot = lo;
    const double l_lo = loss(probe, &lo_mask);
    slot = saved;
    if (reference && (hi_mask != base_mask || lo_mask != base_mask)) {
      ++result.kink_skipped;
      continue;
    }
    const double numeric = (l_hi - l_lo) / (static_cast<double>(hi) - lo);
    result.max_rel_error =
        std::max(result.max_rel_error, relative_error(analytic.at(name).values[index], numeric));
    ++result.checked;
  }
  return result;
}

}  // namespace lightfuse
