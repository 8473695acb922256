#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pcnn/error.hpp"
#include "pcnn/tensor.hpp"

namespace pcnn {

// ---------------------------------------------------------------------------
// Layer types. Activations are [H,W,C] row-major; kernels [C_out,kh,kw,C_in];
// dense weights [in,out]. Convolution is cross-correlation (no kernel flip)
// with valid padding.
// ---------------------------------------------------------------------------

struct ConvLayer {
  Tensor kernels;  // [C_out, kh, kw, C_in]
  Tensor bias;     // [C_out]
  int stride = 1;

  int64_t out_channels() const { return kernels.shape().dim(0); }
  int64_t kernel_h() const { return kernels.shape().dim(1); }
  int64_t kernel_w() const { return kernels.shape().dim(2); }
  int64_t in_channels() const { return kernels.shape().dim(3); }
};

struct ReluLayer {};

/// 2x2 window, stride 2, the only pooling configuration used.
struct PoolLayer {
  static constexpr int64_t window = 2;
  static constexpr int64_t stride = 2;
};

struct FlattenLayer {};

struct DenseLayer {
  Tensor weights;  // [in_features, out_features]
  Tensor bias;     // [out_features]

  int64_t in_features() const { return weights.shape().dim(0); }
  int64_t out_features() const { return weights.shape().dim(1); }
};

using Layer = std::variant<ConvLayer, ReluLayer, PoolLayer, FlattenLayer, DenseLayer>;

struct Network {
  Shape input_shape;
  std::vector<Layer> layers;
};

inline const char* layer_kind_name(const Layer& layer) {
  struct Namer {
    const char* operator()(const ConvLayer&) const { return "conv"; }
    const char* operator()(const ReluLayer&) const { return "relu"; }
    const char* operator()(const PoolLayer&) const { return "maxpool"; }
    const char* operator()(const FlattenLayer&) const { return "flatten"; }
    const char* operator()(const DenseLayer&) const { return "dense"; }
  };
  return std::visit(Namer{}, layer);
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

/// Valid-padding output extent: floor((in - k) / stride) + 1.
inline int64_t conv_output_size(int64_t in_size, int64_t kernel_size, int64_t stride) {
  if (stride < 1) throw ShapeError("conv stride must be >= 1");
  if (kernel_size < 1) throw ShapeError("conv kernel size must be >= 1");
  if (in_size < kernel_size)
    throw ShapeError("conv input " + std::to_string(in_size) +
                     " smaller than kernel " + std::to_string(kernel_size));
  return (in_size - kernel_size) / stride + 1;
}

namespace detail {

// Patch matrix: row r = (y*Wo + x) holds the receptive field of output (y,x)
// in (i,j,c) row-major order, so conv becomes patches x kernel_matrix.
inline Tensor im2col(const Tensor& input, int64_t kh, int64_t kw, int64_t stride) {
  const int64_t h = input.shape().dim(0);
  const int64_t w = input.shape().dim(1);
  const int64_t c = input.shape().dim(2);
  const int64_t ho = conv_output_size(h, kh, stride);
  const int64_t wo = conv_output_size(w, kw, stride);
  Tensor patches({ho * wo, kh * kw * c});
  const double* src = input.data();
  double* dst = patches.data();
  const int64_t seg = kw * c;
  for (int64_t y = 0; y < ho; ++y) {
    for (int64_t x = 0; x < wo; ++x) {
      double* row = dst + (y * wo + x) * (kh * seg);
      for (int64_t i = 0; i < kh; ++i) {
        const double* s = src + ((y * stride + i) * w + x * stride) * c;
        double* d = row + i * seg;
        for (int64_t t = 0; t < seg; ++t) d[t] = s[t];
      }
    }
  }
  return patches;
}

// Scatter-add of a patch-matrix gradient back onto the input grid.
inline void col2im_add(const Tensor& cols, int64_t kh, int64_t kw, int64_t stride,
                       Tensor& grad_input) {
  const int64_t h = grad_input.shape().dim(0);
  const int64_t w = grad_input.shape().dim(1);
  const int64_t c = grad_input.shape().dim(2);
  const int64_t ho = conv_output_size(h, kh, stride);
  const int64_t wo = conv_output_size(w, kw, stride);
  const double* src = cols.data();
  double* dst = grad_input.data();
  const int64_t seg = kw * c;
  for (int64_t y = 0; y < ho; ++y) {
    for (int64_t x = 0; x < wo; ++x) {
      const double* row = src + (y * wo + x) * (kh * seg);
      for (int64_t i = 0; i < kh; ++i) {
        double* d = dst + ((y * stride + i) * w + x * stride) * c;
        const double* s = row + i * seg;
        for (int64_t t = 0; t < seg; ++t) d[t] += s[t];
      }
    }
  }
}

inline void check_conv_input(const Tensor& input, const ConvLayer& layer) {
  if (input.shape().rank() != 3)
    throw ShapeError("conv input must be [H,W,C], got " + input.shape().str());
  if (input.shape().dim(2) != layer.in_channels())
    throw ShapeError("conv channel mismatch: input has " +
                     std::to_string(input.shape().dim(2)) + ", layer expects " +
                     std::to_string(layer.in_channels()));
}

}  // namespace detail

/// out[y,x,o] = bias[o] + sum_{i,j,c} input[y*s+i, x*s+j, c] * kernels[o,i,j,c]
inline Tensor conv_forward(const Tensor& input, const ConvLayer& layer) {
  detail::check_conv_input(input, layer);
  const int64_t kh = layer.kernel_h(), kw = layer.kernel_w();
  const int64_t cin = layer.in_channels(), cout = layer.out_channels();
  const int64_t s = layer.stride;
  const int64_t ho = conv_output_size(input.shape().dim(0), kh, s);
  const int64_t wo = conv_output_size(input.shape().dim(1), kw, s);

  Tensor patches = detail::im2col(input, kh, kw, s);
  Tensor kmat = transpose(reshape(layer.kernels, {cout, kh * kw * cin}));
  Tensor out_mat = matmul(patches, kmat);  // [ho*wo, cout]

  double* out = out_mat.data();
  const double* b = layer.bias.data();
  for (int64_t r = 0; r < ho * wo; ++r)
    for (int64_t o = 0; o < cout; ++o) out[r * cout + o] += b[o];
  return reshape(out_mat, {ho, wo, cout});
}

struct ConvGrads {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};

inline ConvGrads conv_backward(const ConvLayer& layer, const Tensor& cached_input,
                               const Tensor& grad_out) {
  detail::check_conv_input(cached_input, layer);
  const int64_t kh = layer.kernel_h(), kw = layer.kernel_w();
  const int64_t cin = layer.in_channels(), cout = layer.out_channels();
  const int64_t s = layer.stride;
  const int64_t ho = conv_output_size(cached_input.shape().dim(0), kh, s);
  const int64_t wo = conv_output_size(cached_input.shape().dim(1), kw, s);
  if (grad_out.shape() != Shape({ho, wo, cout}))
    throw ShapeError("conv grad_out shape " + grad_out.shape().str() +
                     " does not match forward output [" + std::to_string(ho) +
                     "," + std::to_string(wo) + "," + std::to_string(cout) + "]");

  Tensor g = reshape(grad_out, {ho * wo, cout});
  Tensor patches = detail::im2col(cached_input, kh, kw, s);

  // d/dK = P^T G, reordered to kernel layout; d/dP = G K^T scattered back.
  Tensor grad_kmat = matmul(transpose(patches), g);  // [kh*kw*cin, cout]
  Tensor grad_kernels = reshape(transpose(grad_kmat), {cout, kh, kw, cin});
  Tensor kmat_t = reshape(layer.kernels, {cout, kh * kw * cin});
  Tensor grad_patches = matmul(g, kmat_t);  // [ho*wo, kh*kw*cin]

  ConvGrads grads;
  grads.input = Tensor::zeros(cached_input.shape());
  detail::col2im_add(grad_patches, kh, kw, s, grads.input);
  grads.kernels = grad_kernels;
  grads.bias = Tensor::zeros({cout});
  const double* gp = g.data();
  for (int64_t r = 0; r < ho * wo; ++r)
    for (int64_t o = 0; o < cout; ++o) grads.bias[o] += gp[r * cout + o];
  return grads;
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

inline Tensor relu_forward(const Tensor& x) {
  return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

/// Derivative at exactly 0 is 0.
inline Tensor relu_backward(const Tensor& cached_x, const Tensor& grad_out) {
  check_same_shape(cached_x, grad_out, "relu_backward");
  Tensor out(cached_x.shape());
  for (int64_t i = 0; i < out.size(); ++i)
    out[i] = cached_x[i] > 0.0 ? grad_out[i] : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Max pooling
// ---------------------------------------------------------------------------

struct PoolCache {
  Shape input_shape;
  std::vector<int64_t> argmax;  // flat input index per output element

  bool valid() const { return !argmax.empty(); }
};

struct PoolResult {
  Tensor output;
  PoolCache cache;
};

/// 2x2/stride-2 max; odd trailing row/column is discarded. Ties go to the
/// first maximum in row-major window order.
inline PoolResult maxpool_forward(const Tensor& x, const PoolLayer& = PoolLayer{}) {
  if (x.shape().rank() != 3)
    throw ShapeError("maxpool input must be [H,W,C], got " + x.shape().str());
  const int64_t h = x.shape().dim(0), w = x.shape().dim(1), c = x.shape().dim(2);
  if (h < 2 || w < 2)
    throw ShapeError("maxpool input " + x.shape().str() + " smaller than 2x2 window");
  const int64_t ho = h / 2, wo = w / 2;

  PoolResult res;
  res.output = Tensor({ho, wo, c});
  res.cache.input_shape = x.shape();
  res.cache.argmax.resize(static_cast<size_t>(ho * wo * c));
  const double* src = x.data();
  for (int64_t y = 0; y < ho; ++y) {
    for (int64_t xx = 0; xx < wo; ++xx) {
      for (int64_t ch = 0; ch < c; ++ch) {
        int64_t best = ((2 * y) * w + 2 * xx) * c + ch;
        double best_v = src[best];
        for (int64_t i = 0; i < 2; ++i) {
          for (int64_t j = 0; j < 2; ++j) {
            const int64_t idx = ((2 * y + i) * w + (2 * xx + j)) * c + ch;
            if (src[idx] > best_v) {
              best_v = src[idx];
              best = idx;
            }
          }
        }
        const int64_t out_idx = (y * wo + xx) * c + ch;
        res.output[out_idx] = best_v;
        res.cache.argmax[static_cast<size_t>(out_idx)] = best;
      }
    }
  }
  return res;
}

/// Routes each output gradient to its cached argmax position.
inline Tensor maxpool_backward(const PoolCache& cache, const Tensor& grad_out) {
  if (!cache.valid())
    throw StateError("maxpool_backward called without a forward cache");
  if (grad_out.size() != static_cast<int64_t>(cache.argmax.size()))
    throw ShapeError("maxpool grad_out " + grad_out.shape().str() +
                     " does not match cached forward output");
  Tensor grad_in = Tensor::zeros(cache.input_shape);
  for (int64_t i = 0; i < grad_out.size(); ++i)
    grad_in[cache.argmax[static_cast<size_t>(i)]] += grad_out[i];
  return grad_in;
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

inline Tensor dense_forward(const Tensor& x, const DenseLayer& layer) {
  if (x.shape().rank() != 1 || x.size() != layer.in_features())
    throw ShapeError("dense input " + x.shape().str() + " does not match [" +
                     std::to_string(layer.in_features()) + "]");
  const int64_t in = layer.in_features(), out = layer.out_features();
  Tensor y(layer.bias.shape());
  const double* w = layer.weights.data();
  for (int64_t j = 0; j < out; ++j) y[j] = layer.bias[j];
  for (int64_t i = 0; i < in; ++i) {
    const double xi = x[i];
    const double* wrow = w + i * out;
    for (int64_t j = 0; j < out; ++j) y[j] += xi * wrow[j];
  }
  return y;
}

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

inline DenseGrads dense_backward(const DenseLayer& layer, const Tensor& cached_x,
                                 const Tensor& grad_out) {
  if (cached_x.shape().rank() != 1 || cached_x.size() != layer.in_features())
    throw ShapeError("dense cached input does not match layer");
  if (grad_out.shape().rank() != 1 || grad_out.size() != layer.out_features())
    throw ShapeError("dense grad_out does not match layer output");
  const int64_t in = layer.in_features(), out = layer.out_features();
  DenseGrads grads;
  grads.input = Tensor::zeros({in});
  grads.weights = Tensor::zeros(layer.weights.shape());
  grads.bias = grad_out;
  const double* w = layer.weights.data();
  double* gw = grads.weights.data();
  for (int64_t i = 0; i < in; ++i) {
    const double xi = cached_x[i];
    const double* wrow = w + i * out;
    double* gwrow = gw + i * out;
    double acc = 0.0;
    for (int64_t j = 0; j < out; ++j) {
      acc += wrow[j] * grad_out[j];
      gwrow[j] = xi * grad_out[j];
    }
    grads.input[i] = acc;
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy head
// ---------------------------------------------------------------------------

struct SoftmaxResult {
  double loss = 0.0;
  Tensor probs;
  Tensor grad_logits;  // probs - onehot(label)
};

inline SoftmaxResult softmax_cross_entropy(const Tensor& logits, int64_t label) {
  if (logits.shape().rank() != 1)
    throw ShapeError("softmax_cross_entropy needs rank-1 logits");
  const int64_t c = logits.size();
  if (label < 0 || label >= c)
    throw ArgumentError("label " + std::to_string(label) + " out of range [0," +
                        std::to_string(c) + ")");
  double m = logits[0];
  for (int64_t i = 0; i < c; ++i) {
    if (!std::isfinite(logits[i])) throw NumericError("non-finite logit");
    m = std::max(m, logits[i]);
  }
  double sum = 0.0;
  SoftmaxResult res;
  res.probs = Tensor(logits.shape());
  for (int64_t i = 0; i < c; ++i) {
    res.probs[i] = std::exp(logits[i] - m);
    sum += res.probs[i];
  }
  for (int64_t i = 0; i < c; ++i) res.probs[i] /= sum;
  res.loss = std::log(sum) - (logits[label] - m);
  res.grad_logits = res.probs;
  res.grad_logits[label] -= 1.0;
  return res;
}

// ---------------------------------------------------------------------------
// Network composition
// ---------------------------------------------------------------------------

/// Output shape of one layer given its input shape, data untouched.
inline Shape layer_output_shape(const Layer& layer, const Shape& in) {
  struct Visitor {
    const Shape& in;
    Shape operator()(const ConvLayer& l) const {
      if (in.rank() != 3 || in.dim(2) != l.in_channels())
        throw ShapeError("conv expects [H,W," + std::to_string(l.in_channels()) +
                         "], got " + in.str());
      return Shape({conv_output_size(in.dim(0), l.kernel_h(), l.stride),
                    conv_output_size(in.dim(1), l.kernel_w(), l.stride),
                    l.out_channels()});
    }
    Shape operator()(const ReluLayer&) const { return in; }
    Shape operator()(const PoolLayer&) const {
      if (in.rank() != 3 || in.dim(0) < 2 || in.dim(1) < 2)
        throw ShapeError("maxpool expects [H>=2,W>=2,C], got " + in.str());
      return Shape({in.dim(0) / 2, in.dim(1) / 2, in.dim(2)});
    }
    Shape operator()(const FlattenLayer&) const {
      return Shape({in.element_count()});
    }
    Shape operator()(const DenseLayer& l) const {
      if (in.rank() != 1 || in.dim(0) != l.in_features())
        throw ShapeError("dense expects [" + std::to_string(l.in_features()) +
                         "], got " + in.str());
      return l.bias.shape();
    }
  };
  return std::visit(Visitor{in}, layer);
}

/// Per-layer output shapes for the declared input, by pure shape arithmetic.
inline std::vector<Shape> network_output_shapes(const Network& net) {
  std::vector<Shape> shapes;
  shapes.reserve(net.layers.size());
  Shape cur = net.input_shape;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    try {
      cur = layer_output_shape(net.layers[i], cur);
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + " (" +
                       layer_kind_name(net.layers[i]) + "): " + e.what());
    }
    shapes.push_back(cur);
  }
  return shapes;
}

struct LayerCache {
  Tensor input;    // conv/relu/dense/flatten
  PoolCache pool;  // maxpool only
};

namespace detail {

template <bool WithCache>
Tensor network_forward_impl(const Network& net, const Tensor& input,
                            std::vector<LayerCache>* caches) {
  if (input.shape() != net.input_shape)
    throw ShapeError("network input " + input.shape().str() +
                     " does not match declared " + net.input_shape.str());
  if constexpr (WithCache) {
    caches->clear();
    caches->resize(net.layers.size());
  }
  Tensor cur = input;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    try {
      const Layer& layer = net.layers[i];
      if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
        if constexpr (WithCache) (*caches)[i].input = cur;
        cur = conv_forward(cur, *conv);
      } else if (std::holds_alternative<ReluLayer>(layer)) {
        if constexpr (WithCache) (*caches)[i].input = cur;
        cur = relu_forward(cur);
      } else if (std::holds_alternative<PoolLayer>(layer)) {
        PoolResult res = maxpool_forward(cur);
        if constexpr (WithCache) (*caches)[i].pool = std::move(res.cache);
        cur = std::move(res.output);
      } else if (std::holds_alternative<FlattenLayer>(layer)) {
        if constexpr (WithCache) (*caches)[i].input = cur;
        cur = reshape(cur, {cur.size()});
      } else {
        const auto& dense = std::get<DenseLayer>(layer);
        if constexpr (WithCache) (*caches)[i].input = cur;
        cur = dense_forward(cur, dense);
      }
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + " (" +
                       layer_kind_name(net.layers[i]) + "): " + e.what());
    }
  }
  return cur;
}

}  // namespace detail

/// Inference-only forward pass; no activation caches are kept.
inline Tensor network_forward(const Network& net, const Tensor& input) {
  return detail::network_forward_impl<false>(net, input, nullptr);
}

/// Forward pass recording per-layer caches for a subsequent backward pass.
inline Tensor network_forward(const Network& net, const Tensor& input,
                              std::vector<LayerCache>& caches) {
  return detail::network_forward_impl<true>(net, input, &caches);
}

/// Parameter gradients for one layer; tensors are empty for layers without
/// parameters.
struct LayerGrads {
  Tensor weights;  // conv kernels or dense weights
  Tensor bias;
};

struct NetworkGrads {
  std::vector<LayerGrads> layers;
  Tensor input;  // gradient w.r.t. the network input
};

inline NetworkGrads network_backward(const Network& net,
                                     const std::vector<LayerCache>& caches,
                                     const Tensor& grad_logits) {
  if (caches.size() != net.layers.size())
    throw StateError("backward caches do not match network layers");
  NetworkGrads grads;
  grads.layers.resize(net.layers.size());
  Tensor g = grad_logits;
  for (size_t ri = net.layers.size(); ri-- > 0;) {
    const Layer& layer = net.layers[ri];
    const LayerCache& cache = caches[ri];
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      ConvGrads cg = conv_backward(*conv, cache.input, g);
      grads.layers[ri].weights = std::move(cg.kernels);
      grads.layers[ri].bias = std::move(cg.bias);
      g = std::move(cg.input);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      g = relu_backward(cache.input, g);
    } else if (std::holds_alternative<PoolLayer>(layer)) {
      g = maxpool_backward(cache.pool, g);
    } else if (std::holds_alternative<FlattenLayer>(layer)) {
      g = reshape(g, cache.input.shape());
    } else {
      const auto& dense = std::get<DenseLayer>(layer);
      DenseGrads dg = dense_backward(dense, cache.input, g);
      grads.layers[ri].weights = std::move(dg.weights);
      grads.layers[ri].bias = std::move(dg.bias);
      g = std::move(dg.input);
    }
  }
  grads.input = std::move(g);
  return grads;
}

/// Zero-valued gradient holder matching the network's parameter tensors.
inline NetworkGrads zero_grads(const Network& net) {
  NetworkGrads grads;
  grads.layers.resize(net.layers.size());
  for (size_t i = 0; i < net.layers.size(); ++i) {
    if (const auto* conv = std::get_if<ConvLayer>(&net.layers[i])) {
      grads.layers[i].weights = Tensor::zeros(conv->kernels.shape());
      grads.layers[i].bias = Tensor::zeros(conv->bias.shape());
    } else if (const auto* dense = std::get_if<DenseLayer>(&net.layers[i])) {
      grads.layers[i].weights = Tensor::zeros(dense->weights.shape());
      grads.layers[i].bias = Tensor::zeros(dense->bias.shape());
    }
  }
  grads.input = Tensor::zeros(net.input_shape);
  return grads;
}

inline void accumulate_grads(NetworkGrads& acc, const NetworkGrads& g) {
  if (acc.layers.size() != g.layers.size())
    throw ShapeError("gradient accumulation across different networks");
  for (size_t i = 0; i < acc.layers.size(); ++i) {
    if (acc.layers[i].weights.empty()) continue;
    acc.layers[i].weights = add(acc.layers[i].weights, g.layers[i].weights);
    acc.layers[i].bias = add(acc.layers[i].bias, g.layers[i].bias);
  }
}

inline void scale_grads(NetworkGrads& grads, double s) {
  for (LayerGrads& lg : grads.layers) {
    if (lg.weights.empty()) continue;
    lg.weights = scale(lg.weights, s);
    lg.bias = scale(lg.bias, s);
  }
}

}  // namespace pcnn
