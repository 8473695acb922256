#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pcnn/dataset.hpp"
#include "pcnn/error.hpp"
#include "pcnn/nn.hpp"
#include "pcnn/rng.hpp"
#include "pcnn/tensor.hpp"

namespace pcnn {

// The shared architecture behind ModelC (crack), ModelM (mark) and ModelS
// (severity): four conv+relu+maxpool blocks with 32@5x5, 32@3x3, 64@3x3,
// 64@3x3 kernels, then flatten, dense(64), relu, dense(classes). Tasks
// differ only in input size and class count.

namespace detail {

inline Tensor glorot_uniform(const Shape& shape, int64_t fan_in, int64_t fan_out,
                             Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return Tensor::random_uniform(shape, -limit, limit, rng);
}

inline ConvLayer make_conv(int64_t c_out, int64_t k, int64_t c_in, Rng& rng) {
  ConvLayer layer;
  layer.kernels = glorot_uniform({c_out, k, k, c_in}, k * k * c_in, k * k * c_out, rng);
  layer.bias = Tensor::zeros({c_out});
  layer.stride = 1;
  return layer;
}

inline DenseLayer make_dense(int64_t in, int64_t out, Rng& rng) {
  DenseLayer layer;
  layer.weights = glorot_uniform({in, out}, in, out, rng);
  layer.bias = Tensor::zeros({out});
  return layer;
}

}  // namespace detail

constexpr int kHiddenUnits = 64;

/// Task network at a custom input resolution (weights Glorot-initialized,
/// biases zero, reproducible from seed). Throws ShapeError if input_size is
/// too small for the conv/pool chain.
inline Network build_model(Task task, int input_size, uint64_t seed) {
  Rng rng(seed);
  Network net;
  net.input_shape = Shape({input_size, input_size, 1});

  const int64_t conv_channels[4] = {32, 32, 64, 64};
  const int64_t conv_kernel[4] = {5, 3, 3, 3};
  Shape cur = net.input_shape;
  int64_t c_in = 1;
  for (int i = 0; i < 4; ++i) {
    net.layers.emplace_back(detail::make_conv(conv_channels[i], conv_kernel[i], c_in, rng));
    cur = layer_output_shape(net.layers.back(), cur);
    net.layers.emplace_back(ReluLayer{});
    net.layers.emplace_back(PoolLayer{});
    cur = layer_output_shape(net.layers.back(), cur);
    c_in = conv_channels[i];
  }
  net.layers.emplace_back(FlattenLayer{});
  const int64_t flat = cur.element_count();
  net.layers.emplace_back(detail::make_dense(flat, kHiddenUnits, rng));
  net.layers.emplace_back(ReluLayer{});
  net.layers.emplace_back(detail::make_dense(kHiddenUnits, num_classes(task), rng));
  return net;
}

/// Canonical resolution per task: ModelC/ModelM at 256, ModelS at 500.
inline Network build_model(Task task, uint64_t seed) {
  return build_model(task, task_input_size(task), seed);
}

inline int64_t count_parameters(const Network& net) {
  int64_t total = 0;
  for (const Layer& layer : net.layers) {
    if (const auto* conv = std::get_if<ConvLayer>(&layer))
      total += conv->kernels.size() + conv->bias.size();
    else if (const auto* dense = std::get_if<DenseLayer>(&layer))
      total += dense->weights.size() + dense->bias.size();
  }
  return total;
}

// ---------------------------------------------------------------------------
// Model file: "PCNN" magic, version 1, little-endian throughout. Weights are
// stored as IEEE-754 single precision in row-major order; the in-memory
// double precision is quantized round-to-nearest on save.
//
//   magic       4 bytes "PCNN"
//   version     u32 = 1
//   task        u8  (0 crack, 1 mark, 2 severity)
//   input_size  u32
//   num_classes u32
//   layer_count u32 (parameterized layers only)
//   per layer:  tag u8 (1 conv, 2 dense); weight dims u32 each
//               (conv: C_out,kh,kw,C_in; dense: in,out); weights f32;
//               bias f32 (conv: C_out; dense: out)
// ---------------------------------------------------------------------------

struct Model {
  Task task = Task::Crack;
  Network net;

  int input_size() const { return static_cast<int>(net.input_shape.dim(0)); }
};

namespace detail {

constexpr char kModelMagic[4] = {'P', 'C', 'N', 'N'};
constexpr uint32_t kModelVersion = 1;
constexpr uint8_t kTagConv = 1;
constexpr uint8_t kTagDense = 2;

inline void put_u8(std::ostream& out, uint8_t v) {
  out.put(static_cast<char>(v));
}

inline void put_u32(std::ostream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

inline void put_f32(std::ostream& out, double v) {
  put_u32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
}

inline uint8_t get_u8(std::istream& in, const std::string& path) {
  const int c = in.get();
  if (c == EOF) throw FormatError(path + ": truncated model file");
  return static_cast<uint8_t>(c);
}

inline uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw FormatError(path + ": truncated model file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline double get_f32(std::istream& in, const std::string& path) {
  return static_cast<double>(std::bit_cast<float>(get_u32(in, path)));
}

inline void put_tensor_f32(std::ostream& out, const Tensor& t) {
  for (int64_t i = 0; i < t.size(); ++i) put_f32(out, t[i]);
}

inline void get_tensor_f32(std::istream& in, Tensor& t, const std::string& path) {
  for (int64_t i = 0; i < t.size(); ++i) t[i] = get_f32(in, path);
}

}  // namespace detail

inline void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file: " + path);

  out.write(detail::kModelMagic, 4);
  detail::put_u32(out, detail::kModelVersion);
  detail::put_u8(out, static_cast<uint8_t>(model.task));
  detail::put_u32(out, static_cast<uint32_t>(model.net.input_shape.dim(0)));
  const Shape logits = network_output_shapes(model.net).back();
  detail::put_u32(out, static_cast<uint32_t>(logits.dim(0)));

  uint32_t param_layers = 0;
  for (const Layer& layer : model.net.layers)
    if (std::holds_alternative<ConvLayer>(layer) || std::holds_alternative<DenseLayer>(layer))
      ++param_layers;
  detail::put_u32(out, param_layers);

  for (const Layer& layer : model.net.layers) {
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      detail::put_u8(out, detail::kTagConv);
      for (int64_t d : conv->kernels.shape().dims())
        detail::put_u32(out, static_cast<uint32_t>(d));
      detail::put_tensor_f32(out, conv->kernels);
      detail::put_tensor_f32(out, conv->bias);
    } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      detail::put_u8(out, detail::kTagDense);
      for (int64_t d : dense->weights.shape().dims())
        detail::put_u32(out, static_cast<uint32_t>(d));
      detail::put_tensor_f32(out, dense->weights);
      detail::put_tensor_f32(out, dense->bias);
    }
  }
  if (!out) throw IoError("short write: " + path);
}

/// Rebuilds the task architecture and validates every stored dimension
/// against it; any inconsistency is a FormatError.
inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);

  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, detail::kModelMagic, 4) != 0)
    throw FormatError(path + ": not a PCNN model file");
  const uint32_t version = detail::get_u32(in, path);
  if (version != detail::kModelVersion)
    throw FormatError(path + ": unsupported model version " + std::to_string(version));

  const uint8_t task_tag = detail::get_u8(in, path);
  if (task_tag > 2) throw FormatError(path + ": unknown task tag");
  const Task task = static_cast<Task>(task_tag);
  const uint32_t input_size = detail::get_u32(in, path);
  if (input_size < 1 || input_size > 1 << 16)
    throw FormatError(path + ": implausible input size");
  const uint32_t classes = detail::get_u32(in, path);
  if (classes != static_cast<uint32_t>(num_classes(task)))
    throw FormatError(path + ": class count " + std::to_string(classes) +
                      " inconsistent with task " + task_name(task));

  Model model;
  model.task = task;
  try {
    model.net = build_model(task, static_cast<int>(input_size), 0);
  } catch (const ShapeError&) {
    throw FormatError(path + ": input size " + std::to_string(input_size) +
                      " too small for the architecture");
  }

  uint32_t expected_layers = 0;
  for (const Layer& layer : model.net.layers)
    if (std::holds_alternative<ConvLayer>(layer) || std::holds_alternative<DenseLayer>(layer))
      ++expected_layers;
  const uint32_t layer_count = detail::get_u32(in, path);
  if (layer_count != expected_layers)
    throw FormatError(path + ": layer count " + std::to_string(layer_count) +
                      " inconsistent with task architecture");

  for (Layer& layer : model.net.layers) {
    Tensor* weights = nullptr;
    Tensor* bias = nullptr;
    uint8_t expected_tag = 0;
    if (auto* conv = std::get_if<ConvLayer>(&layer)) {
      weights = &conv->kernels;
      bias = &conv->bias;
      expected_tag = detail::kTagConv;
    } else if (auto* dense = std::get_if<DenseLayer>(&layer)) {
      weights = &dense->weights;
      bias = &dense->bias;
      expected_tag = detail::kTagDense;
    } else {
      continue;
    }
    const uint8_t tag = detail::get_u8(in, path);
    if (tag != expected_tag)
      throw FormatError(path + ": unexpected layer tag " + std::to_string(tag));
    for (int64_t d : weights->shape().dims()) {
      const uint32_t stored = detail::get_u32(in, path);
      if (stored != static_cast<uint32_t>(d))
        throw FormatError(path + ": layer dimension " + std::to_string(stored) +
                          " inconsistent with declared task (expected " +
                          std::to_string(d) + ")");
    }
    detail::get_tensor_f32(in, *weights, path);
    detail::get_tensor_f32(in, *bias, path);
  }
  return model;
}

}  // namespace pcnn
