#pragma once

// Minimal feed-forward engine: convolution, fully-connected, dropout and
// max-pooling layers, two losses, reverse-mode gradients and Adam.
// Batched tensors are [N, F] for flat data and [N, H, W, C] for images.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "probident/tensor.hpp"

namespace probident {

enum class Activation { linear, relu, sigmoid, softmax };
enum class LossKind { mse, cce };

inline constexpr std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

inline constexpr std::string_view to_string(LossKind l) noexcept {
  return l == LossKind::mse ? "MSE" : "CCE";
}

inline std::optional<Activation> parse_activation(std::string_view s) {
  for (Activation a : {Activation::linear, Activation::relu, Activation::sigmoid, Activation::softmax}) {
    if (s == to_string(a)) return a;
  }
  return std::nullopt;
}

inline std::optional<LossKind> parse_loss(std::string_view s) {
  if (s == "MSE") return LossKind::mse;
  if (s == "CCE") return LossKind::cce;
  return std::nullopt;
}

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 2048;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Fixed network hyperparameters. Layer widths are exposed so tests can build
/// small networks; the defaults are the values every evolved network uses.
struct NnParams {
  TrainConfig train;
  double init_mean = 0.0;
  double init_std = 0.01;
  std::size_t hidden_units = 100;
  std::size_t conv_filters = 10;
  double keep_probability = 0.8;
};

inline constexpr std::size_t kKernelSize = 2;
inline constexpr std::size_t kPoolSize = 2;
inline constexpr double kCceClip = 1e-7;

// ---------------------------------------------------------------------------
// Initialisation

inline Tensor init_weights(const Shape& shape, double mean, double stddev, std::mt19937_64& rng) {
  Tensor t(shape);
  std::normal_distribution<double> dist(mean, stddev);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

inline Tensor init_bias(const Shape& shape) { return Tensor(shape, 0.0); }

// ---------------------------------------------------------------------------
// Activations

/// Applies an activation elementwise; softmax normalises over the last axis.
inline Tensor activation_apply(Activation kind, Tensor x) {
  switch (kind) {
    case Activation::linear:
      break;
    case Activation::relu:
      for (double& v : x.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::sigmoid:
      for (double& v : x.values()) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::softmax: {
      const std::size_t width = x.shape().back();
      const std::size_t rows = x.size() / width;
      double* p = x.data();
      for (std::size_t r = 0; r < rows; ++r, p += width) {
        const double top = *std::max_element(p, p + width);
        double total = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          p[j] = std::exp(p[j] - top);
          total += p[j];
        }
        for (std::size_t j = 0; j < width; ++j) p[j] /= total;
      }
      break;
    }
  }
  return x;
}

/// Gradient through an activation, expressed with the activation's output.
inline Tensor activation_backward(Activation kind, const Tensor& output, Tensor grad) {
  double* g = grad.data();
  const double* y = output.data();
  const std::size_t n = grad.size();
  switch (kind) {
    case Activation::linear:
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) g[i] = y[i] > 0.0 ? g[i] : 0.0;
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < n; ++i) g[i] *= y[i] * (1.0 - y[i]);
      break;
    case Activation::softmax: {
      const std::size_t width = output.shape().back();
      for (std::size_t base = 0; base < n; base += width) {
        double dot = 0.0;
        for (std::size_t j = 0; j < width; ++j) dot += g[base + j] * y[base + j];
        for (std::size_t j = 0; j < width; ++j) g[base + j] = y[base + j] * (g[base + j] - dot);
      }
      break;
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Losses. Both take [N, C] tensors. MSE sums over components and averages
// over samples; CCE sums over samples.

namespace detail {
inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}
}  // namespace detail

inline double mse_loss(const Tensor& target, const Tensor& prediction) {
  detail::require_same_shape(target, prediction, "mse_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = target[i] - prediction[i];
    total += d * d;
  }
  return total / static_cast<double>(target.dim(0));
}

inline Tensor mse_gradient(const Tensor& target, const Tensor& prediction) {
  detail::require_same_shape(target, prediction, "mse_gradient");
  Tensor g(prediction.shape());
  const double scale = 2.0 / static_cast<double>(target.dim(0));
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * (prediction[i] - target[i]);
  return g;
}

inline double cce_loss(const Tensor& target, const Tensor& prediction) {
  detail::require_same_shape(target, prediction, "cce_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] != 0.0) total -= target[i] * std::log(std::clamp(prediction[i], kCceClip, 1.0));
  }
  return total;
}

inline Tensor cce_gradient(const Tensor& target, const Tensor& prediction) {
  detail::require_same_shape(target, prediction, "cce_gradient");
  Tensor g(prediction.shape());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double p = prediction[i];
    // the clip is flat outside [eps, 1]
    g[i] = (p >= kCceClip && p <= 1.0) ? -target[i] / p : 0.0;
  }
  return g;
}

inline double loss_value(LossKind kind, const Tensor& target, const Tensor& prediction) {
  return kind == LossKind::mse ? mse_loss(target, prediction) : cce_loss(target, prediction);
}

inline Tensor loss_gradient(LossKind kind, const Tensor& target, const Tensor& prediction) {
  return kind == LossKind::mse ? mse_gradient(target, prediction) : cce_gradient(target, prediction);
}

// ---------------------------------------------------------------------------
// Layers

/// 2x2 valid convolution, stride 1, relu. Weight is [2, 2, C_in, filters].
struct Convolution {
  Tensor weight;
  Tensor bias;
};

/// Weight is [in, out].
struct Dense {
  Tensor weight;
  Tensor bias;
  Activation activation = Activation::relu;
  bool output = false;
};

struct Dropout {
  double keep_probability = 0.8;
};

/// 2x2 window, stride 1.
struct MaxPooling {};

struct Flatten {};

using Layer = std::variant<Convolution, Dense, Dropout, MaxPooling, Flatten>;

enum class LayerKind { convolution, fully_connected, dropout, max_pooling, flatten, output_dense };

inline LayerKind layer_kind(const Layer& layer) {
  switch (layer.index()) {
    case 0: return LayerKind::convolution;
    case 1: return std::get<Dense>(layer).output ? LayerKind::output_dense : LayerKind::fully_connected;
    case 2: return LayerKind::dropout;
    case 3: return LayerKind::max_pooling;
    default: return LayerKind::flatten;
  }
}

inline constexpr std::string_view to_string(LayerKind k) noexcept {
  switch (k) {
    case LayerKind::convolution: return "convolution";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::dropout: return "dropout";
    case LayerKind::max_pooling: return "max_pooling";
    case LayerKind::flatten: return "flatten";
    case LayerKind::output_dense: return "output_dense";
  }
  return "?";
}

inline Convolution make_convolution(std::size_t in_channels, std::size_t filters, const NnParams& p,
                                    std::mt19937_64& rng) {
  return {init_weights({kKernelSize, kKernelSize, in_channels, filters}, p.init_mean, p.init_std, rng),
          init_bias({filters})};
}

inline Dense make_dense(std::size_t in, std::size_t out, Activation act, bool output, const NnParams& p,
                        std::mt19937_64& rng) {
  return {init_weights({in, out}, p.init_mean, p.init_std, rng), init_bias({out}), act, output};
}

struct Network {
  Shape input_shape;  // per sample, without the batch axis
  std::vector<Layer> layers;
  LossKind loss = LossKind::mse;

  std::vector<LayerKind> kinds() const {
    std::vector<LayerKind> out;
    for (const auto& l : layers) out.push_back(layer_kind(l));
    return out;
  }

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> out;
    for (auto& l : layers) {
      if (auto* c = std::get_if<Convolution>(&l)) {
        out.push_back(&c->weight);
        out.push_back(&c->bias);
      } else if (auto* d = std::get_if<Dense>(&l)) {
        out.push_back(&d->weight);
        out.push_back(&d->bias);
      }
    }
    return out;
  }

  std::vector<const Tensor*> parameters() const {
    std::vector<const Tensor*> out;
    for (Tensor* t : const_cast<Network*>(this)->parameters()) out.push_back(t);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* t : parameters()) n += t->size();
    return n;
  }
};

/// Per-sample output shape of a layer, or nullopt when the input does not fit.
inline std::optional<Shape> layer_output_shape(const Layer& layer, const Shape& in) {
  return std::visit(
      [&](const auto& l) -> std::optional<Shape> {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Convolution> || std::is_same_v<T, MaxPooling>) {
          if (in.size() != 3 || in[0] < kKernelSize || in[1] < kKernelSize) return std::nullopt;
          std::size_t channels = in[2];
          if constexpr (std::is_same_v<T, Convolution>) {
            if (l.weight.shape() != Shape{kKernelSize, kKernelSize, in[2], l.bias.dim(0)}) return std::nullopt;
            channels = l.bias.dim(0);
          }
          return Shape{in[0] - kKernelSize + 1, in[1] - kKernelSize + 1, channels};
        } else if constexpr (std::is_same_v<T, Dense>) {
          if (in.size() != 1 || l.weight.rank() != 2 || l.weight.dim(0) != in[0]) return std::nullopt;
          return Shape{l.weight.dim(1)};
        } else if constexpr (std::is_same_v<T, Flatten>) {
          return Shape{shape_product(in)};
        } else {
          return in;
        }
      },
      layer);
}

/// Walks the layer chain; throws if any layer cannot accept its input.
inline Shape output_shape(const Network& net) {
  Shape s = net.input_shape;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto next = layer_output_shape(net.layers[i], s);
    if (!next) {
      throw std::logic_error("network: layer " + std::to_string(i) + " (" +
                             std::string(to_string(layer_kind(net.layers[i]))) + ") cannot take input " +
                             shape_string(s));
    }
    s = std::move(*next);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

inline ConstMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
inline MutMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return MutMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

// [N, H, W, C] -> [N * Ho * Wo, 2 * 2 * C]; column order matches the weight layout.
inline Tensor im2col(const Tensor& x) {
  const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const std::size_t ho = h - kKernelSize + 1, wo = w - kKernelSize + 1;
  const std::size_t cols = kKernelSize * kKernelSize * c;
  Tensor out({n * ho * wo, cols});
  double* dst = out.data();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < ho; ++i)
      for (std::size_t j = 0; j < wo; ++j)
        for (std::size_t di = 0; di < kKernelSize; ++di)
          for (std::size_t dj = 0; dj < kKernelSize; ++dj) {
            const double* src = x.data() + ((s * h + i + di) * w + j + dj) * c;
            dst = std::copy(src, src + c, dst);
          }
  return out;
}

inline Tensor col2im(const Tensor& cols, const Shape& image_shape) {
  const std::size_t n = image_shape[0], h = image_shape[1], w = image_shape[2], c = image_shape[3];
  const std::size_t ho = h - kKernelSize + 1, wo = w - kKernelSize + 1;
  Tensor out(image_shape, 0.0);
  const double* src = cols.data();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < ho; ++i)
      for (std::size_t j = 0; j < wo; ++j)
        for (std::size_t di = 0; di < kKernelSize; ++di)
          for (std::size_t dj = 0; dj < kKernelSize; ++dj) {
            double* dst = out.data() + ((s * h + i + di) * w + j + dj) * c;
            for (std::size_t k = 0; k < c; ++k) dst[k] += *src++;
          }
  return out;
}

inline Tensor affine(const Tensor& x, std::size_t rows, std::size_t in, const Tensor& weight,
                     const Tensor& bias, Shape out_shape) {
  const std::size_t out = weight.dim(1);
  Tensor y(std::move(out_shape));
  auto ym = as_matrix(y, rows, out);
  ym.noalias() = as_matrix(x, rows, in) * as_matrix(weight, in, out);
  ym.rowwise() += as_matrix(bias, 1, out).row(0);
  return y;
}

}  // namespace detail

/// Intermediate values kept by a training forward pass.
struct ForwardTrace {
  std::vector<Tensor> activations;                   // [0] is the input, [i + 1] the output of layer i
  std::vector<std::vector<double>> dropout_masks;    // per layer, empty unless dropout in training mode
  std::vector<std::vector<std::size_t>> pool_argmax; // per layer, flat input index of each output's max
};

namespace detail {

inline Tensor forward_layer(const Layer& layer, const Tensor& x, bool training, std::mt19937_64* rng,
                            std::vector<double>* mask, std::vector<std::size_t>* argmax) {
  return std::visit(
      [&](const auto& l) -> Tensor {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Convolution>) {
          const std::size_t n = x.dim(0), ho = x.dim(1) - kKernelSize + 1, wo = x.dim(2) - kKernelSize + 1;
          const std::size_t filters = l.bias.dim(0);
          Tensor cols = im2col(x);
          Tensor y = affine(cols, cols.dim(0), cols.dim(1), l.weight.reshaped({cols.dim(1), filters}), l.bias,
                            {n, ho, wo, filters});
          return activation_apply(Activation::relu, std::move(y));
        } else if constexpr (std::is_same_v<T, Dense>) {
          const std::size_t n = x.dim(0), in = l.weight.dim(0), out = l.weight.dim(1);
          return activation_apply(l.activation, affine(x, n, in, l.weight, l.bias, {n, out}));
        } else if constexpr (std::is_same_v<T, Dropout>) {
          if (!training) return x;
          if (rng == nullptr) throw std::logic_error("dropout: training forward pass needs a generator");
          std::bernoulli_distribution keep(l.keep_probability);
          Tensor y = x;
          std::vector<double> m(x.size());
          for (std::size_t i = 0; i < y.size(); ++i) {
            m[i] = keep(*rng) ? 1.0 / l.keep_probability : 0.0;
            y[i] *= m[i];
          }
          if (mask) *mask = std::move(m);
          return y;
        } else if constexpr (std::is_same_v<T, MaxPooling>) {
          const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
          const std::size_t ho = h - kPoolSize + 1, wo = w - kPoolSize + 1;
          Tensor y({n, ho, wo, c});
          if (argmax) argmax->resize(y.size());
          std::size_t o = 0;
          for (std::size_t s = 0; s < n; ++s)
            for (std::size_t i = 0; i < ho; ++i)
              for (std::size_t j = 0; j < wo; ++j)
                for (std::size_t k = 0; k < c; ++k, ++o) {
                  std::size_t best = ((s * h + i) * w + j) * c + k;
                  for (std::size_t di = 0; di < kPoolSize; ++di)
                    for (std::size_t dj = 0; dj < kPoolSize; ++dj) {
                      const std::size_t idx = ((s * h + i + di) * w + j + dj) * c + k;
                      if (x[idx] > x[best]) best = idx;
                    }
                  y[o] = x[best];
                  if (argmax) (*argmax)[o] = best;
                }
          return y;
        } else {
          return x.reshaped({x.dim(0), x.row_size()});
        }
      },
      layer);
}

inline void check_input(const Network& net, const Tensor& x) {
  Shape per_sample(x.shape().begin() + 1, x.shape().end());
  if (x.rank() < 2 || per_sample != net.input_shape) {
    throw std::invalid_argument("forward: input " + shape_string(x.shape()) + " does not match network input " +
                                shape_string(net.input_shape));
  }
}

}  // namespace detail

/// Runs the network. Dropout is active only when `training` is set, in which
/// case `rng` draws the masks.
inline Tensor forward(const Network& net, const Tensor& x, bool training, std::mt19937_64* rng = nullptr) {
  detail::check_input(net, x);
  Tensor cur = x;
  for (const Layer& l : net.layers) cur = detail::forward_layer(l, cur, training, rng, nullptr, nullptr);
  return cur;
}

inline ForwardTrace forward_trace(const Network& net, const Tensor& x, bool training, std::mt19937_64* rng) {
  detail::check_input(net, x);
  ForwardTrace trace;
  trace.activations.reserve(net.layers.size() + 1);
  trace.activations.push_back(x);
  trace.dropout_masks.resize(net.layers.size());
  trace.pool_argmax.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    trace.activations.push_back(detail::forward_layer(net.layers[i], trace.activations.back(), training, rng,
                                                      &trace.dropout_masks[i], &trace.pool_argmax[i]));
  }
  return trace;
}

inline Tensor predict(const Network& net, const Tensor& x) { return forward(net, x, false); }

/// Gradients in the order of Network::parameters().
using Gradients = std::vector<Tensor>;

/// Backpropagates `output_grad` (dLoss/dOutput) through a recorded trace.
inline Gradients backward(const Network& net, const ForwardTrace& trace, Tensor output_grad) {
  Gradients grads;
  Tensor g = std::move(output_grad);
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Tensor& in = trace.activations[li];
    const Tensor& out = trace.activations[li + 1];
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, Convolution>) {
            const std::size_t filters = l.bias.dim(0);
            g = activation_backward(Activation::relu, out, std::move(g));
            Tensor cols = detail::im2col(in);
            const std::size_t rows = cols.dim(0), k = cols.dim(1);
            auto gm = detail::as_matrix(g, rows, filters);
            Tensor dw(l.weight.shape());
            detail::as_matrix(dw, k, filters).noalias() = detail::as_matrix(cols, rows, k).transpose() * gm;
            Tensor db(l.bias.shape());
            detail::as_matrix(db, 1, filters) = gm.colwise().sum();
            Tensor dcols({rows, k});
            detail::as_matrix(dcols, rows, k).noalias() =
                gm * detail::as_matrix(l.weight, k, filters).transpose();
            grads.push_back(std::move(db));
            grads.push_back(std::move(dw));
            g = detail::col2im(dcols, in.shape());
          } else if constexpr (std::is_same_v<T, Dense>) {
            const std::size_t n = in.dim(0), din = l.weight.dim(0), dout = l.weight.dim(1);
            g = activation_backward(l.activation, out, std::move(g));
            auto gm = detail::as_matrix(g, n, dout);
            Tensor dw(l.weight.shape());
            detail::as_matrix(dw, din, dout).noalias() = detail::as_matrix(in, n, din).transpose() * gm;
            Tensor db(l.bias.shape());
            detail::as_matrix(db, 1, dout) = gm.colwise().sum();
            Tensor dx(in.shape());
            detail::as_matrix(dx, n, din).noalias() = gm * detail::as_matrix(l.weight, din, dout).transpose();
            grads.push_back(std::move(db));
            grads.push_back(std::move(dw));
            g = std::move(dx);
          } else if constexpr (std::is_same_v<T, Dropout>) {
            const auto& mask = trace.dropout_masks[li];
            if (!mask.empty()) {
              for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
            }
          } else if constexpr (std::is_same_v<T, MaxPooling>) {
            Tensor dx(in.shape(), 0.0);
            const auto& arg = trace.pool_argmax[li];
            for (std::size_t o = 0; o < g.size(); ++o) dx[arg[o]] += g[o];
            g = std::move(dx);
          } else {
            g = std::move(g).reshaped(in.shape());
          }
        },
        net.layers[li]);
  }
  // collected back to front as (bias, weight) pairs
  std::reverse(grads.begin(), grads.end());
  return grads;
}

/// Forward + backward for one batch; returns the loss and fills `grads`.
inline double loss_and_gradients(const Network& net, const Tensor& x, const Tensor& y, bool training,
                                 std::mt19937_64* rng, Gradients& grads) {
  ForwardTrace trace = forward_trace(net, x, training, rng);
  const Tensor& pred = trace.activations.back();
  const double loss = loss_value(net.loss, y, pred);
  grads = backward(net, trace, loss_gradient(net.loss, y, pred));
  return loss;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  AdamState() = default;
  explicit AdamState(const TrainConfig& cfg)
      : learning_rate(cfg.learning_rate), beta1(cfg.beta1), beta2(cfg.beta2), epsilon(cfg.epsilon) {}
};

inline void adam_step(AdamState& state, std::span<Tensor* const> params, const Gradients& grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  if (state.first_moment.empty()) {
    for (const Tensor* p : params) {
      state.first_moment.emplace_back(p->shape(), 0.0);
      state.second_moment.emplace_back(p->shape(), 0.0);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    if (g.shape() != p.shape() || state.first_moment[k].shape() != p.shape()) {
      throw std::invalid_argument("adam_step: shape mismatch for parameter " + std::to_string(k));
    }
    double* m = state.first_moment[k].data();
    double* v = state.second_moment[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      p[i] -= state.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Training

struct TrainResult {
  std::vector<double> val_trace;  // V_0 (before any update) .. V_e
  bool finite = true;
};

/// Fixed-epoch training. Batches are drawn from a per-epoch shuffle when the
/// training set is larger than the batch size; otherwise each epoch is one
/// full-batch update.
inline TrainResult train(Network& net, const Tensor& x_train, const Tensor& y_train, const Tensor& x_val,
                         const Tensor& y_val, const TrainConfig& cfg, std::mt19937_64& rng) {
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw std::invalid_argument("train: epochs and batch size must be >= 1");
  TrainResult result;
  auto record = [&] {
    const double v = loss_value(net.loss, y_val, predict(net, x_val));
    result.val_trace.push_back(v);
    if (!std::isfinite(v)) result.finite = false;
    return result.finite;
  };
  if (!record()) return result;

  AdamState adam(cfg);
  auto params = net.parameters();
  const std::size_t n = x_train.dim(0);
  const std::size_t batch = std::min(cfg.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Gradients grads;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      double loss = 0.0;
      if (batch == n) {
        loss = loss_and_gradients(net, x_train, y_train, true, &rng, grads);
      } else {
        std::span<const std::size_t> idx(order.data() + start, std::min(batch, n - start));
        loss = loss_and_gradients(net, x_train.gather_rows(idx), y_train.gather_rows(idx), true, &rng, grads);
      }
      if (!std::isfinite(loss)) {
        result.finite = false;
        return result;
      }
      adam_step(adam, params, grads);
    }
    if (!record()) return result;
  }
  return result;
}

}  // namespace probident
