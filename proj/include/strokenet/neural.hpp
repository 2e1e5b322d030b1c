#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace strokenet::nn {

// Sequence tensor: rows are time steps, columns are channels.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

enum class LayerKind { Conv1d, DenseFlatten, DenseTimeDistributed, Gru, Bgru };
enum class Activation { Relu, Tanh, Linear };

std::string to_string(LayerKind kind);
std::string to_string(Activation act);

struct LayerSpec {
  std::string name;  // e.g. "conv1d_3", "bidirectional_1"
  LayerKind kind = LayerKind::Conv1d;
  std::size_t in_channels = 0;
  std::size_t out_units = 0;  // filters, dense units, or GRU units per direction
  Activation activation = Activation::Linear;
  int block = 0;  // groups layers that share a filter count in printed tables
  std::size_t kernel_size = 3;  // conv only; odd, same padding
};

struct ArchitectureSpec {
  std::string name;
  std::size_t window_length = 1000;
  std::vector<LayerSpec> layers;
};

/// Canonical names in table order: CNN+dense, CNNc1..3, GRUc1, BGRUc1..3.
const std::vector<std::string>& architecture_names();

/// Accepts the canonical names case-insensitively plus aliases such as
/// "cnn_dense" or "gruc1". Throws ConfigError for anything else.
ArchitectureSpec build_architecture(std::string_view name);

/// Output channels a layer produces per time step (flatten-dense: 1).
std::size_t output_channels(const LayerSpec& layer);

/// Parameter count of one layer; `time_steps` only matters for flatten-dense.
std::size_t count_params(const LayerSpec& layer, std::size_t time_steps);
std::size_t count_params(const ArchitectureSpec& spec);

/// Layer list formatted like a Keras summary with per-layer counts.
std::string summary_table(const ArchitectureSpec& spec);
/// 513317544 -> "513,317,544"
std::string format_count(std::size_t n);

// ---------------------------------------------------------------------------
// Parameters

struct ParamArray {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> data;

  std::size_t size() const { return data.size(); }
};

struct ParamShape {
  std::string name;
  std::vector<std::size_t> dims;
};

/// Names and shapes of every array the architecture needs, in canonical order.
/// Conv: "<layer>/kernel" (kernel_size, in, out), "<layer>/bias" (out).
/// Dense: "<layer>/kernel" (in, out), "<layer>/bias" (out).
/// GRU: "<layer>/W" (in, 3h), "<layer>/U" (h, 3h), "<layer>/b_w", "<layer>/b_u" (3h),
/// gate blocks ordered z, r, n. BGRU prefixes "forward/" and "backward/".
std::vector<ParamShape> param_layout(const ArchitectureSpec& spec);

class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(std::vector<ParamArray> arrays);

  static ModelParams zeros(const ArchitectureSpec& spec, bool allow_large = false);

  const std::vector<ParamArray>& arrays() const { return arrays_; }
  std::vector<ParamArray>& arrays() { return arrays_; }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const ParamArray& at(const std::string& name) const;
  ParamArray& at(const std::string& name);

  std::size_t total_size() const;
  void set_zero();
  // this += scale * other, element-wise; layouts must match.
  void add_scaled(const ModelParams& other, double scale);

 private:
  void rebuild_index();

  std::vector<ParamArray> arrays_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Specs above this size are only instantiated with allow_large.
inline constexpr std::size_t kLargeModelParams = 100'000'000;

/// Glorot-uniform for input/conv/dense kernels, orthogonal recurrent
/// kernels, zero biases.
ModelParams init_params(const ArchitectureSpec& spec, std::uint64_t seed, bool allow_large = false);

/// Throws DataError unless names and shapes equal param_layout(spec).
void check_params(const ArchitectureSpec& spec, const ModelParams& params);

// ---------------------------------------------------------------------------
// Layer kernels

template <typename Scalar>
struct ConvWeightsT {
  std::span<Scalar> kernel;  // (taps, in, out); tap k reads x[t + k - taps / 2]
  std::span<Scalar> bias;    // (out)
  std::size_t in = 0, out = 0;
  std::size_t taps = 3;
};
template <typename Scalar>
struct DenseWeightsT {
  std::span<Scalar> kernel;  // (in, out)
  std::span<Scalar> bias;    // (out)
  std::size_t in = 0, out = 0;
};
template <typename Scalar>
struct GruWeightsT {
  std::span<Scalar> W, U, b_w, b_u;
  std::size_t in = 0, hidden = 0;
};

using ConvWeights = ConvWeightsT<const double>;
using ConvGrads = ConvWeightsT<double>;
using DenseWeights = DenseWeightsT<const double>;
using DenseGrads = DenseWeightsT<double>;
using GruWeights = GruWeightsT<const double>;
using GruGrads = GruWeightsT<double>;

void apply_activation(Tensor& y, Activation act);

/// Stride-1 convolution with an odd kernel size and zero "same" padding.
Tensor conv1d_forward(const Tensor& x, const ConvWeights& w, Activation act);
/// Accumulates parameter gradients into `g`; returns dL/dx.
Tensor conv1d_backward(const Tensor& x, const Tensor& y, const Tensor& dy, const ConvWeights& w,
                       Activation act, const ConvGrads& g);

enum class DenseMode { Flatten, TimeDistributed };

/// Flatten: x (T, C) row-major flattened to T*C, result (out, 1).
/// TimeDistributed: per-step affine map, result (T, out).
Tensor dense_forward(const Tensor& x, const DenseWeights& w, DenseMode mode,
                     Activation act = Activation::Linear);
Tensor dense_backward(const Tensor& x, const Tensor& y, const Tensor& dy, const DenseWeights& w,
                      DenseMode mode, Activation act, const DenseGrads& g);

/// Per-step state kept for backpropagation through time.
struct GruCache {
  Tensor z, r, n, g;  // gates, candidate, and U_n h + b_un
  Tensor h;           // hidden sequence
  RowVector h0;
};

/// Reset-after GRU:
///   z = sig(W_z x + b_wz + U_z h + b_uz)
///   r = sig(W_r x + b_wr + U_r h + b_ur)
///   n = tanh(W_n x + b_wn + r * (U_n h + b_un))
///   h = (1 - z) * n + z * h_prev
/// Rejects non-finite input with NumericError.
Tensor gru_forward(const Tensor& x, const GruWeights& w, GruCache* cache = nullptr,
                   const RowVector* h0 = nullptr);
Tensor gru_backward(const Tensor& x, const Tensor& dh, const GruWeights& w, const GruCache& cache,
                    const GruGrads& g);

/// [forward(x) | reverse(backward(reverse(x)))] along channels.
Tensor bidirectional_forward(const Tensor& x, const GruWeights& fwd, const GruWeights& bwd,
                             GruCache* fwd_cache = nullptr, GruCache* bwd_cache = nullptr);
Tensor bidirectional_backward(const Tensor& x, const Tensor& dy, const GruWeights& fwd,
                              const GruWeights& bwd, const GruCache& fwd_cache,
                              const GruCache& bwd_cache, const GruGrads& gf, const GruGrads& gb);

// ---------------------------------------------------------------------------
// Whole-model passes

struct LayerTrace {
  Tensor input;
  Tensor output;
  GruCache fwd, bwd;
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  const Tensor& output() const { return layers.back().output; }
};

Tensor model_forward(const ArchitectureSpec& spec, const ModelParams& params, const Tensor& x,
                     ForwardTrace* trace = nullptr);

/// Window (T samples) in, one value per sample out.
std::vector<double> predict(const ArchitectureSpec& spec, const ModelParams& params,
                            std::span<const double> window);

/// Gradients of a loss with dL/d(output) = `d_output`. `d_input`, when
/// given, receives dL/dx.
ModelParams model_backward(const ArchitectureSpec& spec, const ModelParams& params,
                           const ForwardTrace& trace, const Tensor& d_output,
                           Tensor* d_input = nullptr);

struct LossAndGrads {
  double loss = 0.0;
  ModelParams grads;
};

/// loss = mean((pred - target)^2) over all output entries.
LossAndGrads mse_loss_and_grads(const ArchitectureSpec& spec, const ModelParams& params,
                                std::span<const double> window, std::span<const double> target);

// ---------------------------------------------------------------------------
// Verification

struct GradCheckShape {
  std::size_t time = 6;
  std::size_t in_channels = 2;
  std::size_t units = 3;
  std::size_t kernel_size = 3;  // conv only
};

/// Compares analytic and central finite-difference gradients (eps 1e-4) of
/// a random linear functional of one layer's output, over every parameter
/// and every input entry. Returns max |a - n| / max(|a|, |n|, 1e-3).
double gradient_check(LayerKind kind, const GradCheckShape& shape, std::uint64_t seed,
                      Activation act = Activation::Linear);

}  // namespace strokenet::nn
