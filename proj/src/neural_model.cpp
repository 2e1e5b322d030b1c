#include <algorithm>
#include <cmath>

#include "strokenet/errors.hpp"
#include "strokenet/neural.hpp"
#include "strokenet/rng.hpp"

namespace strokenet::nn {

namespace {

std::span<const double> cview(const ParamArray& a) { return {a.data.data(), a.data.size()}; }
std::span<double> mview(ParamArray& a) { return {a.data.data(), a.data.size()}; }

ConvWeights conv_weights(const LayerSpec& l, const ModelParams& p) {
  return {cview(p.at(l.name + "/kernel")), cview(p.at(l.name + "/bias")), l.in_channels,
          l.out_units, l.kernel_size};
}
ConvGrads conv_grads(const LayerSpec& l, ModelParams& g) {
  return {mview(g.at(l.name + "/kernel")), mview(g.at(l.name + "/bias")), l.in_channels,
          l.out_units, l.kernel_size};
}

DenseWeights dense_weights(const LayerSpec& l, const ModelParams& p, std::size_t T) {
  const std::size_t in = l.kind == LayerKind::DenseFlatten ? T * l.in_channels : l.in_channels;
  return {cview(p.at(l.name + "/kernel")), cview(p.at(l.name + "/bias")), in, l.out_units};
}
DenseGrads dense_grads(const LayerSpec& l, ModelParams& g, std::size_t T) {
  const std::size_t in = l.kind == LayerKind::DenseFlatten ? T * l.in_channels : l.in_channels;
  return {mview(g.at(l.name + "/kernel")), mview(g.at(l.name + "/bias")), in, l.out_units};
}

std::string gru_prefix(const LayerSpec& l, const char* dir) { return l.name + "/" + dir; }

GruWeights gru_weights(const LayerSpec& l, const ModelParams& p, const char* dir) {
  const auto pre = gru_prefix(l, dir);
  return {cview(p.at(pre + "W")), cview(p.at(pre + "U")),   cview(p.at(pre + "b_w")),
          cview(p.at(pre + "b_u")), l.in_channels, l.out_units};
}
GruGrads gru_grads(const LayerSpec& l, ModelParams& g, const char* dir) {
  const auto pre = gru_prefix(l, dir);
  return {mview(g.at(pre + "W")), mview(g.at(pre + "U")),   mview(g.at(pre + "b_w")),
          mview(g.at(pre + "b_u")), l.in_channels, l.out_units};
}

DenseMode dense_mode(LayerKind kind) {
  return kind == LayerKind::DenseFlatten ? DenseMode::Flatten : DenseMode::TimeDistributed;
}

ModelParams zeros_like(const ModelParams& params) {
  std::vector<ParamArray> arrays;
  arrays.reserve(params.arrays().size());
  for (const auto& a : params.arrays())
    arrays.push_back({a.name, a.dims, std::vector<double>(a.data.size(), 0.0)});
  return ModelParams(std::move(arrays));
}

}  // namespace

Tensor model_forward(const ArchitectureSpec& spec, const ModelParams& params, const Tensor& x,
                     ForwardTrace* trace) {
  check_params(spec, params);
  if (static_cast<std::size_t>(x.rows()) != spec.window_length)
    throw DataError(spec.name + ": expected " + std::to_string(spec.window_length) +
                    " time steps, got " + std::to_string(x.rows()));
  if (trace != nullptr) trace->layers.assign(spec.layers.size(), {});

  Tensor h = x;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    LayerTrace* lt = trace != nullptr ? &trace->layers[i] : nullptr;
    if (lt != nullptr) lt->input = h;
    Tensor y;
    switch (layer.kind) {
      case LayerKind::Conv1d:
        y = conv1d_forward(h, conv_weights(layer, params), layer.activation);
        break;
      case LayerKind::DenseFlatten:
      case LayerKind::DenseTimeDistributed:
        y = dense_forward(h, dense_weights(layer, params, spec.window_length),
                          dense_mode(layer.kind), layer.activation);
        break;
      case LayerKind::Gru:
        y = gru_forward(h, gru_weights(layer, params, ""), lt != nullptr ? &lt->fwd : nullptr);
        break;
      case LayerKind::Bgru:
        y = bidirectional_forward(h, gru_weights(layer, params, "forward/"),
                                  gru_weights(layer, params, "backward/"),
                                  lt != nullptr ? &lt->fwd : nullptr,
                                  lt != nullptr ? &lt->bwd : nullptr);
        break;
    }
    if (lt != nullptr) lt->output = y;
    h = std::move(y);
  }
  return h;
}

std::vector<double> predict(const ArchitectureSpec& spec, const ModelParams& params,
                            std::span<const double> window) {
  const Tensor x = Eigen::Map<const Tensor>(window.data(), static_cast<Eigen::Index>(window.size()), 1);
  const Tensor y = model_forward(spec, params, x);
  return {y.data(), y.data() + y.size()};
}

ModelParams model_backward(const ArchitectureSpec& spec, const ModelParams& params,
                           const ForwardTrace& trace, const Tensor& d_output, Tensor* d_input) {
  if (trace.layers.size() != spec.layers.size()) throw DataError("trace does not match spec");
  ModelParams grads = zeros_like(params);
  Tensor d = d_output;
  for (std::size_t k = spec.layers.size(); k-- > 0;) {
    const auto& layer = spec.layers[k];
    const auto& lt = trace.layers[k];
    switch (layer.kind) {
      case LayerKind::Conv1d:
        d = conv1d_backward(lt.input, lt.output, d, conv_weights(layer, params), layer.activation,
                            conv_grads(layer, grads));
        break;
      case LayerKind::DenseFlatten:
      case LayerKind::DenseTimeDistributed:
        d = dense_backward(lt.input, lt.output, d, dense_weights(layer, params, spec.window_length),
                           dense_mode(layer.kind), layer.activation,
                           dense_grads(layer, grads, spec.window_length));
        break;
      case LayerKind::Gru:
        d = gru_backward(lt.input, d, gru_weights(layer, params, ""), lt.fwd,
                         gru_grads(layer, grads, ""));
        break;
      case LayerKind::Bgru:
        d = bidirectional_backward(lt.input, d, gru_weights(layer, params, "forward/"),
                                   gru_weights(layer, params, "backward/"), lt.fwd, lt.bwd,
                                   gru_grads(layer, grads, "forward/"),
                                   gru_grads(layer, grads, "backward/"));
        break;
    }
  }
  if (d_input != nullptr) *d_input = std::move(d);
  return grads;
}

LossAndGrads mse_loss_and_grads(const ArchitectureSpec& spec, const ModelParams& params,
                                std::span<const double> window, std::span<const double> target) {
  const Tensor x =
      Eigen::Map<const Tensor>(window.data(), static_cast<Eigen::Index>(window.size()), 1);
  ForwardTrace trace;
  const Tensor y = model_forward(spec, params, x, &trace);
  if (static_cast<std::size_t>(y.size()) != target.size())
    throw DataError("target has " + std::to_string(target.size()) + " values, model emits " +
                    std::to_string(y.size()));
  if (!y.allFinite()) throw NumericError(spec.name + ": non-finite model output");

  const auto n = static_cast<double>(target.size());
  Tensor d(y.rows(), y.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double e = y.data()[i] - target[static_cast<std::size_t>(i)];
    loss += e * e;
    d.data()[i] = 2.0 * e / n;
  }
  loss /= n;
  if (!std::isfinite(loss)) throw NumericError(spec.name + ": non-finite loss");
  return {loss, model_backward(spec, params, trace, d)};
}

// ---------------------------------------------------------------------------

double gradient_check(LayerKind kind, const GradCheckShape& shape, std::uint64_t seed,
                      Activation act) {
  ArchitectureSpec spec{"gradcheck", shape.time, {}};
  LayerSpec layer{"layer", kind, shape.in_channels, shape.units, act, 0, shape.kernel_size};
  if (kind == LayerKind::Gru || kind == LayerKind::Bgru) layer.activation = Activation::Tanh;
  spec.layers.push_back(layer);

  Rng rng(seed);
  ModelParams params = ModelParams::zeros(spec);
  for (auto& a : params.arrays())
    for (auto& v : a.data) v = rng.uniform(-0.8, 0.8);
  Tensor x(static_cast<Eigen::Index>(shape.time), static_cast<Eigen::Index>(shape.in_channels));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);

  ForwardTrace trace;
  const Tensor y = model_forward(spec, params, x, &trace);
  Tensor proj(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < proj.size(); ++i) proj.data()[i] = rng.uniform(-1.0, 1.0);

  const auto loss = [&](const ModelParams& p, const Tensor& input) {
    return (model_forward(spec, p, input).array() * proj.array()).sum();
  };

  Tensor dx;
  const ModelParams grads = model_backward(spec, params, trace, proj, &dx);

  constexpr double eps = 1e-4;
  constexpr double floor = 1e-3;
  double worst = 0.0;
  const auto record = [&](double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };

  for (std::size_t ai = 0; ai < params.arrays().size(); ++ai) {
    auto& values = params.arrays()[ai].data;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + eps;
      const double up = loss(params, x);
      values[j] = saved - eps;
      const double down = loss(params, x);
      values[j] = saved;
      record(grads.arrays()[ai].data[j], (up - down) / (2 * eps));
    }
  }
  Tensor xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = xp.data()[i];
    xp.data()[i] = saved + eps;
    const double up = loss(params, xp);
    xp.data()[i] = saved - eps;
    const double down = loss(params, xp);
    xp.data()[i] = saved;
    record(dx.data()[i], (up - down) / (2 * eps));
  }
  return worst;
}

}  // namespace strokenet::nn
