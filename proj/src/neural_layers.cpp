#include <cmath>

#include "strokenet/errors.hpp"
#include "strokenet/neural.hpp"

namespace strokenet::nn {

namespace {

using ConstMap = Eigen::Map<const Tensor>;
using Map = Eigen::Map<Tensor>;
using ConstRowMap = Eigen::Map<const RowVector>;
using RowMap = Eigen::Map<RowVector>;

auto idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

void require(bool ok, const std::string& what) {
  if (!ok) throw DataError(what);
}

// dy (w.r.t. activated output) -> gradient w.r.t. the pre-activation.
Tensor activation_backward(const Tensor& y, const Tensor& dy, Activation act) {
  switch (act) {
    case Activation::Relu: return (y.array() > 0.0).select(dy, 0.0);
    case Activation::Tanh: return dy.array() * (1.0 - y.array().square());
    case Activation::Linear: break;
  }
  return dy;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Rows [t0, t0 + len) of the output read input rows shifted by `offset`.
struct TapRange {
  Eigen::Index t0, len;
};
TapRange tap_range(Eigen::Index T, Eigen::Index offset) {
  const Eigen::Index t0 = std::max<Eigen::Index>(0, -offset);
  const Eigen::Index t1 = std::min<Eigen::Index>(T, T - offset);
  return {t0, std::max<Eigen::Index>(0, t1 - t0)};
}

}  // namespace

void apply_activation(Tensor& y, Activation act) {
  switch (act) {
    case Activation::Relu: y = y.cwiseMax(0.0); break;
    case Activation::Tanh: y = y.array().tanh(); break;
    case Activation::Linear: break;
  }
}

Tensor conv1d_forward(const Tensor& x, const ConvWeights& w, Activation act) {
  require(static_cast<std::size_t>(x.cols()) == w.in, "conv1d: input has " +
                                                          std::to_string(x.cols()) +
                                                          " channels, kernel expects " +
                                                          std::to_string(w.in));
  require(w.taps % 2 == 1 && w.kernel.size() == w.taps * w.in * w.out && w.bias.size() == w.out,
          "conv1d: kernel/bias shape mismatch");
  const Eigen::Index half = idx(w.taps / 2);
  const Eigen::Index T = x.rows();
  Tensor y(T, idx(w.out));
  y.rowwise() = ConstRowMap(w.bias.data(), idx(w.out));
  for (Eigen::Index k = 0; k < idx(w.taps); ++k) {
    const ConstMap tap(w.kernel.data() + k * idx(w.in * w.out), idx(w.in), idx(w.out));
    const auto [t0, len] = tap_range(T, k - half);
    if (len > 0) y.middleRows(t0, len).noalias() += x.middleRows(t0 + k - half, len) * tap;
  }
  apply_activation(y, act);
  return y;
}

Tensor conv1d_backward(const Tensor& x, const Tensor& y, const Tensor& dy, const ConvWeights& w,
                       Activation act, const ConvGrads& g) {
  const Eigen::Index T = x.rows();
  const Tensor dpre = activation_backward(y, dy, act);
  RowMap(g.bias.data(), idx(w.out)) += dpre.colwise().sum();
  Tensor dx = Tensor::Zero(T, idx(w.in));
  const Eigen::Index half = idx(w.taps / 2);
  for (Eigen::Index k = 0; k < idx(w.taps); ++k) {
    const ConstMap tap(w.kernel.data() + k * idx(w.in * w.out), idx(w.in), idx(w.out));
    Map dtap(g.kernel.data() + k * idx(w.in * w.out), idx(w.in), idx(w.out));
    const auto [t0, len] = tap_range(T, k - half);
    if (len == 0) continue;
    dtap.noalias() += x.middleRows(t0 + k - half, len).transpose() * dpre.middleRows(t0, len);
    dx.middleRows(t0 + k - half, len).noalias() += dpre.middleRows(t0, len) * tap.transpose();
  }
  return dx;
}

Tensor dense_forward(const Tensor& x, const DenseWeights& w, DenseMode mode, Activation act) {
  require(w.bias.size() == w.out && w.kernel.size() == w.in * w.out,
          "dense: kernel/bias shape mismatch");
  const ConstMap kernel(w.kernel.data(), idx(w.in), idx(w.out));
  const ConstRowMap bias(w.bias.data(), idx(w.out));
  Tensor y;
  if (mode == DenseMode::Flatten) {
    require(static_cast<std::size_t>(x.size()) == w.in,
            "dense(flatten): input has " + std::to_string(x.size()) + " values, kernel expects " +
                std::to_string(w.in));
    const ConstRowMap flat(x.data(), x.size());
    RowVector row = flat * kernel + bias;
    y = Eigen::Map<Tensor>(row.data(), idx(w.out), 1);
  } else {
    require(static_cast<std::size_t>(x.cols()) == w.in,
            "dense: input has " + std::to_string(x.cols()) + " channels, kernel expects " +
                std::to_string(w.in));
    y = x * kernel;
    y.rowwise() += bias;
  }
  apply_activation(y, act);
  return y;
}

Tensor dense_backward(const Tensor& x, const Tensor& y, const Tensor& dy, const DenseWeights& w,
                      DenseMode mode, Activation act, const DenseGrads& g) {
  const Tensor dpre = activation_backward(y, dy, act);
  const ConstMap kernel(w.kernel.data(), idx(w.in), idx(w.out));
  Map dkernel(g.kernel.data(), idx(w.in), idx(w.out));
  RowMap dbias(g.bias.data(), idx(w.out));
  if (mode == DenseMode::Flatten) {
    const ConstRowMap flat(x.data(), x.size());
    const ConstRowMap drow(dpre.data(), dpre.size());
    dkernel.noalias() += flat.transpose() * drow;
    dbias += drow;
    RowVector dflat = drow * kernel.transpose();
    return Eigen::Map<Tensor>(dflat.data(), x.rows(), x.cols());
  }
  dkernel.noalias() += x.transpose() * dpre;
  dbias += dpre.colwise().sum();
  return dpre * kernel.transpose();
}

Tensor gru_forward(const Tensor& x, const GruWeights& w, GruCache* cache, const RowVector* h0) {
  const auto H = idx(w.hidden);
  require(static_cast<std::size_t>(x.cols()) == w.in,
          "gru: input has " + std::to_string(x.cols()) + " channels, W expects " +
              std::to_string(w.in));
  require(w.W.size() == w.in * 3 * w.hidden && w.U.size() == w.hidden * 3 * w.hidden &&
              w.b_w.size() == 3 * w.hidden && w.b_u.size() == 3 * w.hidden,
          "gru: parameter shape mismatch");
  if (!x.allFinite()) throw NumericError("gru: non-finite input");
  if (h0 != nullptr) require(h0->size() == H, "gru: h0 size mismatch");

  const ConstMap W(w.W.data(), idx(w.in), 3 * H);
  const ConstMap U(w.U.data(), H, 3 * H);
  const ConstRowMap b_w(w.b_w.data(), 3 * H);
  const ConstRowMap b_u(w.b_u.data(), 3 * H);

  const Eigen::Index T = x.rows();
  Tensor xw = x * W;
  xw.rowwise() += b_w;

  Tensor h_seq(T, H);
  RowVector h = h0 != nullptr ? *h0 : RowVector::Zero(H);
  if (cache != nullptr) {
    cache->z.resize(T, H);
    cache->r.resize(T, H);
    cache->n.resize(T, H);
    cache->g.resize(T, H);
    cache->h0 = h;
  }
  RowVector hu(3 * H);
  RowVector z(H), r(H), n(H);
  for (Eigen::Index t = 0; t < T; ++t) {
    hu.noalias() = h * U;
    hu += b_u;
    for (Eigen::Index j = 0; j < H; ++j) {
      z[j] = sigmoid(xw(t, j) + hu[j]);
      r[j] = sigmoid(xw(t, H + j) + hu[H + j]);
      n[j] = std::tanh(xw(t, 2 * H + j) + r[j] * hu[2 * H + j]);
      h[j] = (1.0 - z[j]) * n[j] + z[j] * h[j];
    }
    h_seq.row(t) = h;
    if (cache != nullptr) {
      cache->z.row(t) = z;
      cache->r.row(t) = r;
      cache->n.row(t) = n;
      cache->g.row(t) = hu.tail(H);
    }
  }
  if (cache != nullptr) cache->h = h_seq;
  return h_seq;
}

Tensor gru_backward(const Tensor& x, const Tensor& dh, const GruWeights& w, const GruCache& cache,
                    const GruGrads& g) {
  const auto H = idx(w.hidden);
  const Eigen::Index T = x.rows();
  const ConstMap W(w.W.data(), idx(w.in), 3 * H);
  const ConstMap U(w.U.data(), H, 3 * H);

  // Gradients w.r.t. the input-side and recurrent-side gate pre-activations.
  Tensor da_x(T, 3 * H);
  Tensor da_h(T, 3 * H);
  RowVector dh_next = RowVector::Zero(H);
  RowVector dh_t(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    dh_t = dh.row(t) + dh_next;
    for (Eigen::Index j = 0; j < H; ++j) {
      const double z = cache.z(t, j), r = cache.r(t, j), n = cache.n(t, j);
      const double hp = t > 0 ? cache.h(t - 1, j) : cache.h0[j];
      const double dn = dh_t[j] * (1.0 - z);
      const double dz = dh_t[j] * (hp - n);
      const double dan = dn * (1.0 - n * n);
      const double daz = dz * z * (1.0 - z);
      const double dr = dan * cache.g(t, j);
      const double dar = dr * r * (1.0 - r);
      da_x(t, j) = daz;
      da_x(t, H + j) = dar;
      da_x(t, 2 * H + j) = dan;
      da_h(t, j) = daz;
      da_h(t, H + j) = dar;
      da_h(t, 2 * H + j) = dan * r;
      dh_next[j] = dh_t[j] * z;
    }
    dh_next.noalias() += da_h.row(t) * U.transpose();
  }

  Tensor h_prev(T, H);
  h_prev.row(0) = cache.h0;
  if (T > 1) h_prev.bottomRows(T - 1) = cache.h.topRows(T - 1);

  Map(g.W.data(), idx(w.in), 3 * H).noalias() += x.transpose() * da_x;
  Map(g.U.data(), H, 3 * H).noalias() += h_prev.transpose() * da_h;
  RowMap(g.b_w.data(), 3 * H) += da_x.colwise().sum();
  RowMap(g.b_u.data(), 3 * H) += da_h.colwise().sum();
  return da_x * W.transpose();
}

Tensor bidirectional_forward(const Tensor& x, const GruWeights& fwd, const GruWeights& bwd,
                             GruCache* fwd_cache, GruCache* bwd_cache) {
  require(fwd.hidden == bwd.hidden, "bidirectional: direction sizes differ");
  const auto H = idx(fwd.hidden);
  const Tensor reversed = x.colwise().reverse();
  const Tensor hf = gru_forward(x, fwd, fwd_cache);
  const Tensor hb = gru_forward(reversed, bwd, bwd_cache);
  Tensor y(x.rows(), 2 * H);
  y.leftCols(H) = hf;
  y.rightCols(H) = hb.colwise().reverse();
  return y;
}

Tensor bidirectional_backward(const Tensor& x, const Tensor& dy, const GruWeights& fwd,
                              const GruWeights& bwd, const GruCache& fwd_cache,
                              const GruCache& bwd_cache, const GruGrads& gf, const GruGrads& gb) {
  const auto H = idx(fwd.hidden);
  const Tensor reversed = x.colwise().reverse();
  const Tensor dhf = dy.leftCols(H);
  const Tensor dhb = dy.rightCols(H).colwise().reverse();
  Tensor dx = gru_backward(x, dhf, fwd, fwd_cache, gf);
  const Tensor dxb = gru_backward(reversed, dhb, bwd, bwd_cache, gb);
  dx += dxb.colwise().reverse();
  return dx;
}

}  // namespace strokenet::nn
