#include "strokenet/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "strokenet/errors.hpp"
#include "strokenet/rng.hpp"

namespace strokenet::nn {

Optimizer parse_optimizer(const std::string& text) {
  if (text == "adam") return Optimizer::Adam;
  if (text == "sgd") return Optimizer::Sgd;
  throw ConfigError("unknown optimizer '" + text + "'");
}

std::string to_string(Optimizer opt) { return opt == Optimizer::Adam ? "adam" : "sgd"; }

void validate(const TrainConfig& cfg) {
  if (cfg.learning_rate < 0.0 || !std::isfinite(cfg.learning_rate))
    throw ConfigError("learning_rate must be finite and non-negative");
  if (cfg.epochs <= 0) throw ConfigError("epochs must be positive");
  if (cfg.batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (cfg.threads < 0) throw ConfigError("threads must be non-negative");
}

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(threads));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double sample_loss(const ArchitectureSpec& spec, const ModelParams& params, const Example& ex) {
  const auto pred = predict(spec, params, ex.input);
  if (pred.size() != ex.target.size()) throw DataError("target length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - ex.target[i];
    s += e * e;
  }
  return s / static_cast<double>(pred.size());
}

struct AdamState {
  ModelParams m, v;
  long step = 0;
};

}  // namespace

double evaluate_loss(const ArchitectureSpec& spec, const ModelParams& params,
                     std::span<const Example> data, int threads) {
  if (data.empty()) return 0.0;
  std::vector<double> losses(data.size());
  parallel_for(data.size(), resolve_threads(threads),
               [&](std::size_t i) { losses[i] = sample_loss(spec, params, data[i]); });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(data.size());
}

TrainResult train_model(const ArchitectureSpec& spec, std::span<const Example> train,
                        std::span<const Example> validation, const TrainConfig& cfg,
                        std::optional<ModelParams> initial) {
  validate(cfg);
  if (train.empty()) throw DataError("training set is empty");

  TrainResult result;
  result.params = initial ? std::move(*initial) : init_params(spec, mix_seed(cfg.seed, 1));
  check_params(spec, result.params);
  ModelParams& params = result.params;

  AdamState adam;
  if (cfg.optimizer == Optimizer::Adam) {
    adam.m = params;
    adam.m.set_zero();
    adam.v = adam.m;
  }

  const int threads = resolve_threads(cfg.threads);
  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  std::vector<double> epoch_losses(n);
  Rng shuffle_rng(mix_seed(cfg.seed, 2));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order.begin(), order.end());

    for (std::size_t b0 = 0; b0 < n; b0 += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t b1 = std::min(n, b0 + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t bs = b1 - b0;

      ModelParams batch_grad = params;
      batch_grad.set_zero();
      // Chunks of `threads` samples run concurrently; their gradients are
      // added to the batch total in sample order.
      for (std::size_t c0 = b0; c0 < b1; c0 += static_cast<std::size_t>(threads)) {
        const std::size_t c1 = std::min(b1, c0 + static_cast<std::size_t>(threads));
        std::vector<LossAndGrads> parts(c1 - c0);
        try {
          parallel_for(parts.size(), threads, [&](std::size_t i) {
            const Example& ex = train[order[c0 + i]];
            parts[i] = mse_loss_and_grads(spec, params, ex.input, ex.target);
          });
        } catch (const NumericError& e) {
          result.diverged = true;
          result.message = "epoch " + std::to_string(epoch) + ": " + e.what();
          return result;
        }
        for (std::size_t i = 0; i < parts.size(); ++i) {
          epoch_losses[order[c0 + i]] = parts[i].loss;
          batch_grad.add_scaled(parts[i].grads, 1.0);
        }
      }

      const double scale = 1.0 / static_cast<double>(bs);
      if (cfg.optimizer == Optimizer::Sgd) {
        params.add_scaled(batch_grad, -cfg.learning_rate * scale);
        continue;
      }
      ++adam.step;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.step));
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.step));
      for (std::size_t a = 0; a < params.arrays().size(); ++a) {
        auto& p = params.arrays()[a].data;
        auto& m = adam.m.arrays()[a].data;
        auto& v = adam.v.arrays()[a].data;
        const auto& g = batch_grad.arrays()[a].data;
        for (std::size_t j = 0; j < p.size(); ++j) {
          const double gj = g[j] * scale;
          m[j] = cfg.adam_beta1 * m[j] + (1.0 - cfg.adam_beta1) * gj;
          v[j] = cfg.adam_beta2 * v[j] + (1.0 - cfg.adam_beta2) * gj * gj;
          p[j] -= cfg.learning_rate * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg.adam_epsilon);
        }
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    double total = 0.0;
    for (double l : epoch_losses) total += l;
    rec.train_loss = total / static_cast<double>(n);
    if (!validation.empty()) {
      try {
        rec.val_loss = evaluate_loss(spec, params, validation, threads);
      } catch (const NumericError& e) {
        result.diverged = true;
        result.message = "epoch " + std::to_string(epoch) + " validation: " + e.what();
        return result;
      }
    }
    result.history.push_back(rec);
    if (!std::isfinite(rec.train_loss) || (rec.val_loss && !std::isfinite(*rec.val_loss))) {
      result.diverged = true;
      result.message = "epoch " + std::to_string(epoch) + ": non-finite loss";
      return result;
    }
  }
  return result;
}

}  // namespace strokenet::nn
