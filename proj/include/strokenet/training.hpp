#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strokenet/neural.hpp"

namespace strokenet::nn {

enum class Optimizer { Sgd, Adam };

Optimizer parse_optimizer(const std::string& text);
std::string to_string(Optimizer opt);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Worker threads for per-sample gradients; 0 picks hardware concurrency.
  // Results do not depend on this value.
  int threads = 0;
};

void validate(const TrainConfig& cfg);

struct Example {
  std::vector<double> input;
  std::vector<double> target;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  bool diverged = false;
  std::string message;
};

/// Mean MSE over a dataset, summed in index order.
double evaluate_loss(const ArchitectureSpec& spec, const ModelParams& params,
                     std::span<const Example> data, int threads = 0);

/// Mini-batch training with per-epoch seeded shuffling. Per-sample
/// gradients are summed in sample order, so the result is bit-identical for
/// any thread count. Train loss per epoch is the mean of the per-sample
/// losses seen during that epoch. A non-finite loss stops training with
/// `diverged` set and the history so far.
TrainResult train_model(const ArchitectureSpec& spec, std::span<const Example> train,
                        std::span<const Example> validation, const TrainConfig& cfg,
                        std::optional<ModelParams> initial = std::nullopt);

}  // namespace strokenet::nn
