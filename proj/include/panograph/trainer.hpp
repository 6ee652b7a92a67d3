#pragma once

#include "panograph/edgenet.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace panograph {

struct Hyperparameters {
  double learning_rate = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0005;
};

struct TrainState {
  EdgeNetParams params;
  EdgeNetParams velocity;  // zero-initialised, same shapes as params
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;  // completed epochs
  Hyperparameters hyper;

  static TrainState fresh(std::uint64_t seed, const Hyperparameters& hyper = {});
};

// v <- momentum * v + (g + weight_decay * theta); theta <- theta - lr * v.
// Parameters and velocity are kept at float32 precision so a checkpoint
// restores the state exactly. Throws TrainingError on non-finite gradients.
void sgd_step(TrainState& state, const EdgeNetParams& grads);

struct TrainSample {
  std::string name;
  EdgeNetInput input;
  EdgeLabelMatrix labels;
};

struct TrainConfig {
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  LossOptions loss;
  double tau = 0.5;  // threshold used for the reported edge accuracy
  // Where to write the state if the loss diverges (empty: no dump).
  std::filesystem::path divergence_dump;
  // Metadata stored alongside a divergence dump.
  std::uint32_t num_classes = 0;
  double voxel_size = 0.1;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double edge_accuracy = 0.0;
  std::size_t frames = 0;  // frames that contributed (two or more clusters)
};

// Fraction of off-diagonal ordered pairs whose binarised prediction matches
// the label.
double edge_accuracy(const Matrix& p_connect, const EdgeLabelMatrix& labels, double tau);
std::size_t edge_correct_count(const Matrix& p_connect, const EdgeLabelMatrix& labels, double tau);

using EpochCallback = std::function<void(const TrainState&, const EpochStats&)>;

// Runs epochs state.epoch + 1 .. config.epochs. Each epoch visits the samples
// in an order shuffled from (seed, epoch) and takes one SGD step per frame.
// Statistics are measured on the forward pass that produced each step's
// gradient.
std::vector<EpochStats> train(const std::vector<TrainSample>& samples, const TrainConfig& config, TrainState& state,
                              const EpochCallback& on_epoch = {});

// ---------------------------------------------------------------------------
// Checkpoint container

struct Checkpoint {
  TrainState state;
  std::uint32_t num_classes = 0;
  double voxel_size = 0.1;
  std::uint64_t seed = 0;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// FormatError on framing problems, ShapeError when a tensor shape differs
// from the model definition.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace panograph
