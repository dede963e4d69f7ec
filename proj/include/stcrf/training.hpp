#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stcrf/config.hpp"
#include "stcrf/intention.hpp"
#include "stcrf/model.hpp"

namespace stcrf {

struct TrainConfig {
  int epochs = 250;
  int batch_size = 1;  // windows per optimizer step (gradients averaged)
  double learning_rate = 0.01;
  double momentum = 0.9;
  double lr_decay = 0.5;       // multiplicative step decay
  int lr_decay_every = 100;    // epochs; 0 disables
  double clip_norm = 5.0;      // global gradient-norm clip; 0 disables
  LossWeights loss_weights;
  unsigned seed = 1;
  ModelConfig model;
  LabelerConfig labeler;
  bool verbose = false;

  static TrainConfig from_config(const KeyValueConfig& cfg);
};

struct EpochRecord {
  int epoch = 0;
  LossComponents train_loss;
  double val_ade = 0.0;
  double val_fde = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

// Deterministic given the seed: fixed init, fixed shuffle order.
// When `validation` is empty the training set doubles as validation.
TrainResult train(Model& model, const std::vector<SceneWindow>& dataset,
                  const std::vector<SceneWindow>& validation, const TrainConfig& config,
                  std::ostream* log = nullptr);

// Versioned text checkpoint; parameter values use hex floats so the
// round-trip is bit exact.
void save_checkpoint(const Model& model, const TrainConfig& config, int epoch,
                     const std::vector<EpochRecord>& history, const std::string& path);

struct Checkpoint {
  TrainConfig config;
  int epoch = 0;
  std::vector<EpochRecord> history;
};

Checkpoint load_checkpoint(Model& model, const std::string& path);
// Reads only the config header, to construct the Model before loading weights.
TrainConfig peek_checkpoint_config(const std::string& path);

}  // namespace stcrf
