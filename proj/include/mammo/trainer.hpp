/**
 * Copyright 2026 The mammopatch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mammo/augment.hpp"
#include "mammo/backbone.hpp"
#include "mammo/network.hpp"
#include "mammo/patchset.hpp"

namespace mammo {

struct TrainConfig {
  int batch_size = 32;
  int epochs = 15;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::optional<AugmentPolicy> augment_policy;
  // Stop once validation loss has not improved for this many epochs and
  // restore the best weights.
  std::optional<int> early_stop_patience;
};

// 15 epochs, or 30 when augmenting.
int default_epochs(bool augment);

// Throws ConfigError on a non-positive batch size, epoch count, learning
// rate or patience, or an invalid augmentation policy.
void validate_config(const TrainConfig& config);

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  bool operator==(const EpochStats&) const = default;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  bool stopped_early = false;
  int best_epoch = 0;  // epoch whose weights were kept, 1-based

  bool operator==(const TrainHistory&) const = default;
};

struct TrainResult {
  Model model;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Mini-batch Adam on binary cross-entropy. Each epoch visits the training
// split in an order drawn from (seed, epoch); the final partial batch is
// kept. Training loss and accuracy are averaged over the epoch's batches as
// they are trained. Throws InputError for an empty train or validation
// split or a single-class train split, TrainingError on a non-finite loss.
TrainResult train(const ModelSpec& spec, const SplitData& data, const TrainConfig& config,
                  const BackboneRegistry& registry = default_backbones(),
                  const EpochCallback& on_epoch = {});

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;  // mean binary cross-entropy
  std::vector<int> labels;    // 1 = pathological
  std::vector<double> scores;  // predicted probability of the pathological class
};

// Score >= threshold counts as pathological.
Evaluation evaluate(Model& model, std::span<const PatchRecord> split, double threshold = 0.5,
                    int chunk = 32);

int label_value(const PatchRecord& record);

// Copies record images into an N x H x W x 1 tensor. Throws InputError for
// records whose image is not rows x cols.
Tensor to_tensor(std::span<const PatchRecord> records, int rows, int cols);

// `epoch,train_loss,train_acc,val_loss,val_acc`
void save_history_csv(const TrainHistory& history, const std::filesystem::path& path);
TrainHistory load_history_csv(const std::filesystem::path& path);

// `id,label,score`
void save_scores_csv(std::span<const PatchRecord> records, const Evaluation& evaluation,
                     const std::filesystem::path& path);

struct ScoreTable {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<double> scores;
};
ScoreTable load_scores_csv(const std::filesystem::path& path);

}  // namespace mammo
