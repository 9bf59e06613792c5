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

#include "mammo/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <string>

#include "csv.hpp"
#include "mammo/error.hpp"
#include "mammo/rng.hpp"

namespace mammo {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;

// Binary cross-entropy of a logit, in the overflow-free form.
double bce(double z, int y) { return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double parse_number(const std::string& s, const std::filesystem::path& path, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InputError(path.string() + ":" + std::to_string(line) + ": '" + s +
                     "' is not a number");
  }
  return v;
}

int require_column(const csv::Table& table, const char* name, const std::filesystem::path& path) {
  const int c = table.column(name);
  if (c < 0) throw InputError("'" + path.string() + "' lacks a '" + name + "' column");
  return c;
}

void check_image(const PatchRecord& r, int rows, int cols) {
  if (r.image.rows != rows || r.image.cols != cols) {
    throw InputError("record '" + r.id + "' has a " + std::to_string(r.image.rows) + "x" +
                     std::to_string(r.image.cols) + " image; the model expects " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

int default_epochs(bool augment) { return augment ? 30 : 15; }

void validate_config(const TrainConfig& config) {
  if (config.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (config.early_stop_patience && *config.early_stop_patience < 1) {
    throw ConfigError("early-stop patience must be >= 1");
  }
  if (config.augment_policy) validate_policy(*config.augment_policy);
}

int label_value(const PatchRecord& record) {
  return record.label == Label::Pathological ? 1 : 0;
}

Tensor to_tensor(std::span<const PatchRecord> records, int rows, int cols) {
  Tensor t(static_cast<int>(records.size()), 1, rows, cols);
  for (std::size_t i = 0; i < records.size(); ++i) {
    check_image(records[i], rows, cols);
    std::copy(records[i].image.pixels.begin(), records[i].image.pixels.end(),
              t.sample(static_cast<int>(i)));
  }
  return t;
}

Evaluation evaluate(Model& model, std::span<const PatchRecord> split, double threshold,
                    int chunk) {
  if (split.empty()) throw InputError("cannot evaluate on an empty split");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InputError("threshold must be in [0, 1]");
  if (chunk < 1) throw InputError("evaluation chunk must be >= 1");
  const TensorShape& in = model.spec().input_shape;
  Evaluation out;
  out.labels.reserve(split.size());
  out.scores.reserve(split.size());
  Tensor batch;
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < split.size(); start += chunk) {
    const std::size_t m = std::min<std::size_t>(chunk, split.size() - start);
    if (batch.n != static_cast<int>(m)) batch.resize(static_cast<int>(m), 1, in.height, in.width);
    for (std::size_t i = 0; i < m; ++i) {
      const PatchRecord& r = split[start + i];
      check_image(r, in.height, in.width);
      std::copy(r.image.pixels.begin(), r.image.pixels.end(), batch.sample(static_cast<int>(i)));
    }
    const std::vector<float>& logits = model.forward(batch);
    for (std::size_t i = 0; i < m; ++i) {
      const int y = label_value(split[start + i]);
      const double p = sigmoid(logits[i]);
      loss += bce(logits[i], y);
      correct += (p >= threshold) == (y == 1);
      out.labels.push_back(y);
      out.scores.push_back(p);
    }
  }
  out.loss = loss / static_cast<double>(split.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(split.size());
  return out;
}

TrainResult train(const ModelSpec& spec, const SplitData& data, const TrainConfig& config,
                  const BackboneRegistry& registry, const EpochCallback& on_epoch) {
  validate_config(config);
  if (data.train.empty()) throw InputError("training split is empty");
  if (data.validation.empty()) throw InputError("validation split is empty");
  const std::size_t positives = static_cast<std::size_t>(
      std::count_if(data.train.begin(), data.train.end(),
                    [](const PatchRecord& r) { return r.label == Label::Pathological; }));
  if (positives == 0 || positives == data.train.size()) {
    throw InputError("training split holds a single class; both labels are required");
  }
  const int rows = spec.input_shape.height;
  const int cols = spec.input_shape.width;
  for (const auto& r : data.train) check_image(r, rows, cols);

  TrainResult result{Model(spec, config.seed, registry), {}};
  Model& model = result.model;
  Adam optimizer(config.learning_rate);
  const std::size_t n = data.train.size();
  std::vector<std::size_t> order(n);
  Tensor batch;
  std::vector<float> dlogits;
  WeightMap best_weights;
  double best_val_loss = 0.0;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(mix_seed(config.seed, kShuffleStream), static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t m = std::min<std::size_t>(config.batch_size, n - start);
      if (batch.n != static_cast<int>(m)) batch.resize(static_cast<int>(m), 1, rows, cols);
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t idx = order[start + i];
        float* dst = batch.sample(static_cast<int>(i));
        if (config.augment_policy) {
          const std::uint64_t draw = static_cast<std::uint64_t>(epoch - 1) * n + idx;
          const Image img = random_augment(data.train[idx].image, *config.augment_policy, draw);
          std::copy(img.pixels.begin(), img.pixels.end(), dst);
        } else {
          const auto& px = data.train[idx].image.pixels;
          std::copy(px.begin(), px.end(), dst);
        }
      }
      model.zero_grad();
      const std::vector<float>& logits = model.forward(batch);
      dlogits.assign(m, 0.0f);
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const int y = label_value(data.train[order[start + i]]);
        const double z = logits[i];
        batch_loss += bce(z, y);
        correct += (z >= 0.0) == (y == 1);
        dlogits[i] = static_cast<float>((sigmoid(z) - y) / static_cast<double>(m));
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("loss became non-finite in epoch " + std::to_string(epoch) +
                            " at batch " + std::to_string(start / config.batch_size + 1) +
                            "; lower the learning rate");
      }
      loss_sum += batch_loss;
      model.backward(dlogits);
      optimizer.step(model.parameters());
    }

    const Evaluation val = evaluate(model, data.validation);
    if (!std::isfinite(val.loss)) {
      throw TrainingError("validation loss became non-finite in epoch " + std::to_string(epoch));
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(n);
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    stats.val_loss = val.loss;
    stats.val_accuracy = val.accuracy;
    result.history.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (!config.early_stop_patience) {
      result.history.best_epoch = epoch;
      continue;
    }
    if (epoch == 1 || val.loss < best_val_loss) {
      best_val_loss = val.loss;
      best_weights = model.weights();
      result.history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= *config.early_stop_patience) {
      result.history.stopped_early = epoch < config.epochs;
      break;
    }
  }
  if (config.early_stop_patience &&
      result.history.best_epoch < static_cast<int>(result.history.epochs.size())) {
    model.set_weights(best_weights);
  }
  return result;
}

void save_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  csv::Writer w(path, {"epoch", "train_loss", "train_acc", "val_loss", "val_acc"});
  for (const auto& e : history.epochs) {
    w.row({std::to_string(e.epoch), csv::format_double(e.train_loss),
           csv::format_double(e.train_accuracy), csv::format_double(e.val_loss),
           csv::format_double(e.val_accuracy)});
  }
}

TrainHistory load_history_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const int c_epoch = require_column(t, "epoch", path);
  const int c_tl = require_column(t, "train_loss", path);
  const int c_ta = require_column(t, "train_acc", path);
  const int c_vl = require_column(t, "val_loss", path);
  const int c_va = require_column(t, "val_acc", path);
  TrainHistory h;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const int line = t.line_numbers[i];
    EpochStats e;
    e.epoch = static_cast<int>(parse_number(row[c_epoch], path, line));
    e.train_loss = parse_number(row[c_tl], path, line);
    e.train_accuracy = parse_number(row[c_ta], path, line);
    e.val_loss = parse_number(row[c_vl], path, line);
    e.val_accuracy = parse_number(row[c_va], path, line);
    h.epochs.push_back(e);
  }
  h.best_epoch = static_cast<int>(h.epochs.size());
  return h;
}

void save_scores_csv(std::span<const PatchRecord> records, const Evaluation& evaluation,
                     const std::filesystem::path& path) {
  if (records.size() != evaluation.scores.size()) {
    throw InputError("score count does not match the record count");
  }
  csv::Writer w(path, {"id", "label", "score"});
  for (std::size_t i = 0; i < records.size(); ++i) {
    w.row({records[i].id, std::to_string(evaluation.labels[i]),
           csv::format_double(evaluation.scores[i])});
  }
}

ScoreTable load_scores_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const int c_id = require_column(t, "id", path);
  const int c_label = require_column(t, "label", path);
  const int c_score = require_column(t, "score", path);
  ScoreTable out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const int line = t.line_numbers[i];
    if (row[c_label] != "0" && row[c_label] != "1") {
      throw InputError(path.string() + ":" + std::to_string(line) + ": label must be 0 or 1");
    }
    out.ids.push_back(row[c_id]);
    out.labels.push_back(row[c_label] == "1" ? 1 : 0);
    out.scores.push_back(parse_number(row[c_score], path, line));
  }
  return out;
}

}  // namespace mammo
