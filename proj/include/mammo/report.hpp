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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mammo/metrics.hpp"
#include "mammo/patchset.hpp"
#include "mammo/synthgen.hpp"
#include "mammo/trainer.hpp"

namespace mammo {

// Published reference values shown next to every run.
struct BenchmarkConstants {
  std::vector<OperatingPoint> radiologists;
  std::map<int, double> survival_by_stage;  // 5-year overall survival
  double published_accuracy = 0.0;
  double published_auc = 0.0;
  double published_clinical_threshold = 0.0;
};

const BenchmarkConstants& benchmark_constants();

struct ModelRow {
  std::string key;   // "baseline", "vgg16", "resnet50", "mobilenet"
  std::string name;  // display name
  bool pretrained = false;
  bool augmented = false;
  int batch_size = 0;
  std::string preprocessing;
  int epochs = 0;      // configured
  int epochs_run = 0;  // fewer after an early stop
  double accuracy = 0.0;  // test split, threshold 0.5
  double auc = 0.0;
  ThresholdDecision youden;
  ThresholdDecision clinical;
  std::optional<ThresholdDecision> literal;
  std::vector<Dominance> dominance;
  double seconds = 0.0;
  std::string error;  // set when this model failed; the metrics are then meaningless

  bool ok() const { return error.empty(); }
};

struct RunReport {
  std::string run_id;
  std::string split_hash;  // 16 hex digits
  std::uint64_t seed = 0;
  std::int64_t train_size = 0;
  std::int64_t validation_size = 0;
  std::int64_t test_size = 0;
  ClinicalWeights weights;
  std::vector<ModelRow> rows;
};

enum class ReportFormat { Text, Json, Csv };

// Throws ConfigError on anything but "text", "json" or "csv".
ReportFormat parse_report_format(std::string_view s);

// Deterministic for a given report. The text table carries the columns
// Model, Size of Batch, Special pre-processing, Accuracy (test), Number of
// epochs, AUC; the JSON form round-trips through report_from_json.
std::string render_report(const RunReport& report, ReportFormat format);

nlohmann::ordered_json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Experiments

struct ModelPlan {
  std::string model = "baseline";  // or a backbone name
  bool pretrained = false;
  bool augment = false;
  std::optional<std::string> display_name;
  TrainConfig train;  // the seed is overridden by the experiment seed
};

struct DatasetSource {
  std::optional<std::filesystem::path> manifest;
  ClassCounts synth_counts{};  // used when no manifest is given
  std::uint64_t synth_seed = 0;
};

struct ExperimentConfig {
  DatasetSource data;
  SplitRatios ratios;
  std::uint64_t split_seed = 0;
  std::uint64_t seed = 0;
  std::vector<ModelPlan> models;
  ClinicalWeights weights;
  bool literal_paper_objective = false;
  // Divides every backbone filter count; 1 gives the published widths.
  int width_divisor = 1;
  // Checkpoints whose backbone tensors serve as pretrained weights.
  std::map<Backbone, std::filesystem::path> backbone_checkpoints;
  bool save_checkpoints = true;
};

// Throws ConfigError on an empty model list, unknown model names, invalid
// train configs or weights.
void validate_experiment(const ExperimentConfig& config);

// Missing fields take their defaults; unknown keys raise ConfigError.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment(const std::filesystem::path& path);

// Resolves the model of a plan: the baseline or a transfer model on the
// registry's backbone.
ModelSpec plan_spec(const ModelPlan& plan, const BackboneRegistry& registry);

// Registry holding the configured backbone widths and pretrained weights.
BackboneRegistry experiment_registry(const ExperimentConfig& config);

// `$MAMMO_RUN_ROOT`, or "runs" when unset.
std::filesystem::path run_root();

// "<UTC yyyymmdd-hhmmss>-<first 8 hex digits of the config hash>"
std::string run_directory_name(const ExperimentConfig& config);

struct ExperimentResult {
  RunReport report;
  std::filesystem::path run_dir;
};

using LogFn = std::function<void(const std::string&)>;

// Loads or synthesizes the data, splits it once, then trains and evaluates
// every model on that split. A failing model is reported with its error and
// the remaining models still run. Writes config.json, split.csv, one
// directory per model (history.csv, scores.csv, roc.csv, thresholds.json,
// checkpoint.bin) and report.{txt,json,csv} under `root/<run directory>`.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& root,
                                const LogFn& log = {});

// `threshold,fpr,tpr`
void save_roc_csv(const RocCurve& curve, const std::filesystem::path& path);

// {auc, youden: {...}, clinical: {...}[, literal: {...}]}
nlohmann::ordered_json threshold_summary(const RocCurve& curve, const ThresholdDecision& youden,
                                         const ThresholdDecision& clinical,
                                         const std::optional<ThresholdDecision>& literal);

nlohmann::ordered_json to_json(const ThresholdDecision& d);
ThresholdDecision decision_from_json(const nlohmann::json& j);

}  // namespace mammo
