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

// mammo: command-line driver for the patch classification pipeline.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mammo/backbone.hpp"
#include "mammo/checkpoint.hpp"
#include "mammo/error.hpp"
#include "mammo/metrics.hpp"
#include "mammo/network.hpp"
#include "mammo/patchset.hpp"
#include "mammo/report.hpp"
#include "mammo/synthgen.hpp"
#include "mammo/trainer.hpp"

namespace fs = std::filesystem;
using namespace mammo;

namespace {

void log_line(const std::string& s) { std::cerr << s << std::endl; }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error("cannot write '" + path.string() + "'");
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct DataOptions {
  std::string manifest;
  std::string split;
  std::uint64_t split_seed = 0;
  std::vector<double> ratios{0.75, 0.10, 0.15};
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--manifest", d.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--split", d.split, "Split CSV from `mammo split`; computed when absent")
      ->check(CLI::ExistingFile);
  cmd->add_option("--split-seed", d.split_seed, "Seed of the computed split");
  cmd->add_option("--ratios", d.ratios, "Train, validation and test fractions")->expected(3);
}

SplitRatios to_ratios(const std::vector<double>& r) { return {r.at(0), r.at(1), r.at(2)}; }

SplitData load_data(const DataOptions& d, SplitAssignment* split_out = nullptr) {
  std::vector<PatchRecord> records = load_manifest(d.manifest);
  const SplitAssignment split = d.split.empty()
                                    ? stratified_split(records, to_ratios(d.ratios), d.split_seed)
                                    : load_split(d.split);
  if (split_out) *split_out = split;
  return partition(std::move(records), split);
}

fs::path stage_dir(const std::string& out, const ExperimentConfig& config) {
  if (!out.empty()) return out;
  return run_root() / run_directory_name(config);
}

struct ModelOptions {
  std::string model = "baseline";
  bool pretrained = false;
  bool augment = false;
  int width_divisor = 1;
  std::vector<std::string> backbone_checkpoints;
  int epochs = 0;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  int early_stop = 0;
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--model", m.model, "baseline, vgg16, resnet50 or mobilenet");
  cmd->add_flag("--pretrained", m.pretrained, "Start the backbone from registered weights");
  cmd->add_flag("--augment", m.augment, "Random flips, shifts and rotations");
  cmd->add_option("--width-divisor", m.width_divisor, "Divide backbone filter counts")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--backbone-checkpoint", m.backbone_checkpoints,
                  "name=path of a checkpoint holding backbone weights");
  cmd->add_option("--epochs", m.epochs, "Default 15, or 30 with --augment");
  cmd->add_option("--batch-size", m.batch_size);
  cmd->add_option("--lr", m.learning_rate, "Adam learning rate");
  cmd->add_option("--seed", m.seed);
  cmd->add_option("--early-stop", m.early_stop, "Patience in epochs on validation loss");
}

std::map<Backbone, fs::path> parse_checkpoint_args(const std::vector<std::string>& args) {
  std::map<Backbone, fs::path> out;
  for (const auto& a : args) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--backbone-checkpoint expects name=path, got '" + a + "'");
    }
    out[parse_backbone(a.substr(0, eq))] = a.substr(eq + 1);
  }
  return out;
}

ExperimentConfig single_model_config(const ModelOptions& m, const DataOptions& d) {
  ExperimentConfig c;
  c.data.manifest = d.manifest;
  c.ratios = to_ratios(d.ratios);
  c.split_seed = d.split_seed;
  c.seed = m.seed;
  c.width_divisor = m.width_divisor;
  c.backbone_checkpoints = parse_checkpoint_args(m.backbone_checkpoints);
  ModelPlan plan;
  plan.model = m.model;
  plan.pretrained = m.pretrained;
  plan.augment = m.augment;
  plan.train.epochs = m.epochs > 0 ? m.epochs : default_epochs(m.augment);
  plan.train.batch_size = m.batch_size;
  plan.train.learning_rate = m.learning_rate;
  plan.train.seed = m.seed;
  if (m.early_stop > 0) plan.train.early_stop_patience = m.early_stop;
  if (m.augment) plan.train.augment_policy = AugmentPolicy{.seed = m.seed};
  c.models.push_back(plan);
  validate_experiment(c);
  return c;
}

// Trains the single model of `config` on `data` and writes history.csv,
// spec.json and checkpoint.bin into `dir`.
TrainResult train_into(const ExperimentConfig& config, const SplitData& data, const fs::path& dir) {
  const BackboneRegistry registry = experiment_registry(config);
  const ModelPlan& plan = config.models.front();
  const ModelSpec spec = plan_spec(plan, registry);
  fs::create_directories(dir);
  write_file(dir / "config.json", to_json(config).dump(2) + "\n");
  log_line("training " + spec.name + " on " + std::to_string(data.train.size()) + " patches");
  TrainResult r = train(spec, data, plan.train, registry, [](const EpochStats& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %2d  loss %.4f  acc %.4f  val_loss %.4f  val_acc %.4f",
                  e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy);
    log_line(buf);
  });
  save_history_csv(r.history, dir / "history.csv");
  write_file(dir / "spec.json", to_json(spec).dump(2) + "\n");
  save_checkpoint(r.model.to_checkpoint(), dir / "checkpoint.bin");
  return r;
}

nlohmann::ordered_json summary_json(const SummaryStats& s) {
  nlohmann::ordered_json j;
  for (LesionType t : kLesionTypes) {
    nlohmann::ordered_json row;
    for (PathologyTag p : kPathologyTags) {
      if (s.count(t, p)) row[std::string(to_string(p))] = s.count(t, p);
    }
    row["total"] = s.lesion_total(t);
    j[std::string(to_string(t))] = row;
  }
  j["pathological"] = s.total_pathological;
  j["non_pathological"] = s.total_non_pathological;
  j["total"] = s.total;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mammography patch classification pipeline"};
  app.require_subcommand(1);

  // synthgen
  auto* synth = app.add_subcommand("synthgen", "Render a synthetic patch corpus and its manifest");
  std::string synth_out;
  ClassCounts counts = kDdsmCounts;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--mass", counts.mass);
  synth->add_option("--calcification", counts.calcification);
  synth->add_option("--normal", counts.normal);
  synth->add_option("--seed", synth_seed);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a manifest and print its class statistics");
  std::string ingest_manifest;
  std::string ingest_json;
  bool ingest_pixels = false;
  ingest->add_option("--manifest", ingest_manifest)->required()->check(CLI::ExistingFile);
  ingest->add_option("--json", ingest_json, "Also write the statistics as JSON");
  ingest->add_flag("--decode", ingest_pixels, "Decode every image to check it");

  // split
  auto* split_cmd = app.add_subcommand("split", "Stratified train/validation/test assignment");
  std::string split_manifest;
  std::string split_out;
  std::uint64_t split_seed = 0;
  std::vector<double> split_ratios{0.75, 0.10, 0.15};
  split_cmd->add_option("--manifest", split_manifest)->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--out", split_out, "Split CSV")->required();
  split_cmd->add_option("--seed", split_seed);
  split_cmd->add_option("--ratios", split_ratios)->expected(3);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train one model");
  DataOptions train_data;
  ModelOptions train_model;
  std::string train_out;
  add_data_options(train_cmd, train_data);
  add_model_options(train_cmd, train_model);
  train_cmd->add_option("--out", train_out, "Output directory; a new run directory by default");

  // pretrain
  auto* pretrain_cmd = app.add_subcommand(
      "pretrain", "Train a backbone from scratch and save a checkpoint usable as pretrained weights");
  DataOptions pre_data;
  ModelOptions pre_model;
  pre_model.model = "vgg16";
  std::string pre_out;
  add_data_options(pretrain_cmd, pre_data);
  add_model_options(pretrain_cmd, pre_model);
  pretrain_cmd->add_option("--out", pre_out, "Output directory");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score a split with a trained checkpoint");
  DataOptions eval_data;
  std::string eval_checkpoint;
  std::string eval_subset = "test";
  std::string eval_out;
  add_data_options(eval_cmd, eval_data);
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--subset", eval_subset)
      ->check(CLI::IsMember({"train", "validation", "test"}));
  eval_cmd->add_option("--out", eval_out, "Scores CSV (id,label,score)")->required();

  // threshold
  auto* thr_cmd = app.add_subcommand("threshold", "ROC curve and operating thresholds from scores");
  std::string thr_scores;
  std::string thr_out;
  std::string thr_roc;
  ClinicalWeights thr_weights;
  bool thr_literal = false;
  thr_cmd->add_option("--scores", thr_scores)->required()->check(CLI::ExistingFile);
  thr_cmd->add_option("--out", thr_out, "thresholds.json");
  thr_cmd->add_option("--roc", thr_roc, "roc.csv (threshold,fpr,tpr)");
  thr_cmd->add_option("--w-tpr", thr_weights.w_tpr);
  thr_cmd->add_option("--w-spec", thr_weights.w_spec);
  thr_cmd->add_flag("--literal-paper-objective", thr_literal,
                    "Also evaluate the cost function exactly as printed");

  // report
  auto* report_cmd = app.add_subcommand("report", "Re-render a finished run's report");
  std::string report_in;
  std::string report_format = "text";
  report_cmd->add_option("input", report_in, "report.json or its run directory")
      ->required()
      ->check(CLI::ExistingPath);
  report_cmd->add_option("--format", report_format, "text, json or csv");

  // run
  auto* run_cmd = app.add_subcommand("run", "Train and compare every model of an experiment config");
  std::string run_config;
  std::string run_out;
  std::string run_format = "text";
  std::optional<std::uint64_t> run_seed;
  std::optional<std::uint64_t> run_split_seed;
  std::optional<int> run_epochs;
  std::optional<int> run_divisor;
  std::optional<double> run_w_tpr;
  std::optional<double> run_w_spec;
  bool run_literal = false;
  run_cmd->add_option("--config", run_config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--root", run_out, "Run root; $MAMMO_RUN_ROOT or ./runs by default");
  run_cmd->add_option("--format", run_format, "Report printed to stdout: text, json or csv");
  run_cmd->add_option("--seed", run_seed, "Overrides the config seed");
  run_cmd->add_option("--split-seed", run_split_seed);
  run_cmd->add_option("--epochs", run_epochs, "Overrides every model's epoch count");
  run_cmd->add_option("--width-divisor", run_divisor);
  run_cmd->add_option("--w-tpr", run_w_tpr);
  run_cmd->add_option("--w-spec", run_w_spec);
  run_cmd->add_flag("--literal-paper-objective", run_literal);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*synth) {
      const fs::path manifest = write_dataset(counts, synth_seed, synth_out);
      std::cout << manifest.string() << "\n";
    } else if (*ingest) {
      ManifestOptions options;
      options.load_pixels = false;
      options.verify_images = ingest_pixels;
      const SummaryStats s = summarize(load_manifest(ingest_manifest, options));
      const auto j = summary_json(s);
      std::cout << j.dump(2) << "\n";
      if (!ingest_json.empty()) write_file(ingest_json, j.dump(2) + "\n");
    } else if (*split_cmd) {
      ManifestOptions options;
      options.load_pixels = false;
      options.verify_images = false;
      const auto records = load_manifest(split_manifest, options);
      const SplitAssignment s = stratified_split(records, to_ratios(split_ratios), split_seed);
      save_split(s, split_out);
      std::cout << "train " << s.size_of(Split::Train) << "  validation "
                << s.size_of(Split::Validation) << "  test " << s.size_of(Split::Test)
                << "  hash " << hex16(s.hash()) << "\n";
    } else if (*train_cmd || *pretrain_cmd) {
      const bool pre = pretrain_cmd->parsed();
      const DataOptions& d = pre ? pre_data : train_data;
      ModelOptions m = pre ? pre_model : train_model;
      if (pre && (m.model == "baseline" || m.pretrained)) {
        throw ConfigError("pretrain needs a backbone model trained from scratch");
      }
      const ExperimentConfig config = single_model_config(m, d);
      const fs::path dir = stage_dir(pre ? pre_out : train_out, config);
      SplitAssignment split;
      const SplitData data = load_data(d, &split);
      fs::create_directories(dir);
      save_split(split, dir / "split.csv");
      train_into(config, data, dir);
      std::cout << dir.string() << "\n";
    } else if (*eval_cmd) {
      Model model = Model::from_checkpoint(load_checkpoint(eval_checkpoint));
      const SplitData data = load_data(eval_data);
      const auto& subset = eval_subset == "train"        ? data.train
                           : eval_subset == "validation" ? data.validation
                                                         : data.test;
      const Evaluation e = evaluate(model, subset);
      save_scores_csv(subset, e, eval_out);
      std::printf("accuracy %.4f  loss %.4f  auc %.4f\n", e.accuracy, e.loss,
                  roc_curve(e.labels, e.scores).auc);
    } else if (*thr_cmd) {
      const ScoreTable t = load_scores_csv(thr_scores);
      const RocCurve curve = roc_curve(t.labels, t.scores);
      const ThresholdDecision y = youden_threshold(t.labels, t.scores);
      const ThresholdDecision c = clinical_threshold(t.labels, t.scores, thr_weights);
      std::optional<ThresholdDecision> lit;
      if (thr_literal) lit = literal_clinical_threshold(t.labels, t.scores, thr_weights);
      const auto j = threshold_summary(curve, y, c, lit);
      std::cout << j.dump(2) << "\n";
      if (!thr_out.empty()) write_file(thr_out, j.dump(2) + "\n");
      if (!thr_roc.empty()) save_roc_csv(curve, thr_roc);
    } else if (*report_cmd) {
      const ReportFormat format = parse_report_format(report_format);
      fs::path path = report_in;
      if (fs::is_directory(path)) path /= "report.json";
      std::ifstream in(path);
      if (!in) throw InputError("cannot open '" + path.string() + "'");
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw InputError("'" + path.string() + "' is not valid JSON: " + e.what());
      }
      std::cout << render_report(report_from_json(j), format);
    } else if (*run_cmd) {
      const ReportFormat format = parse_report_format(run_format);
      ExperimentConfig config = load_experiment(run_config);
      if (run_seed) config.seed = *run_seed;
      if (run_split_seed) config.split_seed = *run_split_seed;
      if (run_divisor) config.width_divisor = *run_divisor;
      if (run_w_tpr) config.weights.w_tpr = *run_w_tpr;
      if (run_w_spec) config.weights.w_spec = *run_w_spec;
      if (run_literal) config.literal_paper_objective = true;
      if (run_epochs) {
        for (auto& plan : config.models) plan.train.epochs = *run_epochs;
      }
      validate_experiment(config);
      const ExperimentResult result =
          run_experiment(config, run_out.empty() ? run_root() : fs::path(run_out), log_line);
      std::cout << render_report(result.report, format);
      log_line("artifacts in " + result.run_dir.string());
      for (const auto& row : result.report.rows) {
        if (!row.ok()) return 2;
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
