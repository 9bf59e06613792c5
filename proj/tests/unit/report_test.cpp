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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "mammo/checkpoint.hpp"
#include "mammo/error.hpp"
#include "mammo/report.hpp"

using namespace mammo;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ThresholdDecision decision(Objective o, double c, double sens, double spec) {
  ThresholdDecision d;
  d.objective = o;
  d.threshold = c;
  d.sensitivity = sens;
  d.specificity = spec;
  d.objective_value = sens + spec - 1.0;
  d.matrix = {7, 2, 9, 1};
  return d;
}

RunReport sample_report() {
  RunReport r;
  r.run_id = "20260101-000000-deadbeef";
  r.split_hash = "0123456789abcdef";
  r.seed = 7;
  r.train_size = 750;
  r.validation_size = 100;
  r.test_size = 150;
  ModelRow a;
  a.key = "baseline";
  a.name = "Simple model";
  a.batch_size = 32;
  a.preprocessing = "No";
  a.epochs = a.epochs_run = 15;
  a.accuracy = 0.759;
  a.auc = 0.8123456789;
  a.youden = decision(Objective::Youden, 0.43, 0.8, 0.7);
  a.clinical = decision(Objective::ClinicalWeighted, 0.17, 0.9, 0.6);
  a.dominance = compare_operating_points(
      roc_curve(std::vector<int>{1, 0, 1, 0}, std::vector<double>{0.9, 0.2, 0.6, 0.4}),
      benchmark_constants().radiologists);
  a.seconds = 12.5;
  ModelRow b = a;
  b.key = "vgg16";
  b.name = "MVGG16+Augmentation";
  b.augmented = true;
  b.preprocessing = "Flips, shifts, rotations";
  b.epochs = b.epochs_run = 30;
  b.literal = decision(Objective::ClinicalLiteral, 0.01, 1.0, 0.0);
  ModelRow c = a;
  c.key = "mobilenet";
  c.name = "Mobile Net+ImageNet";
  c.pretrained = true;
  c.error = "Mobile Net+ImageNet: no pretrained weights";
  r.rows = {a, b, c};
  return r;
}

TEST(BenchmarkTest, Constants) {
  const BenchmarkConstants& b = benchmark_constants();
  ASSERT_EQ(b.radiologists.size(), 3u);
  EXPECT_EQ(b.radiologists[0].sensitivity, 0.655);
  EXPECT_EQ(b.radiologists[0].specificity, 0.841);
  EXPECT_EQ(b.radiologists[1].sensitivity, 0.627);
  EXPECT_EQ(b.radiologists[1].specificity, 0.862);
  EXPECT_EQ(b.radiologists[2].sensitivity, 0.776);
  EXPECT_EQ(b.radiologists[2].specificity, 0.988);
  EXPECT_EQ(b.survival_by_stage, (std::map<int, double>{{0, 1.0}, {1, 1.0}, {2, 0.93},
                                                        {3, 0.72}, {4, 0.22}}));
  EXPECT_EQ(b.published_accuracy, 0.883);
  EXPECT_EQ(b.published_auc, 0.933);
  EXPECT_EQ(b.published_clinical_threshold, 0.17);
  for (const auto& p : b.radiologists) {
    EXPECT_TRUE(p.sensitivity >= 0 && p.sensitivity <= 1 && p.specificity >= 0 &&
                p.specificity <= 1);
  }
}

TEST(RenderTest, FormatsAndErrors) {
  EXPECT_EQ(parse_report_format("text"), ReportFormat::Text);
  EXPECT_EQ(parse_report_format("json"), ReportFormat::Json);
  EXPECT_EQ(parse_report_format("csv"), ReportFormat::Csv);
  EXPECT_THROW(parse_report_format("html"), ConfigError);
}

TEST(RenderTest, TextTableCarriesComparisonColumns) {
  const std::string text = render_report(sample_report(), ReportFormat::Text);
  const std::string header = text.substr(text.find("Model"), text.find('\n', text.find("Model")) -
                                                                 text.find("Model"));
  for (const char* col : {"Model", "Size of Batch", "Special pre-processing", "Accuracy (test)",
                          "Number of epochs", "AUC"}) {
    EXPECT_NE(header.find(col), std::string::npos) << col;
  }
  EXPECT_NE(text.find("75.9%"), std::string::npos);
  EXPECT_NE(text.find("0123456789abcdef"), std::string::npos);
  EXPECT_NE(text.find("Rafferty study 1"), std::string::npos);
  EXPECT_NE(text.find("no pretrained weights"), std::string::npos);
  EXPECT_NE(text.find("88.3%"), std::string::npos);
}

TEST(RenderTest, CsvHasOneLinePerModelPlusHeader) {
  const std::string csv = render_report(sample_report(), ReportFormat::Csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(csv.find("\"Flips, shifts, rotations\""), std::string::npos);
}

TEST(RenderTest, JsonRoundTripIsLossless) {
  const RunReport r = sample_report();
  const std::string json = render_report(r, ReportFormat::Json);
  const RunReport back = report_from_json(nlohmann::json::parse(json));
  for (auto f : {ReportFormat::Text, ReportFormat::Json, ReportFormat::Csv}) {
    EXPECT_EQ(render_report(back, f), render_report(r, f));
  }
  EXPECT_EQ(back.rows[0].auc, r.rows[0].auc);
  EXPECT_EQ(back.rows[1].literal->threshold, 0.01);
  EXPECT_FALSE(back.rows[0].literal.has_value());
  EXPECT_THROW(report_from_json(nlohmann::json::parse("{\"run_id\": 3}")), InputError);
}

TEST(ExperimentConfigTest, ParsingAndDefaults) {
  const auto j = nlohmann::json::parse(R"({
    "data": {"synthgen": {"mass": 10, "calcification": 5, "normal": 20, "seed": 2}},
    "seed": 4,
    "models": [{"model": "baseline"},
               {"model": "vgg16", "augment": true},
               {"model": "mobilenet", "pretrained": true, "epochs": 3, "name": "MN"}]
  })");
  const ExperimentConfig c = experiment_from_json(j);
  ASSERT_EQ(c.models.size(), 3u);
  EXPECT_EQ(c.models[0].train.epochs, 15);
  EXPECT_EQ(c.models[1].train.epochs, 30);
  EXPECT_EQ(c.models[2].train.epochs, 3);
  EXPECT_EQ(c.models[2].display_name, "MN");
  EXPECT_EQ(c.weights.w_tpr, 0.66);
  EXPECT_EQ(c.data.synth_counts.total(), 35);
  EXPECT_EQ(experiment_from_json(to_json(c)).models.size(), 3u);
  EXPECT_EQ(to_json(experiment_from_json(to_json(c))), to_json(c));
}

TEST(ExperimentConfigTest, Errors) {
  auto parse = [](const char* s) { return experiment_from_json(nlohmann::json::parse(s)); };
  EXPECT_THROW(parse(R"({"data": {"synthgen": {"mass": 5, "normal": 5}}, "models": []})"),
               ConfigError);
  EXPECT_THROW(parse(R"({"data": {"synthgen": {"mass": 5}}, "models": [{"model": "x"}]})"),
               ConfigError);
  EXPECT_THROW(parse(R"({"data": {"synthgen": {"mass": 5}}, "modles": []})"), ConfigError);
  EXPECT_THROW(
      parse(R"({"data": {"synthgen": {"mass": 5}}, "models": [{"model": "baseline", "lr": 1}]})"),
      ConfigError);
  EXPECT_THROW(parse(R"({"data": {"synthgen": {"mass": 5}},
                         "models": [{"model": "baseline", "pretrained": true}]})"),
               ConfigError);
}

TEST(ExperimentConfigTest, PlanNames) {
  const BackboneRegistry reg;
  ModelPlan p;
  EXPECT_EQ(plan_spec(p, reg).name, "Simple model");
  p.augment = true;
  p.model = "vgg16";
  EXPECT_EQ(plan_spec(p, reg).name, "MVGG16+Augmentation");
  p.display_name = "custom";
  EXPECT_EQ(plan_spec(p, reg).name, "custom");
}

TEST(ExperimentConfigTest, RunDirectoryName) {
  ExperimentConfig c;
  c.models.push_back({});
  const std::string name = run_directory_name(c);
  EXPECT_TRUE(std::regex_match(name, std::regex(R"(\d{8}-\d{6}-[0-9a-f]{8})"))) << name;
  EXPECT_EQ(name.substr(16), run_directory_name(c).substr(16));
}

TEST(RunExperimentTest, ThreeModelsShareOneSplit) {
  const fs::path root = fs::temp_directory_path() / "mammo_report_runs";
  fs::remove_all(root);

  ExperimentConfig c;
  c.data.synth_counts = {12, 0, 18};
  c.data.synth_seed = 3;
  c.seed = 1;
  c.width_divisor = 16;
  ModelPlan baseline;
  baseline.train.epochs = 1;
  ModelPlan vgg = baseline;
  vgg.model = "vgg16";
  ModelPlan vgg_pre = vgg;
  vgg_pre.pretrained = true;
  c.models = {baseline, vgg, vgg_pre};

  // The random-init run provides the backbone weights for the pretrained one.
  ExperimentConfig pre = c;
  pre.models = {vgg};
  const ExperimentResult donor = run_experiment(pre, root);
  const fs::path ckpt = donor.run_dir / "1-vgg16" / "checkpoint.bin";
  ASSERT_TRUE(fs::exists(ckpt));
  c.backbone_checkpoints[Backbone::Vgg16] = ckpt;

  std::vector<std::string> log;
  const ExperimentResult r = run_experiment(c, root, [&](const std::string& s) { log.push_back(s); });
  const RunReport& rep = r.report;
  ASSERT_EQ(rep.rows.size(), 3u);
  for (const auto& row : rep.rows) EXPECT_TRUE(row.ok()) << row.error;
  EXPECT_EQ(rep.rows[0].name, "Simple model");
  EXPECT_EQ(rep.rows[1].name, "MVGG16");
  EXPECT_EQ(rep.rows[2].name, "MVGG16+ImageNet");
  EXPECT_EQ(rep.split_hash, donor.report.split_hash);
  EXPECT_EQ(rep.train_size + rep.validation_size + rep.test_size, 30);
  EXPECT_FALSE(log.empty());

  for (const char* f : {"config.json", "split.csv", "report.txt", "report.json", "report.csv"}) {
    EXPECT_TRUE(fs::exists(r.run_dir / f)) << f;
  }
  for (const char* d : {"1-baseline", "2-vgg16", "3-vgg16-pretrained"}) {
    for (const char* f : {"history.csv", "scores.csv", "roc.csv", "thresholds.json",
                          "checkpoint.bin"}) {
      EXPECT_TRUE(fs::exists(r.run_dir / d / f)) << d << "/" << f;
    }
  }
  // Re-rendering the stored report reproduces the written artifacts.
  const RunReport stored = report_from_json(nlohmann::json::parse(slurp(r.run_dir / "report.json")));
  EXPECT_EQ(render_report(stored, ReportFormat::Text), slurp(r.run_dir / "report.txt"));
  EXPECT_EQ(render_report(stored, ReportFormat::Csv), slurp(r.run_dir / "report.csv"));
  const SplitAssignment split = load_split(r.run_dir / "split.csv");
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(split.hash()));
  EXPECT_EQ(rep.split_hash, hex);
}

TEST(RunExperimentTest, FailingModelDoesNotStopTheRun) {
  const fs::path root = fs::temp_directory_path() / "mammo_report_fail";
  fs::remove_all(root);
  ExperimentConfig c;
  c.data.synth_counts = {8, 0, 12};
  c.width_divisor = 16;
  ModelPlan broken;
  broken.model = "mobilenet";
  broken.pretrained = true;
  broken.train.epochs = 1;
  ModelPlan ok = broken;
  ok.pretrained = false;
  c.models = {broken, ok};
  const ExperimentResult r = run_experiment(c, root);
  ASSERT_EQ(r.report.rows.size(), 2u);
  EXPECT_FALSE(r.report.rows[0].ok());
  EXPECT_NE(r.report.rows[0].error.find("Mobile Net"), std::string::npos);
  EXPECT_TRUE(r.report.rows[1].ok()) << r.report.rows[1].error;
  EXPECT_TRUE(fs::exists(r.run_dir / "report.txt"));
}

TEST(RunExperimentTest, EmptyModelListIsAConfigError) {
  ExperimentConfig c;
  c.data.synth_counts = {2, 0, 2};
  EXPECT_THROW(run_experiment(c, fs::temp_directory_path()), ConfigError);
}

}  // namespace
