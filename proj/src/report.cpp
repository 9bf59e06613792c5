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

#include "mammo/report.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "mammo/backbone.hpp"
#include "mammo/checkpoint.hpp"
#include "mammo/error.hpp"
#include "mammo/rng.hpp"

namespace mammo {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string percent(double v) { return fixed(100.0 * v, 1) + "%"; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error("cannot write '" + path.string() + "'");
}

// Plain text table with columns padded to their widest cell.
std::string table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& r : rows) {
    if (widths.size() < r.size()) widths.resize(r.size(), 0);
    for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], r[i].size());
  }
  std::string out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::string line;
    for (std::size_t i = 0; i < rows[k].size(); ++i) {
      if (i) line += " | ";
      line += i + 1 == rows[k].size() ? rows[k][i] : pad(rows[k][i], widths[i]);
    }
    out += line + "\n";
    if (k == 0) {
      std::string rule;
      for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i) rule += "-+-";
        rule += std::string(widths[i], '-');
      }
      out += rule + "\n";
    }
  }
  return out;
}

ordered_json to_json(const Dominance& d) {
  ordered_json j;
  j["label"] = d.benchmark.label;
  j["sensitivity"] = d.benchmark.sensitivity;
  j["specificity"] = d.benchmark.specificity;
  j["curve_sensitivity"] = d.curve_sensitivity;
  j["dominated"] = d.dominated;
  return j;
}

Dominance dominance_from_json(const json& j) {
  Dominance d;
  d.benchmark.label = j.at("label").get<std::string>();
  d.benchmark.sensitivity = j.at("sensitivity").get<double>();
  d.benchmark.specificity = j.at("specificity").get<double>();
  d.curve_sensitivity = j.at("curve_sensitivity").get<double>();
  d.dominated = j.at("dominated").get<bool>();
  return d;
}

Objective parse_objective(const std::string& s) {
  for (auto o : {Objective::Youden, Objective::ClinicalWeighted, Objective::ClinicalLiteral}) {
    if (to_string(o) == s) return o;
  }
  throw InputError("unknown threshold objective '" + s + "'");
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

std::string plan_key(const ModelPlan& plan) { return plan.model; }

std::string preprocessing_of(const ModelPlan& plan) {
  std::vector<std::string> parts;
  if (plan.augment) parts.emplace_back("Flips, shifts, rotations");
  if (plan.pretrained) parts.emplace_back("Pre-trained backbone");
  if (parts.empty()) return "No";
  std::string out = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out += " + " + parts[i];
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string text = to_json(config).dump();
  return fnv1a(text.data(), text.size());
}

}  // namespace

const BenchmarkConstants& benchmark_constants() {
  static const BenchmarkConstants constants{
      {{0.655, 0.841, "Rafferty study 1"},
       {0.627, 0.862, "Rafferty study 2"},
       {0.776, 0.988, "Kolb multi-modality"}},
      {{0, 1.00}, {1, 1.00}, {2, 0.93}, {3, 0.72}, {4, 0.22}},
      0.883,
      0.933,
      0.17,
  };
  return constants;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "text") return ReportFormat::Text;
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  throw ConfigError("unknown report format '" + std::string(s) + "' (expected text, json or csv)");
}

ordered_json to_json(const ThresholdDecision& d) {
  ordered_json j;
  j["objective"] = std::string(to_string(d.objective));
  j["threshold"] = d.threshold;
  j["sensitivity"] = d.sensitivity;
  j["specificity"] = d.specificity;
  j["objective_value"] = d.objective_value;
  j["tp"] = d.matrix.tp;
  j["fp"] = d.matrix.fp;
  j["tn"] = d.matrix.tn;
  j["fn"] = d.matrix.fn;
  return j;
}

ThresholdDecision decision_from_json(const json& j) {
  ThresholdDecision d;
  d.objective = parse_objective(j.at("objective").get<std::string>());
  d.threshold = j.at("threshold").get<double>();
  d.sensitivity = j.at("sensitivity").get<double>();
  d.specificity = j.at("specificity").get<double>();
  d.objective_value = j.at("objective_value").get<double>();
  d.matrix.tp = j.at("tp").get<std::int64_t>();
  d.matrix.fp = j.at("fp").get<std::int64_t>();
  d.matrix.tn = j.at("tn").get<std::int64_t>();
  d.matrix.fn = j.at("fn").get<std::int64_t>();
  return d;
}

ordered_json to_json(const RunReport& report) {
  ordered_json j;
  j["run_id"] = report.run_id;
  j["split_hash"] = report.split_hash;
  j["seed"] = report.seed;
  j["train_size"] = report.train_size;
  j["validation_size"] = report.validation_size;
  j["test_size"] = report.test_size;
  j["clinical_weights"] = {{"w_tpr", report.weights.w_tpr}, {"w_spec", report.weights.w_spec}};
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.rows) {
    ordered_json row;
    row["key"] = r.key;
    row["name"] = r.name;
    row["pretrained"] = r.pretrained;
    row["augmented"] = r.augmented;
    row["batch_size"] = r.batch_size;
    row["preprocessing"] = r.preprocessing;
    row["epochs"] = r.epochs;
    row["epochs_run"] = r.epochs_run;
    row["test_accuracy"] = r.accuracy;
    row["auc"] = r.auc;
    row["youden"] = to_json(r.youden);
    row["clinical"] = to_json(r.clinical);
    row["literal"] = r.literal ? to_json(*r.literal) : ordered_json();
    ordered_json dom = ordered_json::array();
    for (const auto& d : r.dominance) dom.push_back(to_json(d));
    row["dominance"] = dom;
    row["seconds"] = r.seconds;
    row["error"] = r.error;
    rows.push_back(row);
  }
  j["rows"] = rows;
  const BenchmarkConstants& b = benchmark_constants();
  ordered_json reference;
  reference["accuracy"] = b.published_accuracy;
  reference["auc"] = b.published_auc;
  reference["clinical_threshold"] = b.published_clinical_threshold;
  j["published_final_model"] = reference;
  return j;
}

RunReport report_from_json(const json& j) {
  RunReport r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.split_hash = j.at("split_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.train_size = j.at("train_size").get<std::int64_t>();
    r.validation_size = j.at("validation_size").get<std::int64_t>();
    r.test_size = j.at("test_size").get<std::int64_t>();
    r.weights.w_tpr = j.at("clinical_weights").at("w_tpr").get<double>();
    r.weights.w_spec = j.at("clinical_weights").at("w_spec").get<double>();
    for (const auto& row : j.at("rows")) {
      ModelRow m;
      m.key = row.at("key").get<std::string>();
      m.name = row.at("name").get<std::string>();
      m.pretrained = row.at("pretrained").get<bool>();
      m.augmented = row.at("augmented").get<bool>();
      m.batch_size = row.at("batch_size").get<int>();
      m.preprocessing = row.at("preprocessing").get<std::string>();
      m.epochs = row.at("epochs").get<int>();
      m.epochs_run = row.at("epochs_run").get<int>();
      m.accuracy = row.at("test_accuracy").get<double>();
      m.auc = row.at("auc").get<double>();
      m.youden = decision_from_json(row.at("youden"));
      m.clinical = decision_from_json(row.at("clinical"));
      if (!row.at("literal").is_null()) m.literal = decision_from_json(row.at("literal"));
      for (const auto& d : row.at("dominance")) m.dominance.push_back(dominance_from_json(d));
      m.seconds = row.at("seconds").get<double>();
      m.error = row.at("error").get<std::string>();
      r.rows.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed report JSON: ") + e.what());
  }
  return r;
}

std::string render_report(const RunReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) return to_json(report).dump(2) + "\n";

  if (format == ReportFormat::Csv) {
    std::string out =
        "model,batch_size,preprocessing,test_accuracy,epochs,auc,youden_threshold,"
        "clinical_threshold,error\n";
    for (const auto& r : report.rows) {
      const bool ok = r.ok();
      out += csv_field(r.name) + "," + std::to_string(r.batch_size) + "," +
             csv_field(r.preprocessing) + "," + (ok ? fixed(r.accuracy, 6) : "") + "," +
             std::to_string(r.epochs_run) + "," + (ok ? fixed(r.auc, 6) : "") + "," +
             (ok ? fixed(r.youden.threshold, 6) : "") + "," +
             (ok ? fixed(r.clinical.threshold, 6) : "") + "," + csv_field(r.error) + "\n";
    }
    return out;
  }

  const BenchmarkConstants& b = benchmark_constants();
  std::string out;
  out += "Run " + report.run_id + "\n";
  out += "Split hash " + report.split_hash + ", seed " + std::to_string(report.seed) +
         ", train/validation/test " + std::to_string(report.train_size) + "/" +
         std::to_string(report.validation_size) + "/" + std::to_string(report.test_size) + "\n\n";

  std::vector<std::vector<std::string>> main = {{"Model", "Size of Batch", "Special pre-processing",
                                                 "Accuracy (test)", "Number of epochs", "AUC"}};
  for (const auto& r : report.rows) {
    main.push_back({r.name, std::to_string(r.batch_size), r.preprocessing,
                    r.ok() ? percent(r.accuracy) : "failed", std::to_string(r.epochs_run),
                    r.ok() ? fixed(r.auc, 3) : "-"});
  }
  out += table(main);

  out += "\nThresholds (weights w_tpr " + csv::format_double(report.weights.w_tpr) +
         ", w_spec " + csv::format_double(report.weights.w_spec) + ")\n";
  std::vector<std::vector<std::string>> thr = {{"Model", "Youden c", "Sens", "Spec", "J",
                                                "Clinical c", "Sens", "Spec"}};
  for (const auto& r : report.rows) {
    if (!r.ok()) continue;
    thr.push_back({r.name, fixed(r.youden.threshold, 4), percent(r.youden.sensitivity),
                   percent(r.youden.specificity), fixed(r.youden.objective_value, 3),
                   fixed(r.clinical.threshold, 4), percent(r.clinical.sensitivity),
                   percent(r.clinical.specificity)});
  }
  out += table(thr);
  for (const auto& r : report.rows) {
    if (r.ok() && r.literal) {
      out += r.name + ": printed cost function picks c = " + fixed(r.literal->threshold, 4) +
             " (sensitivity " + percent(r.literal->sensitivity) + ", specificity " +
             percent(r.literal->specificity) + ")\n";
    }
  }

  out += "\nRadiologist operating points (curve sensitivity at the same specificity)\n";
  std::vector<std::vector<std::string>> dom = {{"Model"}};
  for (const auto& p : b.radiologists) {
    dom[0].push_back(p.label + " " + percent(p.sensitivity) + "/" + percent(p.specificity));
  }
  for (const auto& r : report.rows) {
    if (!r.ok()) continue;
    std::vector<std::string> row = {r.name};
    for (const auto& d : r.dominance) {
      row.push_back(percent(d.curve_sensitivity) + (d.dominated ? " dominates" : " below"));
    }
    dom.push_back(row);
  }
  out += table(dom);

  bool any_failed = false;
  for (const auto& r : report.rows) any_failed = any_failed || !r.ok();
  if (any_failed) {
    out += "\nFailures\n";
    for (const auto& r : report.rows) {
      if (!r.ok()) out += "  " + r.name + ": " + r.error + "\n";
    }
  }

  out += "\nPublished final model: accuracy " + percent(b.published_accuracy) + ", AUC " +
         fixed(b.published_auc, 3) + ", clinical threshold " + fixed(b.published_clinical_threshold, 2) +
         " (full patch corpus; not comparable to synthetic runs)\n";
  out += "5-year overall survival by stage:";
  for (const auto& [stage, rate] : b.survival_by_stage) {
    out += " " + std::to_string(stage) + ": " + fixed(100.0 * rate, 0) + "%";
  }
  return out + "\n";
}

// ---------------------------------------------------------------------------

void validate_experiment(const ExperimentConfig& config) {
  if (config.models.empty()) throw ConfigError("experiment lists no models");
  if (config.width_divisor < 1) throw ConfigError("width_divisor must be >= 1");
  validate_weights(config.weights);
  if (!config.data.manifest && config.data.synth_counts.total() <= 0) {
    throw ConfigError("experiment needs a manifest or positive synthgen counts");
  }
  for (const auto& plan : config.models) {
    if (plan.model != "baseline") parse_backbone(plan.model);
    if (plan.model == "baseline" && plan.pretrained) {
      throw ConfigError("the baseline model has no pretrained variant");
    }
    validate_config(plan.train);
  }
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig c;
  try {
    check_keys(j,
               {"data", "split", "seed", "models", "clinical_weights", "literal_paper_objective",
                "width_divisor", "backbone_checkpoints", "save_checkpoints"},
               "experiment config");
    const json& data = j.at("data");
    check_keys(data, {"manifest", "synthgen"}, "data");
    if (data.contains("manifest")) {
      c.data.manifest = std::filesystem::path(data.at("manifest").get<std::string>());
    } else {
      const json& s = data.at("synthgen");
      check_keys(s, {"mass", "calcification", "normal", "seed"}, "data.synthgen");
      c.data.synth_counts.mass = s.value("mass", std::int64_t{0});
      c.data.synth_counts.calcification = s.value("calcification", std::int64_t{0});
      c.data.synth_counts.normal = s.value("normal", std::int64_t{0});
      c.data.synth_seed = s.value("seed", std::uint64_t{0});
    }
    if (j.contains("split")) {
      const json& s = j.at("split");
      check_keys(s, {"train", "validation", "test", "seed"}, "split");
      c.ratios.train = s.value("train", c.ratios.train);
      c.ratios.validation = s.value("validation", c.ratios.validation);
      c.ratios.test = s.value("test", c.ratios.test);
      c.split_seed = s.value("seed", c.split_seed);
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("clinical_weights")) {
      const json& w = j.at("clinical_weights");
      check_keys(w, {"w_tpr", "w_spec"}, "clinical_weights");
      c.weights.w_tpr = w.value("w_tpr", c.weights.w_tpr);
      c.weights.w_spec = w.value("w_spec", c.weights.w_spec);
    }
    c.literal_paper_objective = j.value("literal_paper_objective", false);
    c.width_divisor = j.value("width_divisor", 1);
    c.save_checkpoints = j.value("save_checkpoints", true);
    if (j.contains("backbone_checkpoints")) {
      for (const auto& [name, path] : j.at("backbone_checkpoints").items()) {
        c.backbone_checkpoints[parse_backbone(name)] = path.get<std::string>();
      }
    }
    for (const auto& m : j.at("models")) {
      check_keys(m,
                 {"model", "pretrained", "augment", "name", "epochs", "batch_size",
                  "learning_rate", "early_stop_patience"},
                 "model entry");
      ModelPlan plan;
      plan.model = m.value("model", plan.model);
      plan.pretrained = m.value("pretrained", false);
      plan.augment = m.value("augment", false);
      if (m.contains("name")) plan.display_name = m.at("name").get<std::string>();
      plan.train.epochs = m.value("epochs", default_epochs(plan.augment));
      plan.train.batch_size = m.value("batch_size", plan.train.batch_size);
      plan.train.learning_rate = m.value("learning_rate", plan.train.learning_rate);
      if (m.contains("early_stop_patience") && !m.at("early_stop_patience").is_null()) {
        plan.train.early_stop_patience = m.at("early_stop_patience").get<int>();
      }
      c.models.push_back(std::move(plan));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  validate_experiment(c);
  return c;
}

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  if (c.data.manifest) {
    j["data"] = {{"manifest", c.data.manifest->string()}};
  } else {
    ordered_json s;
    s["mass"] = c.data.synth_counts.mass;
    s["calcification"] = c.data.synth_counts.calcification;
    s["normal"] = c.data.synth_counts.normal;
    s["seed"] = c.data.synth_seed;
    j["data"] = {{"synthgen", s}};
  }
  ordered_json split;
  split["train"] = c.ratios.train;
  split["validation"] = c.ratios.validation;
  split["test"] = c.ratios.test;
  split["seed"] = c.split_seed;
  j["split"] = split;
  j["seed"] = c.seed;
  j["clinical_weights"] = {{"w_tpr", c.weights.w_tpr}, {"w_spec", c.weights.w_spec}};
  j["literal_paper_objective"] = c.literal_paper_objective;
  j["width_divisor"] = c.width_divisor;
  ordered_json ckpts = ordered_json::object();
  for (const auto& [b, path] : c.backbone_checkpoints) ckpts[std::string(to_string(b))] = path.string();
  j["backbone_checkpoints"] = ckpts;
  j["save_checkpoints"] = c.save_checkpoints;
  ordered_json models = ordered_json::array();
  for (const auto& p : c.models) {
    ordered_json m;
    m["model"] = p.model;
    m["pretrained"] = p.pretrained;
    m["augment"] = p.augment;
    if (p.display_name) m["name"] = *p.display_name;
    m["epochs"] = p.train.epochs;
    m["batch_size"] = p.train.batch_size;
    m["learning_rate"] = p.train.learning_rate;
    m["early_stop_patience"] =
        p.train.early_stop_patience ? ordered_json(*p.train.early_stop_patience) : ordered_json();
    models.push_back(m);
  }
  j["models"] = models;
  return j;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  ExperimentConfig c = experiment_from_json(j);
  const std::filesystem::path base = path.parent_path();
  if (c.data.manifest && c.data.manifest->is_relative()) c.data.manifest = base / *c.data.manifest;
  for (auto& [b, p] : c.backbone_checkpoints) {
    if (p.is_relative()) p = base / p;
  }
  return c;
}

namespace {

std::string plan_name(const ModelPlan& plan) {
  if (plan.display_name) return *plan.display_name;
  std::string name = plan.model == "baseline"
                         ? build_baseline().name
                         : transfer_model_name(parse_backbone(plan.model), plan.pretrained);
  if (plan.augment) name += "+Augmentation";
  return name;
}

}  // namespace

ModelSpec plan_spec(const ModelPlan& plan, const BackboneRegistry& registry) {
  ModelSpec spec = plan.model == "baseline"
                       ? build_baseline()
                       : build_transfer(parse_backbone(plan.model), plan.pretrained, registry);
  spec.name = plan_name(plan);
  return spec;
}

BackboneRegistry experiment_registry(const ExperimentConfig& config) {
  BackboneRegistry registry;
  for (auto kind : {Backbone::Vgg16, Backbone::Resnet50, Backbone::Mobilenet}) {
    auto provider = std::make_shared<StandardBackbone>(kind, config.width_divisor);
    const auto it = config.backbone_checkpoints.find(kind);
    if (it != config.backbone_checkpoints.end()) provider->load_weights(it->second);
    registry.register_provider(provider);
  }
  return registry;
}

std::filesystem::path run_root() {
  const char* env = std::getenv("MAMMO_RUN_ROOT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("runs");
}

std::string run_directory_name(const ExperimentConfig& config) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &utc);
  return std::string(stamp) + "-" + hex64(config_hash(config)).substr(0, 8);
}

void save_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
  csv::Writer w(path, {"threshold", "fpr", "tpr"});
  for (const auto& p : curve.points) {
    w.row({csv::format_double(p.threshold), csv::format_double(p.fpr), csv::format_double(p.tpr)});
  }
}

ordered_json threshold_summary(const RocCurve& curve, const ThresholdDecision& youden,
                               const ThresholdDecision& clinical,
                               const std::optional<ThresholdDecision>& literal) {
  ordered_json j;
  j["auc"] = curve.auc;
  j["youden"] = to_json(youden);
  j["clinical"] = to_json(clinical);
  if (literal) j["literal"] = to_json(*literal);
  return j;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& root,
                                const LogFn& log) {
  validate_experiment(config);
  const auto say = [&](const std::string& s) {
    if (log) log(s);
  };

  std::vector<PatchRecord> records;
  if (config.data.manifest) {
    say("loading manifest " + config.data.manifest->string());
    records = load_manifest(*config.data.manifest);
  } else {
    say("synthesizing " + std::to_string(config.data.synth_counts.total()) + " patches");
    records = generate_dataset(config.data.synth_counts, config.data.synth_seed);
  }
  const SplitAssignment split = stratified_split(records, config.ratios, config.split_seed);
  const SplitData data = partition(std::move(records), split);

  ExperimentResult result;
  const std::string name = run_directory_name(config);
  result.run_dir = root / name;
  for (int k = 2; std::filesystem::exists(result.run_dir); ++k) {
    result.run_dir = root / (name + "-" + std::to_string(k));
  }
  std::filesystem::create_directories(result.run_dir);
  write_text(result.run_dir / "config.json", to_json(config).dump(2) + "\n");
  save_split(split, result.run_dir / "split.csv");

  RunReport& report = result.report;
  report.run_id = result.run_dir.filename().string();
  report.split_hash = hex64(split.hash());
  report.seed = config.seed;
  report.train_size = static_cast<std::int64_t>(data.train.size());
  report.validation_size = static_cast<std::int64_t>(data.validation.size());
  report.test_size = static_cast<std::int64_t>(data.test.size());
  report.weights = config.weights;

  const BackboneRegistry registry = experiment_registry(config);
  for (std::size_t i = 0; i < config.models.size(); ++i) {
    const ModelPlan& plan = config.models[i];
    ModelRow row;
    row.key = plan_key(plan);
    row.name = plan_name(plan);
    row.pretrained = plan.pretrained;
    row.augmented = plan.augment;
    row.batch_size = plan.train.batch_size;
    row.preprocessing = preprocessing_of(plan);
    row.epochs = plan.train.epochs;
    const auto started = std::chrono::steady_clock::now();
    try {
      const ModelSpec spec = plan_spec(plan, registry);
      const std::filesystem::path dir =
          result.run_dir / (std::to_string(i + 1) + "-" + row.key +
                            (plan.pretrained ? "-pretrained" : "") + (plan.augment ? "-augment" : ""));
      std::filesystem::create_directories(dir);
      TrainConfig tc = plan.train;
      tc.seed = config.seed;
      if (plan.augment && !tc.augment_policy) tc.augment_policy = AugmentPolicy{.seed = config.seed};
      say("training " + row.name);
      TrainResult trained = train(spec, data, tc, registry, [&](const EpochStats& e) {
        say("  epoch " + std::to_string(e.epoch) + "  loss " + fixed(e.train_loss, 4) + "  acc " +
            fixed(e.train_accuracy, 4) + "  val_loss " + fixed(e.val_loss, 4) + "  val_acc " +
            fixed(e.val_accuracy, 4));
      });
      row.epochs_run = static_cast<int>(trained.history.epochs.size());
      save_history_csv(trained.history, dir / "history.csv");
      if (config.save_checkpoints) {
        save_checkpoint(trained.model.to_checkpoint(), dir / "checkpoint.bin");
      }

      const Evaluation test = evaluate(trained.model, data.test);
      save_scores_csv(data.test, test, dir / "scores.csv");
      row.accuracy = test.accuracy;
      const RocCurve curve = roc_curve(test.labels, test.scores);
      row.auc = curve.auc;
      row.youden = youden_threshold(test.labels, test.scores);
      row.clinical = clinical_threshold(test.labels, test.scores, config.weights);
      if (config.literal_paper_objective) {
        row.literal = literal_clinical_threshold(test.labels, test.scores, config.weights);
      }
      row.dominance = compare_operating_points(curve, benchmark_constants().radiologists);
      save_roc_csv(curve, dir / "roc.csv");
      write_text(dir / "thresholds.json",
                 threshold_summary(curve, row.youden, row.clinical, row.literal).dump(2) + "\n");
      say("  test accuracy " + fixed(test.accuracy, 4) + "  auc " + fixed(curve.auc, 4));
    } catch (const Error& e) {
      row.error = row.name + ": " + e.what();
      say("  failed: " + row.error);
    }
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.rows.push_back(std::move(row));
  }

  write_text(result.run_dir / "report.txt", render_report(report, ReportFormat::Text));
  write_text(result.run_dir / "report.json", render_report(report, ReportFormat::Json));
  write_text(result.run_dir / "report.csv", render_report(report, ReportFormat::Csv));
  return result;
}

}  // namespace mammo
