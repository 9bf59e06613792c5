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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mammo/augment.hpp"
#include "mammo/backbone.hpp"
#include "mammo/checkpoint.hpp"
#include "mammo/error.hpp"
#include "mammo/metrics.hpp"
#include "mammo/modelkit.hpp"
#include "mammo/report.hpp"
#include "mammo/rng.hpp"
#include "mammo/synthgen.hpp"
#include "mammo/trainer.hpp"

using namespace mammo;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "mammo_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------

Outcome architecture() {
  Outcome o;
  const auto t0 = Clock::now();
  const ParamCount pc = param_count(build_baseline());
  const double took = seconds_since(t0);
  const std::vector<std::string> shapes = {"(None, 254, 254, 32)", "(None, 252, 252, 64)",
                                           "(None, 126, 126, 64)", "(None, 1016064)",
                                           "(None, 32)",           "(None, 1)"};
  const std::vector<std::int64_t> params = {320, 18496, 0, 0, 32514080, 33};
  o.require(pc.layers.size() == 6, "layer count " + std::to_string(pc.layers.size()));
  for (std::size_t i = 0; i < std::min<std::size_t>(6, pc.layers.size()); ++i) {
    o.require(format_shape(pc.layers[i].output) == shapes[i],
              "layer " + std::to_string(i) + " shape " + format_shape(pc.layers[i].output));
    o.require(pc.layers[i].params == params[i],
              "layer " + std::to_string(i) + " params " + std::to_string(pc.layers[i].params));
  }
  o.require(pc.total == 32532929, "total " + std::to_string(pc.total));
  o.require(took < 1.0, "took " + fmt("%.3f s", took));
  if (o.pass) o.detail = "total 32,532,929 in " + fmt("%.4f s", took);
  return o;
}

Outcome dataset_statistics() {
  Outcome o;
  const fs::path dir = scratch("stats");
  write_png(Image(kPatchSize, kPatchSize, 0.5f), dir / "placeholder.png");
  std::vector<PatchRecord> records;
  for (const PlannedPatch& p : plan_dataset(kDdsmCounts, 1)) {
    PatchRecord r = to_record(p);
    r.image_path = "placeholder.png";
    records.push_back(std::move(r));
  }
  save_manifest(records, dir / "manifest.csv");
  const auto loaded = load_manifest(dir / "manifest.csv", {.load_pixels = false});
  const SummaryStats s = summarize(loaded);
  o.require(s.total_pathological == 4506, "pathological " + std::to_string(s.total_pathological));
  o.require(s.total_non_pathological == 6207,
            "non-pathological " + std::to_string(s.total_non_pathological));
  o.require(s.total == 10713, "total " + std::to_string(s.total));
  if (o.pass) o.detail = "4,506 / 6,207 / 10,713";
  return o;
}

Outcome split_contract() {
  Outcome o;
  std::vector<PatchRecord> records;
  for (const PlannedPatch& p : plan_dataset({2200, 2000, 5800}, 11)) records.push_back(to_record(p));
  const SplitRatios ratios{0.75, 0.10, 0.15};
  const SplitAssignment a = stratified_split(records, ratios, 42);
  const SplitAssignment b = stratified_split(records, ratios, 42);
  o.require(a == b && a.hash() == b.hash(), "assignment differs across runs");

  double global = 0;
  for (const auto& r : records) global += r.label == Label::Pathological;
  global /= static_cast<double>(records.size());
  const double want[] = {7500, 1000, 1500};
  double worst = 0;
  for (Split s : {Split::Train, Split::Validation, Split::Test}) {
    const double size = static_cast<double>(a.size_of(s));
    o.require(std::abs(size - want[static_cast<int>(s)]) <= 1.0,
              std::string(to_string(s)) + " size " + fmt("%.0f", size));
    double pos = 0;
    for (const auto& r : records) pos += a.at(r.id) == s && r.label == Label::Pathological;
    const double gap = std::abs(pos / size - global);
    worst = std::max(worst, gap);
    o.require(gap <= 0.02, std::string(to_string(s)) + " class fraction off by " + fmt("%.4f", gap));
  }
  if (o.pass) o.detail = "7500/1000/1500, max class-fraction gap " + fmt("%.5f", worst);
  return o;
}

struct ScoreSet {
  std::vector<int> labels;
  std::vector<double> scores;
};

ScoreSet random_set(std::uint64_t seed) {
  Rng rng(seed);
  const int n = 5 + static_cast<int>(rng.uniform() * 496);
  ScoreSet s;
  for (int i = 0; i < n; ++i) {
    double v = rng.uniform();
    if (seed % 2 == 1) v = std::round(v * 100.0) / 100.0;  // force ties
    s.scores.push_back(v);
    s.labels.push_back(rng.uniform() < 0.4 ? 1 : 0);
  }
  s.labels[0] = 1;
  s.labels[1] = 0;
  return s;
}

double brute_auc(const ScoreSet& s) {
  long double wins = 0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    if (s.labels[i] != 1) continue;
    for (std::size_t j = 0; j < s.scores.size(); ++j) {
      if (s.labels[j] != 0) continue;
      ++pairs;
      if (s.scores[i] > s.scores[j]) wins += 1;
      if (s.scores[i] == s.scores[j]) wins += 0.5L;
    }
  }
  return static_cast<double>(wins / pairs);
}

// Every distinct score is tried as a threshold; the smallest maximizer wins.
double brute_threshold(const ScoreSet& s, double w_tpr, double w_spec, bool youden) {
  std::vector<double> cand = s.scores;
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  double best_c = 0;
  long double best = -1e300L;
  for (double c : cand) {
    long double tp = 0, fp = 0, pos = 0, neg = 0;
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      const bool hit = s.scores[i] >= c;
      if (s.labels[i] == 1) {
        ++pos;
        tp += hit;
      } else {
        ++neg;
        fp += hit;
      }
    }
    const long double tpr = tp / pos, spec = 1 - fp / neg;
    long double v;
    bool better;
    if (youden) {
      v = tp * neg - fp * pos;  // proportional to J, exact in integers
      better = v > best;
    } else {
      v = w_tpr * tpr + w_spec * spec;
      better = v > best && !objective_tie(static_cast<double>(v), static_cast<double>(best));
    }
    if (better) {
      best = v;
      best_c = c;
    }
  }
  return best_c;
}

Outcome metrics_vs_brute_force() {
  Outcome o;
  double worst_auc = 0, worst_inv = 0;
  int youden_bad = 0, clinical_bad = 0;
  for (std::uint64_t k = 1; k <= 100; ++k) {
    const ScoreSet s = random_set(k);
    const RocCurve roc = roc_curve(s.labels, s.scores);
    worst_auc = std::max(worst_auc, std::abs(roc.auc - brute_auc(s)));
    std::vector<double> t;
    for (double v : s.scores) t.push_back(std::exp(3.0 * v) + v * v * v);
    worst_inv = std::max(worst_inv, std::abs(roc_curve(s.labels, t).auc - roc.auc));
    youden_bad += youden_threshold(s.labels, s.scores).threshold !=
                  brute_threshold(s, 0, 0, true);
    clinical_bad += clinical_threshold(s.labels, s.scores, {0.66, 0.33}).threshold !=
                    brute_threshold(s, 0.66, 0.33, false);
  }
  o.require(worst_auc <= 1e-9, "AUC off by " + fmt("%.3g", worst_auc));
  o.require(worst_inv <= 1e-9, "AUC not invariant, off by " + fmt("%.3g", worst_inv));
  o.require(youden_bad == 0, std::to_string(youden_bad) + " Youden mismatches");
  o.require(clinical_bad == 0, std::to_string(clinical_bad) + " clinical mismatches");
  if (o.pass) {
    o.detail = "max AUC gap " + fmt("%.2g", worst_auc) + ", transform gap " +
               fmt("%.2g", worst_inv) + ", thresholds exact on 100 sets";
  }
  return o;
}

Outcome threshold_ordering() {
  Outcome o;
  int above = 0, differ = 0;
  for (std::uint64_t k = 1001; k <= 1100; ++k) {
    const ScoreSet s = random_set(k);
    const double y = youden_threshold(s.labels, s.scores).threshold;
    above += clinical_threshold(s.labels, s.scores, {0.66, 0.33}).threshold > y;
    differ += clinical_threshold(s.labels, s.scores, {0.5, 0.5}).threshold != y;
  }
  o.require(above == 0, std::to_string(above) + " sets with clinical above Youden");
  o.require(differ == 0, std::to_string(differ) + " sets where (0.5, 0.5) differs from Youden");
  if (o.pass) o.detail = "100/100 ordered, 100/100 coincide at equal weights";
  return o;
}

// Kolmogorov-Smirnov statistic against U(lo, hi).
double ks_uniform(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = std::clamp((xs[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

Outcome augmentation() {
  Outcome o;
  const auto patches = generate_dataset({4, 3, 3}, 8);
  for (const auto& p : patches) {
    o.require(hflip(hflip(p.image)) == p.image, "hflip is not an involution on " + p.id);
    const AugmentPolicy zero{false, 0.0, 0.0, 5};
    o.require(random_augment(p.image, zero, 17) == p.image, "zero policy changed " + p.id);
  }
  bool threw_shift = false, threw_rot = false;
  try {
    shift(patches[0].image, 0.21, 0.0);
  } catch (const InputError&) {
    threw_shift = true;
  }
  try {
    rotate(patches[0].image, -20.5);
  } catch (const InputError&) {
    threw_rot = true;
  }
  o.require(threw_shift, "shift beyond 0.2 accepted");
  o.require(threw_rot, "rotation beyond 20 degrees accepted");

  const AugmentPolicy policy{.seed = 2024};
  std::vector<double> dx, dy, deg, flip;
  bool in_range = true, bounded = true;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const AugmentDraw d = sample_augment(policy, i);
    dx.push_back(d.dx);
    dy.push_back(d.dy);
    deg.push_back(d.degrees);
    flip.push_back(d.flip);
    bounded &= std::abs(d.dx) <= 0.2 && std::abs(d.dy) <= 0.2 && std::abs(d.degrees) <= 20.0;
    const Image out = apply_augment(patches[i % patches.size()].image, d, policy);
    in_range &= out.rows == kPatchSize && out.cols == kPatchSize;
    for (float v : out.pixels) in_range &= v >= 0.0f && v <= 1.0f;
  }
  const double ks = std::max({ks_uniform(dx, -0.2, 0.2), ks_uniform(dy, -0.2, 0.2),
                              ks_uniform(deg, -20.0, 20.0)});
  double flip_rate = 0;
  for (double f : flip) flip_rate += f;
  flip_rate /= 1000.0;
  o.require(bounded, "draw outside the policy bounds");
  o.require(in_range, "output not 256x256 in [0,1]");
  o.require(ks < 0.06, "KS statistic " + fmt("%.4f", ks));
  // Bernoulli(0.5) on 1000 draws; 0.06 mirrors the KS bound.
  o.require(std::abs(flip_rate - 0.5) < 0.06, "flip rate " + fmt("%.3f", flip_rate));
  if (o.pass) o.detail = "max KS " + fmt("%.4f", ks) + ", flip rate " + fmt("%.3f", flip_rate);
  return o;
}

Outcome end_to_end() {
  Outcome o;
  const ClassCounts counts{220, 201, 579};
  struct Run {
    TrainHistory history;
    double accuracy = 0, auc = 0, seconds = 0;
  };
  auto once = [&] {
    const auto t0 = Clock::now();
    auto records = generate_dataset(counts, 2026);
    const SplitAssignment split = stratified_split(records, {0.75, 0.10, 0.15}, 7);
    const SplitData data = partition(std::move(records), split);
    TrainConfig c;
    c.epochs = 15;
    c.batch_size = 32;
    c.learning_rate = 1e-5;
    c.seed = 1;
    TrainResult r = train(build_baseline(), data, c, default_backbones(), [](const EpochStats& e) {
      std::printf("  epoch %2d  loss %.4f  acc %.4f  val_loss %.4f  val_acc %.4f\n", e.epoch,
                  e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy);
      std::fflush(stdout);
    });
    const Evaluation ev = evaluate(r.model, data.test);
    Run run;
    run.history = r.history;
    run.accuracy = ev.accuracy;
    run.auc = roc_curve(ev.labels, ev.scores).auc;
    run.seconds = seconds_since(t0);
    std::printf("  test accuracy %.4f  AUC %.4f  %.1f s\n", run.accuracy, run.auc, run.seconds);
    std::fflush(stdout);
    return run;
  };
  const Run a = once();
  const Run b = once();
  o.require(a.accuracy >= 0.90, "test accuracy " + fmt("%.4f", a.accuracy));
  o.require(a.auc >= 0.95, "AUC " + fmt("%.4f", a.auc));
  o.require(a.seconds <= 600.0, "runtime " + fmt("%.1f s", a.seconds) + " > 600 s");
  o.require(a.history == b.history, "histories differ between same-seed runs");
  o.detail = (o.pass ? std::string() : o.detail + " | ") + "accuracy " + fmt("%.4f", a.accuracy) +
             ", AUC " + fmt("%.4f", a.auc) + ", " + fmt("%.1f s", a.seconds) + " per run" +
             (a.history == b.history ? ", histories identical" : "");
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome structural_run() {
  Outcome o;
  const fs::path dir = scratch("structural");
  const fs::path manifest = write_dataset({30, 20, 50}, 99, dir / "data");

  // Backbone weights are taken from a checkpoint trained on this corpus.
  ExperimentConfig pre;
  pre.data.manifest = manifest;
  pre.width_divisor = 16;
  ModelPlan donor;
  donor.model = "vgg16";
  donor.train.epochs = 1;
  pre.models = {donor};
  const ExperimentResult p = run_experiment(pre, dir / "runs");
  const fs::path ckpt = p.run_dir / "1-vgg16" / "checkpoint.bin";
  o.require(p.report.rows[0].ok(), "pretraining failed: " + p.report.rows[0].error);

  ExperimentConfig c = pre;
  c.backbone_checkpoints[Backbone::Vgg16] = ckpt;
  ModelPlan tuned = donor;
  tuned.pretrained = true;
  tuned.train.epochs = 2;
  c.models = {tuned};
  const ExperimentResult r = run_experiment(c, dir / "runs");
  o.require(r.report.rows.size() == 1 && r.report.rows[0].ok(),
            "pretrained run failed: " + (r.report.rows.empty() ? "" : r.report.rows[0].error));

  const std::string text = slurp(r.run_dir / "report.txt");
  for (const char* col : {"Model", "Size of Batch", "Special pre-processing", "Accuracy (test)",
                          "Number of epochs", "AUC"}) {
    o.require(text.find(col) != std::string::npos, std::string("missing column ") + col);
  }
  o.require(text.find("MVGG16+ImageNet") != std::string::npos, "model row missing");
  const fs::path roc = r.run_dir / "1-vgg16-pretrained" / "roc.csv";
  o.require(fs::exists(roc) && slurp(roc).starts_with("threshold,fpr,tpr"), "roc.csv missing");
  for (const char* f : {"report.json", "report.csv", "split.csv"}) {
    o.require(fs::exists(r.run_dir / f), std::string("missing ") + f);
  }
  if (o.pass) {
    o.detail = "MVGG16+ImageNet at width/16, AUC " + fmt("%.3f", r.report.rows[0].auc) +
               ", report and ROC written";
  }
  return o;
}

Outcome dominance() {
  Outcome o;
  const auto& readers = benchmark_constants().radiologists;
  const std::vector<int> labels = {1, 1, 1, 0, 0, 0, 0};
  const std::vector<double> perfect = {0.9, 0.8, 0.7, 0.3, 0.2, 0.1, 0.05};
  const RocCurve best = roc_curve(labels, perfect);
  o.require(best.auc == 1.0, "perfect AUC " + fmt("%.6f", best.auc));
  for (const Dominance& d : compare_operating_points(best, readers)) {
    o.require(d.dominated, "perfect curve misses " + d.benchmark.label);
  }
  const std::vector<double> flat(labels.size(), 0.5);
  const RocCurve chance = roc_curve(labels, flat);
  for (const Dominance& d : compare_operating_points(chance, readers)) {
    o.require(!d.dominated, "chance curve dominates " + d.benchmark.label);
  }
  if (o.pass) o.detail = "perfect curve 3/3, chance curve 0/3";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"architecture oracle", architecture},
      {"dataset-statistics oracle", dataset_statistics},
      {"split contract", split_contract},
      {"metrics vs brute force", metrics_vs_brute_force},
      {"threshold ordering", threshold_ordering},
      {"augmentation invariants", augmentation},
      {"dominance report", dominance},
      {"structural run with pretrained backbone", structural_run},
      {"end-to-end desk-scale run", end_to_end},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
