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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mammo {

// Labels are 1 for pathological, 0 otherwise. A record is called
// pathological when score >= threshold.

struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t positives() const { return tp + fn; }
  std::int64_t negatives() const { return tn + fp; }
  double sensitivity() const;  // 0 when there are no positives
  double specificity() const;  // 0 when there are no negatives
  double accuracy() const;

  bool operator==(const ConfusionMatrix&) const = default;
};

// Throws InputError on empty or mismatched inputs and labels other than 0/1.
ConfusionMatrix confusion(std::span<const int> labels, std::span<const double> scores,
                          double threshold);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
};

struct RocCurve {
  // Ordered by decreasing threshold: the first point sits just above the
  // highest score (0, 0), then one point per distinct score, ending at the
  // lowest score (1, 1).
  std::vector<RocPoint> points;
  std::int64_t positives = 0;
  std::int64_t negatives = 0;
  double auc = 0.0;
};

// Throws InputError unless both classes are present.
RocCurve roc_curve(std::span<const int> labels, std::span<const double> scores);

// P(s+ > s-) + P(s+ = s-)/2 over all positive/negative pairs.
double pairwise_auc(std::span<const int> labels, std::span<const double> scores);

enum class Objective { Youden, ClinicalWeighted, ClinicalLiteral };

std::string_view to_string(Objective o);

struct ClinicalWeights {
  double w_tpr = 0.66;
  double w_spec = 0.33;
};

// Throws ConfigError for negative, non-finite or all-zero weights.
void validate_weights(const ClinicalWeights& weights);

struct ThresholdDecision {
  double threshold = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double objective_value = 0.0;
  Objective objective = Objective::Youden;
  ConfusionMatrix matrix;
};

// Maximizes sensitivity + specificity - 1 over the distinct scores; ties go
// to the smaller threshold.
ThresholdDecision youden_threshold(std::span<const int> labels, std::span<const double> scores);

// Maximizes w_tpr * sensitivity + w_spec * specificity with the same
// candidates and tie rule. Objective values within 1e-12 (relative) of the
// best count as ties.
ThresholdDecision clinical_threshold(std::span<const int> labels, std::span<const double> scores,
                                     const ClinicalWeights& weights = {});

// The cost function as printed, w_tpr * TPR + w_spec * (1 - FNR). Since
// FNR = 1 - TPR this is (w_tpr + w_spec) * TPR, which the lowest threshold
// always maximizes. Kept for comparison only.
ThresholdDecision literal_clinical_threshold(std::span<const int> labels,
                                             std::span<const double> scores,
                                             const ClinicalWeights& weights = {});

// True when two weighted objective values count as equal.
bool objective_tie(double a, double b);

struct OperatingPoint {
  double sensitivity = 0.0;
  double specificity = 0.0;
  std::string label;
};

struct Dominance {
  OperatingPoint benchmark;
  double curve_sensitivity = 0.0;  // at the benchmark's specificity
  bool dominated = false;          // the curve point is at least as good in both
};

// Linear interpolation on the upper envelope of the curve at
// fpr = 1 - specificity.
double sensitivity_at_specificity(const RocCurve& curve, double specificity);

std::vector<Dominance> compare_operating_points(const RocCurve& curve,
                                                std::span<const OperatingPoint> benchmarks);

}  // namespace mammo
