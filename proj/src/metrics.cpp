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

#include "mammo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mammo/error.hpp"

namespace mammo {

namespace {

void check_inputs(std::span<const int> labels, std::span<const double> scores) {
  if (labels.empty()) throw InputError("no records to score");
  if (labels.size() != scores.size()) {
    throw InputError("got " + std::to_string(labels.size()) + " labels but " +
                     std::to_string(scores.size()) + " scores");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw InputError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                       " is not 0 or 1");
    }
    if (std::isnan(scores[i])) throw InputError("score at index " + std::to_string(i) + " is NaN");
  }
}

void require_both_classes(std::int64_t positives, std::int64_t negatives) {
  if (positives == 0 || negatives == 0) {
    throw InputError("ROC analysis needs both classes; got " + std::to_string(positives) +
                     " positives and " + std::to_string(negatives) + " negatives");
  }
}

ConfusionMatrix matrix_at(const RocCurve& curve, const RocPoint& p) {
  ConfusionMatrix m;
  m.tp = p.tp;
  m.fp = p.fp;
  m.fn = curve.positives - p.tp;
  m.tn = curve.negatives - p.fp;
  return m;
}

// Walks the candidates from the smallest threshold up, so a later candidate
// replaces the incumbent only when strictly better.
template <class Better>
ThresholdDecision select(const RocCurve& curve, Objective objective, Better better) {
  std::size_t best = curve.points.size() - 1;
  for (std::size_t i = curve.points.size() - 1; i-- > 0;) {
    if (better(curve.points[i], curve.points[best])) best = i;
  }
  const RocPoint& p = curve.points[best];
  ThresholdDecision d;
  d.threshold = p.threshold;
  d.matrix = matrix_at(curve, p);
  d.sensitivity = d.matrix.sensitivity();
  d.specificity = d.matrix.specificity();
  d.objective = objective;
  return d;
}

}  // namespace

double ConfusionMatrix::sensitivity() const {
  return positives() ? static_cast<double>(tp) / static_cast<double>(positives()) : 0.0;
}

double ConfusionMatrix::specificity() const {
  return negatives() ? static_cast<double>(tn) / static_cast<double>(negatives()) : 0.0;
}

double ConfusionMatrix::accuracy() const {
  const std::int64_t n = tp + fp + tn + fn;
  return n ? static_cast<double>(tp + tn) / static_cast<double>(n) : 0.0;
}

ConfusionMatrix confusion(std::span<const int> labels, std::span<const double> scores,
                          double threshold) {
  check_inputs(labels, scores);
  ConfusionMatrix m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool called = scores[i] >= threshold;
    if (labels[i] == 1) {
      ++(called ? m.tp : m.fn);
    } else {
      ++(called ? m.fp : m.tn);
    }
  }
  return m;
}

RocCurve roc_curve(std::span<const int> labels, std::span<const double> scores) {
  check_inputs(labels, scores);
  RocCurve curve;
  curve.positives = std::count(labels.begin(), labels.end(), 1);
  curve.negatives = static_cast<std::int64_t>(labels.size()) - curve.positives;
  require_both_classes(curve.positives, curve.negatives);

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double top = scores[order.front()];
  curve.points.push_back({std::nextafter(top, std::numeric_limits<double>::infinity()), 0.0, 0.0,
                          0, 0});
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) ++(labels[order[i]] ? tp : fp);
    curve.points.push_back({s, static_cast<double>(fp) / static_cast<double>(curve.negatives),
                            static_cast<double>(tp) / static_cast<double>(curve.positives), tp,
                            fp});
  }
  // Trapezoids in integer units of 1 / (2 P N).
  std::int64_t twice_area = 0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& a = curve.points[i - 1];
    const RocPoint& b = curve.points[i];
    twice_area += (b.fp - a.fp) * (b.tp + a.tp);
  }
  curve.auc = static_cast<double>(twice_area) /
              (2.0 * static_cast<double>(curve.positives) * static_cast<double>(curve.negatives));
  return curve;
}

double pairwise_auc(std::span<const int> labels, std::span<const double> scores) {
  check_inputs(labels, scores);
  std::int64_t twice_wins = 0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        twice_wins += 2;
      } else if (scores[i] == scores[j]) {
        twice_wins += 1;
      }
    }
  }
  if (pairs == 0) throw InputError("ROC analysis needs both classes");
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pairs));
}

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::Youden: return "youden";
    case Objective::ClinicalWeighted: return "clinical_weighted";
    case Objective::ClinicalLiteral: return "clinical_literal";
  }
  return "?";
}

void validate_weights(const ClinicalWeights& weights) {
  if (!std::isfinite(weights.w_tpr) || !std::isfinite(weights.w_spec) || weights.w_tpr < 0.0 ||
      weights.w_spec < 0.0) {
    throw ConfigError("clinical weights must be finite and non-negative");
  }
  if (weights.w_tpr == 0.0 && weights.w_spec == 0.0) {
    throw ConfigError("clinical weights must not both be zero");
  }
}

bool objective_tie(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

ThresholdDecision youden_threshold(std::span<const int> labels, std::span<const double> scores) {
  const RocCurve curve = roc_curve(labels, scores);
  const std::int64_t P = curve.positives;
  const std::int64_t N = curve.negatives;
  // J * P * N, exact.
  const auto scaled = [&](const RocPoint& p) { return p.tp * N - p.fp * P; };
  ThresholdDecision d = select(curve, Objective::Youden, [&](const RocPoint& a, const RocPoint& b) {
    return scaled(a) > scaled(b);
  });
  d.objective_value = d.sensitivity + d.specificity - 1.0;
  return d;
}

ThresholdDecision clinical_threshold(std::span<const int> labels, std::span<const double> scores,
                                     const ClinicalWeights& weights) {
  validate_weights(weights);
  const RocCurve curve = roc_curve(labels, scores);
  const auto value = [&](const RocPoint& p) {
    const ConfusionMatrix m = matrix_at(curve, p);
    return weights.w_tpr * m.sensitivity() + weights.w_spec * m.specificity();
  };
  ThresholdDecision d =
      select(curve, Objective::ClinicalWeighted, [&](const RocPoint& a, const RocPoint& b) {
        const double va = value(a);
        const double vb = value(b);
        return va > vb && !objective_tie(va, vb);
      });
  d.objective_value = weights.w_tpr * d.sensitivity + weights.w_spec * d.specificity;
  return d;
}

ThresholdDecision literal_clinical_threshold(std::span<const int> labels,
                                             std::span<const double> scores,
                                             const ClinicalWeights& weights) {
  validate_weights(weights);
  const RocCurve curve = roc_curve(labels, scores);
  const auto value = [&](const RocPoint& p) {
    const ConfusionMatrix m = matrix_at(curve, p);
    const double fnr = static_cast<double>(m.fn) / static_cast<double>(m.positives());
    return weights.w_tpr * m.sensitivity() + weights.w_spec * (1.0 - fnr);
  };
  ThresholdDecision d =
      select(curve, Objective::ClinicalLiteral, [&](const RocPoint& a, const RocPoint& b) {
        const double va = value(a);
        const double vb = value(b);
        return va > vb && !objective_tie(va, vb);
      });
  d.objective_value = weights.w_tpr * d.sensitivity + weights.w_spec * d.sensitivity;
  return d;
}

double sensitivity_at_specificity(const RocCurve& curve, double specificity) {
  const double x = 1.0 - specificity;
  double best = 0.0;
  bool found = false;
  // Points run from (0, 0) to (1, 1) with fpr non-decreasing.
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& a = curve.points[i - 1];
    const RocPoint& b = curve.points[i];
    if (x < a.fpr || x > b.fpr) continue;
    double tpr = std::max(a.tpr, b.tpr);
    if (b.fpr > a.fpr) tpr = a.tpr + (x - a.fpr) * (b.tpr - a.tpr) / (b.fpr - a.fpr);
    best = found ? std::max(best, tpr) : tpr;
    found = true;
  }
  return found ? best : (x <= 0.0 ? 0.0 : 1.0);
}

std::vector<Dominance> compare_operating_points(const RocCurve& curve,
                                                std::span<const OperatingPoint> benchmarks) {
  std::vector<Dominance> out;
  for (const auto& b : benchmarks) {
    Dominance d;
    d.benchmark = b;
    d.curve_sensitivity = sensitivity_at_specificity(curve, b.specificity);
    d.dominated = d.curve_sensitivity >= b.sensitivity;
    out.push_back(d);
  }
  return out;
}

}  // namespace mammo
