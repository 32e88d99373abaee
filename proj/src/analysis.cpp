#include "masuq/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "masuq/entropy_stats.hpp"
#include "masuq/error.hpp"

namespace masuq {

double entropy_to_confidence(double h) {
  if (!(h >= 0)) throw Error(Errc::NegativeEntropy, "entropy must be non-negative");
  return 1.0 / (1.0 + h);
}

EceResult ece(std::span<const double> confidence, std::span<const int> correct, int bins) {
  if (confidence.size() != correct.size()) throw Error(Errc::LengthMismatch, "confidence and correctness differ in length");
  if (confidence.empty()) throw Error(Errc::EmptyInput, "no samples");
  if (bins < 1) throw Error(Errc::Degenerate, "need at least one bin");
  EceResult res;
  const double width = 1.0 / bins;
  std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> hit_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const double c = confidence[i];
    if (!(c >= 0 && c <= 1)) throw Error(Errc::Degenerate, "confidence outside [0,1]");
    const auto b = std::min(static_cast<std::size_t>(c * bins), static_cast<std::size_t>(bins - 1));
    conf_sum[b] += c;
    hit_sum[b] += correct[i] ? 1.0 : 0.0;
    ++count[b];
  }
  const double n = static_cast<double>(confidence.size());
  for (int b = 0; b < bins; ++b) {
    const auto u = static_cast<std::size_t>(b);
    ReliabilityBin bin;
    bin.index = b;
    bin.lo = b * width;
    bin.hi = b + 1 == bins ? 1.0 : (b + 1) * width;
    bin.count = count[u];
    if (count[u]) {
      bin.confidence = conf_sum[u] / static_cast<double>(count[u]);
      bin.accuracy = hit_sum[u] / static_cast<double>(count[u]);
      res.value += static_cast<double>(count[u]) / n * std::abs(bin.accuracy - bin.confidence);
    }
    res.bins.push_back(bin);
  }
  return res;
}

CausalRecord decompose(const CausalInput& in) {
  CausalRecord r;
  r.key = in.key;
  r.h_sas = in.h_sas;
  r.h_r1 = in.h_r1;
  r.h_r2 = in.h_r2;
  r.role_effect = in.h_r1 - in.h_sas;
  r.interaction_effect = in.h_r2 - in.h_r1;
  // Summing the parts keeps total == role + interaction bit-for-bit.
  r.total_effect = r.role_effect + r.interaction_effect;
  r.delta_acc = (in.mas_correct ? 1 : 0) - (in.sas_correct ? 1 : 0);
  return r;
}

CausalSummary causal_decompose(std::span<const CausalInput> inputs) {
  if (inputs.empty()) throw Error(Errc::EmptyInput, "no paired samples");
  CausalSummary s;
  std::size_t negative = 0;
  for (const auto& in : inputs) {
    s.records.push_back(decompose(in));
    const auto& r = s.records.back();
    s.mean_role += r.role_effect;
    s.mean_interaction += r.interaction_effect;
    s.mean_total += r.total_effect;
    negative += r.interaction_effect < 0;
  }
  const double n = static_cast<double>(inputs.size());
  s.mean_role /= n;
  s.mean_interaction /= n;
  s.mean_total /= n;
  s.fraction_interaction_negative = static_cast<double>(negative) / n;
  return s;
}

std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::genuine_improvement: return "genuine_improvement";
    case Quadrant::possible_anchoring: return "possible_anchoring";
    case Quadrant::productive_exploration: return "productive_exploration";
    case Quadrant::deterioration: return "deterioration";
  }
  return "deterioration";
}

Quadrant quadrant_classify(double delta_h, int delta_acc) {
  if (delta_h <= 0) return delta_acc > 0 ? Quadrant::genuine_improvement : Quadrant::possible_anchoring;
  return delta_acc > 0 ? Quadrant::productive_exploration : Quadrant::deterioration;
}

std::array<std::size_t, 4> quadrant_counts(std::span<const CausalRecord> records) {
  std::array<std::size_t, 4> c{};
  for (const auto& r : records) ++c[static_cast<std::size_t>(quadrant_classify(r.interaction_effect, r.delta_acc))];
  return c;
}

ConfidenceSplit confidently_wrong_split(std::span<const double> entropy, std::span<const int> correct) {
  if (entropy.size() != correct.size()) throw Error(Errc::LengthMismatch, "entropy and correctness differ in length");
  if (entropy.empty()) throw Error(Errc::EmptyInput, "no samples");
  ConfidenceSplit s;
  s.threshold = describe(entropy).median;
  for (std::size_t i = 0; i < entropy.size(); ++i) {
    const bool low = entropy[i] <= s.threshold;
    const bool ok = correct[i] != 0;
    if (low) (ok ? s.low_correct : s.low_incorrect)++;
    else (ok ? s.high_correct : s.high_incorrect)++;
  }
  return s;
}

}  // namespace masuq
