#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace masuq {

/// conf = 1 / (1 + h). Raises NegativeEntropy.
double entropy_to_confidence(double h);

struct ReliabilityBin {
  int index = 0;
  double lo = 0;
  double hi = 0;
  std::size_t count = 0;
  double confidence = 0;  // mean confidence in the bin
  double accuracy = 0;
};

struct EceResult {
  double value = 0;
  std::vector<ReliabilityBin> bins;
};

/// Equal-width bins over [0,1], each [lo, hi) except the last, which is
/// closed. Raises LengthMismatch, EmptyInput, and Degenerate for B < 1 or a
/// confidence outside [0,1].
EceResult ece(std::span<const double> confidence, std::span<const int> correct, int bins = 10);

struct CausalInput {
  std::string key;
  double h_sas = 0;
  double h_r1 = 0;
  double h_r2 = 0;
  int sas_correct = 0;
  int mas_correct = 0;
};

struct CausalRecord {
  std::string key;
  double h_sas = 0, h_r1 = 0, h_r2 = 0;
  double role_effect = 0;         // h_r1 - h_sas
  double interaction_effect = 0;  // h_r2 - h_r1
  double total_effect = 0;        // role + interaction
  int delta_acc = 0;              // mas_correct - sas_correct
};

struct CausalSummary {
  std::vector<CausalRecord> records;
  double mean_role = 0;
  double mean_interaction = 0;
  double mean_total = 0;
  double fraction_interaction_negative = 0;
};

CausalRecord decompose(const CausalInput& in);
/// Raises EmptyInput on no samples.
CausalSummary causal_decompose(std::span<const CausalInput> inputs);

enum class Quadrant { genuine_improvement, possible_anchoring, productive_exploration, deterioration };
std::string_view to_string(Quadrant q);

/// delta_h == 0 groups with decreases.
Quadrant quadrant_classify(double delta_h, int delta_acc);

/// Counts in enum order.
std::array<std::size_t, 4> quadrant_counts(std::span<const CausalRecord> records);

struct ConfidenceSplit {
  double threshold = 0;  // median entropy; low means <= threshold
  std::size_t low_correct = 0;
  std::size_t low_incorrect = 0;  // confidently wrong
  std::size_t high_correct = 0;
  std::size_t high_incorrect = 0;
};

/// Raises EmptyInput, LengthMismatch.
ConfidenceSplit confidently_wrong_split(std::span<const double> entropy, std::span<const int> correct);

}  // namespace masuq
