#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace masuq {

// Zero-fill threshold for degenerate denominators (mean, IQR).
inline constexpr double kDegenerateEps = 1e-12;

struct StatSummary {
  double total = 0;
  double mean = 0;
  double max = 0;
  double min = 0;
  double std = 0;
  double variance = 0;
  double median = 0;
  double q1 = 0;
  double q3 = 0;
  std::size_t count = 0;

  bool operator==(const StatSummary&) const = default;
};

struct ShapeMetrics {
  double range = 0;
  double iqr = 0;
  double bowley_skewness = 0;
  double cv = 0;
  double tail_weight = 0;
  double stability_index = 1;
};

/// Shannon entropy in nats of a full next-token distribution.
/// Throws Errc::NonDistribution if a component is negative or the vector
/// does not sum to 1 within 1e-9.
double token_entropy(std::span<const double> dist);

/// Entropy lower bound from a truncated top-K list of (token, logprob) pairs.
/// The unreported mass 1 - sum(p_k) is folded into a single extra outcome.
double entropy_from_truncated_logprobs(std::span<const std::pair<std::string, double>> pairs);
double entropy_from_truncated_logprobs(std::span<const double> logprobs);

/// Population statistics; quantiles interpolate linearly at h = (N - 1) q.
/// Empty input yields the all-zero summary.
StatSummary describe(std::span<const double> values);

/// Linear-interpolation quantile of already sorted data.
double sorted_quantile(std::span<const double> sorted, double q);

ShapeMetrics shape(const StatSummary& summary);

}  // namespace masuq
