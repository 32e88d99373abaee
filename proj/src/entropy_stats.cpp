#include "masuq/entropy_stats.hpp"

#include <algorithm>
#include <cmath>

#include "masuq/error.hpp"

namespace masuq {

double token_entropy(std::span<const double> dist) {
  double sum = 0;
  for (double p : dist) {
    if (!(p >= 0) || !std::isfinite(p)) {
      throw Error(Errc::NonDistribution, "negative or non-finite component");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(Errc::NonDistribution, "components sum to " + std::to_string(sum));
  }
  double h = 0;
  for (double p : dist) {
    if (p > 0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double entropy_from_truncated_logprobs(std::span<const double> logprobs) {
  if (logprobs.empty()) throw Error(Errc::EmptyInput, "no logprobs");
  double mass = 0;
  double h = 0;
  for (double lp : logprobs) {
    if (std::isnan(lp) || lp > 1e-9) {
      throw Error(Errc::NonDistribution, "logprob must be <= 0");
    }
    if (lp > 0) lp = 0;
    const double p = std::exp(lp);
    mass += p;
    if (p > 0) h -= p * lp;
  }
  const double residual = std::max(0.0, 1.0 - mass);
  if (residual > 0) h -= residual * std::log(residual);
  return std::max(h, 0.0);
}

double entropy_from_truncated_logprobs(std::span<const std::pair<std::string, double>> pairs) {
  std::vector<double> lps;
  lps.reserve(pairs.size());
  for (const auto& [token, lp] : pairs) lps.push_back(lp);
  return entropy_from_truncated_logprobs(lps);
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0;
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

StatSummary describe(std::span<const double> values) {
  StatSummary s;
  if (values.empty()) return s;
  s.count = values.size();
  for (double v : values) s.total += v;
  const auto n = static_cast<double>(s.count);
  s.mean = s.total / n;
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.variance = ss / n;
  s.std = std::sqrt(s.variance);

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = sorted_quantile(sorted, 0.5);
  s.q1 = sorted_quantile(sorted, 0.25);
  s.q3 = sorted_quantile(sorted, 0.75);
  return s;
}

ShapeMetrics shape(const StatSummary& s) {
  if (s.count == 0) throw Error(Errc::EmptySummary, "shape of empty summary");
  ShapeMetrics m;
  m.range = s.max - s.min;
  m.iqr = s.q3 - s.q1;
  if (m.iqr >= kDegenerateEps) {
    m.bowley_skewness = (s.q3 + s.q1 - 2.0 * s.median) / m.iqr;
    m.tail_weight = (s.max - s.q3) / m.iqr;
  }
  if (std::abs(s.mean) >= kDegenerateEps) m.cv = s.std / s.mean;
  m.stability_index = 1.0 - m.cv;
  return m;
}

}  // namespace masuq
