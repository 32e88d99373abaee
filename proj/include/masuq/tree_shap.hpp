#pragma once

#include <span>
#include <vector>

#include "masuq/gbdt.hpp"

namespace masuq {

struct AttributionVector {
  std::vector<double> phi;
  double base_value = 0;  // expected margin under the training cover distribution
};

/// Exact path-dependent attribution; base_value + sum(phi) equals the margin.
AttributionVector tree_attributions(const GbdtModel& model, std::span<const double> x);

/// Cover-weighted mean leaf value of a single tree.
double expected_value(const Tree& tree);

}  // namespace masuq
