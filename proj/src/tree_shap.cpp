#include "masuq/tree_shap.hpp"

#include <cmath>

#include "masuq/error.hpp"

namespace masuq {
namespace {

struct PathElement {
  int feature = -1;
  double zero_fraction = 0;
  double one_fraction = 0;
  double pweight = 0;
};

using Path = std::vector<PathElement>;

void extend_path(Path& path, int depth, double zero, double one, int feature) {
  path.resize(static_cast<std::size_t>(depth) + 1);
  path[static_cast<std::size_t>(depth)] = {feature, zero, one, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    const auto u = static_cast<std::size_t>(i);
    path[u + 1].pweight += one * path[u].pweight * (i + 1) / static_cast<double>(depth + 1);
    path[u].pweight = zero * path[u].pweight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(Path& path, int depth, int index) {
  const double one = path[static_cast<std::size_t>(index)].one_fraction;
  const double zero = path[static_cast<std::size_t>(index)].zero_fraction;
  double next = path[static_cast<std::size_t>(depth)].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    auto& e = path[static_cast<std::size_t>(i)];
    if (one != 0) {
      const double tmp = e.pweight;
      e.pweight = next * (depth + 1) / ((i + 1) * one);
      next = tmp - e.pweight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      e.pweight = e.pweight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    auto& dst = path[static_cast<std::size_t>(i)];
    const auto& src = path[static_cast<std::size_t>(i) + 1];
    dst.feature = src.feature;
    dst.zero_fraction = src.zero_fraction;
    dst.one_fraction = src.one_fraction;
  }
  path.resize(static_cast<std::size_t>(depth));
}

// Total permutation weight of the path with element `index` removed.
double unwound_sum(const Path& path, int depth, int index) {
  const double one = path[static_cast<std::size_t>(index)].one_fraction;
  const double zero = path[static_cast<std::size_t>(index)].zero_fraction;
  double next = path[static_cast<std::size_t>(depth)].pweight;
  double total = 0;
  for (int i = depth - 1; i >= 0; --i) {
    const auto& e = path[static_cast<std::size_t>(i)];
    if (one != 0) {
      const double tmp = next * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next = e.pweight - tmp * zero * (depth - i) / static_cast<double>(depth + 1);
    } else if (zero != 0) {
      total += e.pweight / zero / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

void recurse(const Tree& tree, std::size_t node, std::span<const double> x, std::vector<double>& phi,
             Path path, int depth, double zero, double one, int feature) {
  extend_path(path, depth, zero, one, feature);
  const TreeNode& n = tree.nodes[node];
  if (n.is_leaf()) {
    for (int i = 1; i <= depth; ++i) {
      const auto& e = path[static_cast<std::size_t>(i)];
      const double w = unwound_sum(path, depth, i);
      phi[static_cast<std::size_t>(e.feature)] += w * (e.one_fraction - e.zero_fraction) * n.value;
    }
    return;
  }
  const double v = x[static_cast<std::size_t>(n.feature)];
  const bool go_left = std::isnan(v) || v < n.threshold;
  const auto hot = static_cast<std::size_t>(go_left ? n.left : n.right);
  const auto cold = static_cast<std::size_t>(go_left ? n.right : n.left);
  // Child covers normalized by their own sum so fractions add to exactly 1.
  const double c_hot = tree.nodes[hot].cover, c_cold = tree.nodes[cold].cover;
  const double hot_zero = c_hot + c_cold > 0 ? c_hot / (c_hot + c_cold) : 0.5;
  const double cold_zero = c_hot + c_cold > 0 ? c_cold / (c_hot + c_cold) : 0.5;

  double incoming_zero = 1, incoming_one = 1;
  for (int k = 1; k <= depth; ++k) {
    if (path[static_cast<std::size_t>(k)].feature == n.feature) {
      incoming_zero = path[static_cast<std::size_t>(k)].zero_fraction;
      incoming_one = path[static_cast<std::size_t>(k)].one_fraction;
      unwind_path(path, depth, k);
      --depth;
      break;
    }
  }
  recurse(tree, hot, x, phi, path, depth + 1, hot_zero * incoming_zero, incoming_one, n.feature);
  recurse(tree, cold, x, phi, path, depth + 1, cold_zero * incoming_zero, 0.0, n.feature);
}

double subtree_expectation(const Tree& tree, std::size_t node) {
  const TreeNode& n = tree.nodes[node];
  if (n.is_leaf()) return n.value;
  const auto l = static_cast<std::size_t>(n.left), r = static_cast<std::size_t>(n.right);
  const double cl = tree.nodes[l].cover, cr = tree.nodes[r].cover;
  const double el = subtree_expectation(tree, l), er = subtree_expectation(tree, r);
  if (cl + cr <= 0) return 0.5 * (el + er);
  return (cl * el + cr * er) / (cl + cr);
}

}  // namespace

double expected_value(const Tree& tree) { return subtree_expectation(tree, 0); }

AttributionVector tree_attributions(const GbdtModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    throw Error(Errc::DimensionMismatch, "expected " + std::to_string(model.n_features) +
                                             " features, got " + std::to_string(x.size()));
  }
  AttributionVector out;
  out.phi.assign(model.n_features, 0.0);
  out.base_value = model.base_score;
  for (const auto& tree : model.trees) {
    out.base_value += expected_value(tree);
    if (tree.nodes.size() > 1) recurse(tree, 0, x, out.phi, Path{}, 0, 1.0, 1.0, -1);
  }
  return out;
}

}  // namespace masuq
