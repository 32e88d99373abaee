#include "masuq/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "masuq/error.hpp"

namespace masuq {
namespace {

using Json = nlohmann::json;

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

struct SplitCandidate {
  double gain = 0;
  int feature = -1;
  double threshold = 0;
  std::size_t left_count = 0;  // rows going left, in sorted order of `feature`
};

// Working node: per-feature row lists sorted by that feature's value.
struct WorkNode {
  int id = 0;
  int depth = 0;
  double G = 0, H = 0;
  std::vector<std::vector<std::uint32_t>> sorted;  // parallel to the tree's feature sample
  SplitCandidate best;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, const std::vector<double>& g, const std::vector<double>& h,
              const std::vector<std::size_t>& features, const GbdtConfig& cfg)
      : X_(X), g_(g), h_(h), features_(features), cfg_(cfg) {}

  Tree build(const std::vector<std::vector<std::uint32_t>>& presorted,
             const std::vector<char>& in_sample) {
    WorkNode root;
    root.id = 0;
    root.sorted.resize(features_.size());
    for (std::size_t k = 0; k < features_.size(); ++k) {
      auto& dst = root.sorted[k];
      for (auto r : presorted[features_[k]]) {
        if (in_sample[r]) dst.push_back(r);
      }
    }
    if (!features_.empty()) {
      for (auto r : root.sorted[0]) {
        root.G += g_[r];
        root.H += h_[r];
      }
    }
    tree_.nodes.push_back(make_leaf(root.G, root.H));
    if (features_.empty() || root.sorted[0].empty()) return std::move(tree_);
    find_split(root);

    if (cfg_.policy == GrowthPolicy::level_wise) {
      std::vector<WorkNode> level;
      level.push_back(std::move(root));
      for (int d = 0; d < cfg_.max_depth && !level.empty(); ++d) {
        std::vector<WorkNode> next;
        for (auto& node : level) {
          if (node.best.feature < 0) continue;
          auto [l, r] = split(node);
          find_split(l);
          find_split(r);
          next.push_back(std::move(l));
          next.push_back(std::move(r));
        }
        level = std::move(next);
      }
    } else {
      std::vector<WorkNode> leaves;
      leaves.push_back(std::move(root));
      int leaf_count = 1;
      while (leaf_count < cfg_.num_leaves) {
        // Highest-gain leaf; earliest created wins ties.
        std::size_t pick = leaves.size();
        for (std::size_t k = 0; k < leaves.size(); ++k) {
          if (leaves[k].best.feature < 0) continue;
          if (pick == leaves.size() || leaves[k].best.gain > leaves[pick].best.gain) pick = k;
        }
        if (pick == leaves.size()) break;
        WorkNode node = std::move(leaves[pick]);
        leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
        auto [l, r] = split(node);
        find_split(l);
        find_split(r);
        leaves.push_back(std::move(l));
        leaves.push_back(std::move(r));
        ++leaf_count;
      }
    }
    return std::move(tree_);
  }

 private:
  double score(double G, double H) const {
    const double t = soft_threshold(G, cfg_.reg_alpha);
    return t * t / (H + cfg_.reg_lambda);
  }

  TreeNode make_leaf(double G, double H) const {
    TreeNode n;
    n.value = -soft_threshold(G, cfg_.reg_alpha) / (H + cfg_.reg_lambda) * cfg_.learning_rate;
    n.cover = H;
    return n;
  }

  void find_split(WorkNode& node) {
    node.best = SplitCandidate{};
    const std::size_t n = node.sorted[0].size();
    if (cfg_.policy == GrowthPolicy::level_wise && node.depth >= cfg_.max_depth) return;
    const std::size_t min_data = static_cast<std::size_t>(std::max(1, cfg_.min_data_in_leaf));
    if (n < 2 * min_data) return;
    const double parent = score(node.G, node.H);
    for (std::size_t k = 0; k < features_.size(); ++k) {
      const auto& rows = node.sorted[k];
      const std::size_t f = features_[k];
      double GL = 0, HL = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        GL += g_[rows[i]];
        HL += h_[rows[i]];
        const double xi = X_(rows[i], f);
        const double xn = X_(rows[i + 1], f);
        if (!(xi < xn)) continue;
        const std::size_t nl = i + 1;
        if (nl < min_data || n - nl < min_data) continue;
        const double GR = node.G - GL, HR = node.H - HL;
        if (HL < cfg_.min_child_weight || HR < cfg_.min_child_weight) continue;
        const double gain = 0.5 * (score(GL, HL) + score(GR, HR) - parent);
        if (gain > node.best.gain + 1e-12) {
          double thr = xi + (xn - xi) / 2;
          if (!(xi < thr)) thr = xn;
          node.best = {gain, static_cast<int>(k), thr, nl};
        }
      }
    }
  }

  std::pair<WorkNode, WorkNode> split(WorkNode& node) {
    const std::size_t k = static_cast<std::size_t>(node.best.feature);
    const std::size_t f = features_[k];
    const double thr = node.best.threshold;
    WorkNode l, r;
    l.depth = r.depth = node.depth + 1;
    l.sorted.resize(features_.size());
    r.sorted.resize(features_.size());
    // Stable partition keeps each child's lists sorted.
    for (std::size_t q = 0; q < features_.size(); ++q) {
      for (auto row : node.sorted[q]) {
        (X_(row, f) < thr ? l : r).sorted[q].push_back(row);
      }
    }
    node.sorted.clear();
    node.sorted.shrink_to_fit();
    for (auto row : l.sorted[0]) {
      l.G += g_[row];
      l.H += h_[row];
    }
    for (auto row : r.sorted[0]) {
      r.G += g_[row];
      r.H += h_[row];
    }
    l.id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(make_leaf(l.G, l.H));
    r.id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(make_leaf(r.G, r.H));
    TreeNode& p = tree_.nodes[static_cast<std::size_t>(node.id)];
    p.feature = static_cast<int>(f);
    p.threshold = thr;
    p.left = l.id;
    p.right = r.id;
    p.gain = node.best.gain;
    p.value = 0;
    return {std::move(l), std::move(r)};
  }

  const Matrix& X_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  const std::vector<std::size_t>& features_;
  const GbdtConfig& cfg_;
  Tree tree_;
};

double logloss(double margin, int y) {
  // log(1 + e^{-z}) for y=1, log(1 + e^{z}) for y=0, computed stably.
  const double z = y ? margin : -margin;
  return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

}  // namespace

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols) throw Error(Errc::DimensionMismatch, "ragged matrix rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
  Matrix m(idx.size(), cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = row(idx[i]);
    std::copy(src.begin(), src.end(), m.row(i).begin());
  }
  return m;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - (max % n);
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  double u1;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<std::size_t> Rng::sample(std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + below(n - i)]);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

GbdtConfig GbdtConfig::level_wise(std::uint64_t seed) {
  GbdtConfig c;
  c.policy = GrowthPolicy::level_wise;
  c.min_child_weight = 1.0;
  c.min_data_in_leaf = 1;
  c.weighting = ClassWeighting::positive_ratio;
  c.seed = seed;
  return c;
}

GbdtConfig GbdtConfig::leaf_wise(std::uint64_t seed) {
  GbdtConfig c;
  c.policy = GrowthPolicy::leaf_wise;
  c.min_child_weight = 1e-3;
  c.min_data_in_leaf = 20;
  c.weighting = ClassWeighting::balanced;
  c.seed = seed;
  return c;
}

Json GbdtConfig::to_json() const {
  return Json{{"policy", policy == GrowthPolicy::level_wise ? "level_wise" : "leaf_wise"},
              {"n_estimators", n_estimators},
              {"learning_rate", learning_rate},
              {"max_depth", max_depth},
              {"num_leaves", num_leaves},
              {"subsample", subsample},
              {"colsample", colsample},
              {"reg_alpha", reg_alpha},
              {"reg_lambda", reg_lambda},
              {"min_child_weight", min_child_weight},
              {"min_data_in_leaf", min_data_in_leaf},
              {"early_stopping_rounds", early_stopping_rounds},
              {"validation_fraction", validation_fraction},
              {"weighting", weighting == ClassWeighting::positive_ratio ? "positive_ratio" : "balanced"},
              {"seed", seed}};
}

GbdtConfig GbdtConfig::from_json(const Json& j) {
  GbdtConfig c;
  c.policy = j.at("policy") == "level_wise" ? GrowthPolicy::level_wise : GrowthPolicy::leaf_wise;
  c.n_estimators = j.at("n_estimators");
  c.learning_rate = j.at("learning_rate");
  c.max_depth = j.at("max_depth");
  c.num_leaves = j.at("num_leaves");
  c.subsample = j.at("subsample");
  c.colsample = j.at("colsample");
  c.reg_alpha = j.at("reg_alpha");
  c.reg_lambda = j.at("reg_lambda");
  c.min_child_weight = j.at("min_child_weight");
  c.min_data_in_leaf = j.at("min_data_in_leaf");
  c.early_stopping_rounds = j.at("early_stopping_rounds");
  c.validation_fraction = j.at("validation_fraction");
  c.weighting = j.at("weighting") == "positive_ratio" ? ClassWeighting::positive_ratio
                                                      : ClassWeighting::balanced;
  c.seed = j.at("seed");
  return c;
}

double Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    const double v = x[static_cast<std::size_t>(n.feature)];
    i = static_cast<std::size_t>((std::isnan(v) || v < n.threshold) ? n.left : n.right);
  }
  return nodes[i].value;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
    d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

int Tree::leaf_count() const {
  int n = 0;
  for (const auto& node : nodes) n += node.is_leaf();
  return n;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double GbdtModel::margin(std::span<const double> x) const {
  if (x.size() != n_features) {
    throw Error(Errc::DimensionMismatch, "expected " + std::to_string(n_features) + " features, got " +
                                             std::to_string(x.size()));
  }
  double m = base_score;
  for (const auto& t : trees) m += t.predict(x);
  return m;
}

double GbdtModel::predict_proba(std::span<const double> x) const { return sigmoid(margin(x)); }

std::vector<double> GbdtModel::gain_importance() const {
  std::vector<double> imp(n_features, 0.0);
  for (const auto& t : trees) {
    for (const auto& n : t.nodes) {
      if (!n.is_leaf()) imp[static_cast<std::size_t>(n.feature)] += n.gain;
    }
  }
  return imp;
}

Json GbdtModel::to_json() const {
  Json trees_json = Json::array();
  for (const auto& t : trees) {
    Json nodes = Json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back(Json::array({n.feature, n.threshold, n.left, n.right, n.value, n.cover, n.gain}));
    }
    trees_json.push_back(std::move(nodes));
  }
  return Json{{"config", config.to_json()},
              {"base_score", base_score},
              {"n_features", n_features},
              {"trees", std::move(trees_json)}};
}

GbdtModel GbdtModel::from_json(const Json& j) {
  GbdtModel m;
  m.config = GbdtConfig::from_json(j.at("config"));
  m.base_score = j.at("base_score");
  m.n_features = j.at("n_features");
  for (const auto& tj : j.at("trees")) {
    Tree t;
    for (const auto& nj : tj) {
      TreeNode n;
      n.feature = nj.at(0);
      n.threshold = nj.at(1);
      n.left = nj.at(2);
      n.right = nj.at(3);
      n.value = nj.at(4);
      n.cover = nj.at(5);
      n.gain = nj.at(6);
      const int size = static_cast<int>(tj.size());
      if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size ||
                           n.feature >= static_cast<int>(m.n_features))) {
        throw Error(Errc::SchemaError, "model tree references a node or feature out of range");
      }
      t.nodes.push_back(n);
    }
    if (t.nodes.empty()) throw Error(Errc::SchemaError, "model tree has no nodes");
    m.trees.push_back(std::move(t));
  }
  return m;
}

GbdtModel train_gbdt(const Matrix& X, std::span<const int> y, const GbdtConfig& cfg) {
  if (X.rows != y.size()) throw Error(Errc::DimensionMismatch, "X rows and y length differ");
  if (X.rows == 0) throw Error(Errc::EmptyMatrix, "no training rows");
  for (double v : X.data) {
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteInput, "training matrix has a non-finite cell");
  }
  std::size_t n_pos = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(Errc::DegenerateLabels, "labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(v);
  }
  if (n_pos == 0 || n_pos == y.size()) throw Error(Errc::DegenerateLabels, "labels contain a single class");

  // Early-stopping holdout: the last share of each class, in input order.
  std::vector<char> is_val(X.rows, 0);
  if (cfg.early_stopping_rounds > 0 && cfg.validation_fraction > 0) {
    for (int c = 0; c <= 1; ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < X.rows; ++i) {
        if (y[i] == c) members.push_back(i);
      }
      const auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(members.size())));
      // Keep at least one training member in each class.
      for (std::size_t k = 0; k < n_val && k + 1 < members.size(); ++k) is_val[members[members.size() - 1 - k]] = 1;
    }
  }
  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < X.rows; ++i) (is_val[i] ? val_idx : train_idx).push_back(i);

  double n_tr_pos = 0, n_tr_neg = 0;
  for (auto i : train_idx) (y[i] ? n_tr_pos : n_tr_neg) += 1;
  double w_pos = 1, w_neg = 1;
  if (cfg.weighting == ClassWeighting::positive_ratio) {
    w_pos = n_tr_pos > 0 ? n_tr_neg / n_tr_pos : 1.0;
  } else {
    const double n = n_tr_pos + n_tr_neg;
    w_pos = n_tr_pos > 0 ? n / (2 * n_tr_pos) : 1.0;
    w_neg = n_tr_neg > 0 ? n / (2 * n_tr_neg) : 1.0;
  }

  GbdtModel model;
  model.config = cfg;
  model.n_features = X.cols;
  const double sw_pos = w_pos * n_tr_pos, sw_neg = w_neg * n_tr_neg;
  model.base_score = (sw_pos > 0 && sw_neg > 0) ? std::log(sw_pos / sw_neg) : 0.0;

  // Global presort of training rows by each feature (ties by row index).
  std::vector<std::vector<std::uint32_t>> presorted(X.cols);
  for (std::size_t f = 0; f < X.cols; ++f) {
    auto& v = presorted[f];
    v.assign(train_idx.begin(), train_idx.end());
    std::stable_sort(v.begin(), v.end(), [&](std::uint32_t a, std::uint32_t b) { return X(a, f) < X(b, f); });
  }

  Rng rng(cfg.seed);
  std::vector<double> F(X.rows, model.base_score), g(X.rows, 0), h(X.rows, 0), w(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) w[i] = y[i] ? w_pos : w_neg;
  const std::size_t n_train = train_idx.size();
  const std::size_t n_rows_tree = cfg.subsample < 1.0
      ? std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.subsample * static_cast<double>(n_train))))
      : n_train;
  const std::size_t n_feat_tree = cfg.colsample < 1.0
      ? std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.colsample * static_cast<double>(X.cols))))
      : X.cols;

  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t best_trees = 0;
  int since_best = 0;
  std::vector<char> in_sample(X.rows, 0);
  for (int it = 0; it < cfg.n_estimators; ++it) {
    for (auto i : train_idx) {
      const double p = sigmoid(F[i]);
      g[i] = w[i] * (p - y[i]);
      h[i] = w[i] * p * (1 - p);
    }
    std::fill(in_sample.begin(), in_sample.end(), 0);
    for (auto k : rng.sample(n_train, n_rows_tree)) in_sample[train_idx[k]] = 1;
    const auto features = rng.sample(X.cols, n_feat_tree);

    TreeBuilder builder(X, g, h, features, cfg);
    Tree tree = builder.build(presorted, in_sample);
    for (std::size_t i = 0; i < X.rows; ++i) F[i] += tree.predict(X.row(i));
    model.trees.push_back(std::move(tree));

    if (!val_idx.empty()) {
      double loss = 0;
      for (auto i : val_idx) loss += logloss(F[i], y[i]);
      loss /= static_cast<double>(val_idx.size());
      if (loss < best_loss - 1e-15) {
        best_loss = loss;
        best_trees = model.trees.size();
        since_best = 0;
      } else if (++since_best >= cfg.early_stopping_rounds) {
        break;
      }
    }
  }
  if (!val_idx.empty()) model.trees.resize(best_trees);
  return model;
}

}  // namespace masuq
