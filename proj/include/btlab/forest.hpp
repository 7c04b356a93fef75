#pragma once

// Random Forest classifier: CART trees grown on Gini impurity with
// bootstrap resampling and per-split feature subsampling, vote-fraction
// probabilities, mean-decrease-in-impurity importance and Recursive
// Feature Elimination.
//
// Ties are broken by lowest index everywhere (split choice, vote argmax),
// and every random draw comes from a per-tree Rng seeded with
// derive_seed(config.seed, tree_index), so a forest is a pure function of
// (X, y, config).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "btlab/matrix.hpp"
#include "btlab/rng.hpp"

namespace btlab {

class TrainingError : public Error {
 public:
  using Error::Error;
};

enum class FeaturesPerSplit { Sqrt, All, Fixed };

struct ForestConfig {
  std::size_t n_trees = 10;
  std::optional<std::size_t> max_depth;  // unlimited when empty
  FeaturesPerSplit features_per_split = FeaturesPerSplit::Sqrt;
  std::size_t fixed_features = 0;  // used with FeaturesPerSplit::Fixed
  bool bootstrap = true;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // not part of the model; results do not depend on it

  /// Candidate features examined per split when `active` features are available.
  [[nodiscard]] std::size_t split_width(std::size_t active) const {
    std::size_t k = active;
    switch (features_per_split) {
      case FeaturesPerSplit::Sqrt:
        k = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(active))));
        break;
      case FeaturesPerSplit::All:
        break;
      case FeaturesPerSplit::Fixed:
        k = fixed_features;
        break;
    }
    return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(active, 1));
  }
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double impurity_decrease = 0.0;     // weighted by node share of the tree's sample
  std::vector<std::uint32_t> counts;  // leaves only: class counts
  std::uint32_t vote = 0;             // leaves only: majority class

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  [[nodiscard]] const TreeNode& leaf_for(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i];
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct TrainedForest {
  std::vector<DecisionTree> trees;
  std::vector<std::string> labels;  // class index -> name, sorted
  std::vector<bool> feature_mask;   // retained features, full input width
  ForestConfig config;

  [[nodiscard]] std::size_t n_features() const { return feature_mask.size(); }
  [[nodiscard]] std::size_t n_classes() const { return labels.size(); }

  friend bool operator==(const TrainedForest& a, const TrainedForest& b) {
    return a.trees == b.trees && a.labels == b.labels && a.feature_mask == b.feature_mask;
  }
};

namespace detail {

inline std::uint32_t argmax_lowest(std::span<const std::uint32_t> counts) {
  std::uint32_t best = 0;
  for (std::uint32_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > counts[best]) best = k;
  }
  return best;
}

/// n * gini = n - sum(c^2) / n
inline double weighted_gini(double sum_sq, double n) { return n > 0 ? n - sum_sq / n : 0.0; }

/// Column-major copy of the candidate features. Features constant over the
/// whole training set can never split and are left out.
struct ColumnStore {
  std::size_t rows = 0;
  std::size_t width = 1;              // split width, from the full active count
  std::vector<std::size_t> features;  // original column index per stored column
  std::vector<double> values;         // features.size() * rows

  ColumnStore(const Matrix& x, const std::vector<std::size_t>& active, std::size_t split_width)
      : rows(x.rows()), width(split_width) {
    std::vector<double> col(rows);
    for (auto f : active) {
      bool constant = true;
      for (std::size_t r = 0; r < rows; ++r) {
        col[r] = x(r, f);
        constant = constant && col[r] == col[0];
      }
      if (constant) continue;
      features.push_back(f);
      values.insert(values.end(), col.begin(), col.end());
    }
  }

  const double* column(std::size_t c) const { return values.data() + c * rows; }
};

class TreeBuilder {
 public:
  TreeBuilder(const ColumnStore& cols, std::span<const std::uint32_t> y, std::size_t n_classes,
              const ForestConfig& cfg, std::uint64_t seed)
      : cols_(cols), y_(y), k_(n_classes), cfg_(cfg), rng_(seed) {}

  DecisionTree build() {
    const std::size_t n = cols_.rows;
    std::vector<std::uint32_t> idx(n);
    if (cfg_.bootstrap) {
      for (auto& i : idx) i = static_cast<std::uint32_t>(rng_.index(n));
    } else {
      std::iota(idx.begin(), idx.end(), 0U);
    }
    root_n_ = static_cast<double>(n);
    width_ = cols_.width;

    DecisionTree tree;
    struct Task {
      std::size_t begin, end, depth, node;
    };
    std::vector<Task> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, n, 0, 0});
    std::vector<std::uint32_t> counts(k_);
    while (!stack.empty()) {
      const Task t = stack.back();
      stack.pop_back();
      std::fill(counts.begin(), counts.end(), 0U);
      for (std::size_t i = t.begin; i < t.end; ++i) ++counts[y_[idx[i]]];
      const std::size_t size = t.end - t.begin;
      const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
      const bool depth_capped = cfg_.max_depth && t.depth >= *cfg_.max_depth;
      std::optional<Split> split;
      if (!pure && !depth_capped && size >= 2) {
        split = best_split(idx, t.begin, t.end, counts);
      }
      if (!split) {
        auto& leaf = tree.nodes[t.node];
        leaf.counts = counts;
        leaf.vote = argmax_lowest(counts);
        continue;
      }
      const double* col = cols_.column(split->column);
      auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(t.begin),
                                idx.begin() + static_cast<std::ptrdiff_t>(t.end),
                                [&](std::uint32_t r) { return col[r] <= split->threshold; });
      const auto m = static_cast<std::size_t>(mid - idx.begin());
      const auto left = tree.nodes.size();
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[t.node];
      node.feature = static_cast<std::int32_t>(split->feature);
      node.threshold = split->threshold;
      node.left = static_cast<std::int32_t>(left);
      node.right = static_cast<std::int32_t>(left + 1);
      node.impurity_decrease = split->decrease / root_n_;
      // right first so the left subtree is expanded first
      stack.push_back({m, t.end, t.depth + 1, left + 1});
      stack.push_back({t.begin, m, t.depth + 1, left});
    }
    return tree;
  }

 private:
  struct Split {
    std::size_t column;
    std::size_t feature;
    double threshold;
    double child_impurity;  // n_left * gini_left + n_right * gini_right
    double decrease;        // n * gini - child_impurity
  };

  struct Entry {
    double value;
    std::uint32_t cls;
  };

  std::optional<Split> best_split(const std::vector<std::uint32_t>& idx, std::size_t begin,
                                  std::size_t end, const std::vector<std::uint32_t>& counts) {
    const auto n = static_cast<double>(end - begin);
    double total_sq = 0;
    for (auto c : counts) total_sq += static_cast<double>(c) * c;
    const double parent = weighted_gini(total_sq, n);

    // Visit features in random order until `width_` non-constant ones have
    // been evaluated; constant features do not count towards the budget.
    const std::size_t n_cols = cols_.features.size();
    order_.resize(n_cols);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::optional<Split> best;
    std::size_t evaluated = 0;
    for (std::size_t j = 0; j < n_cols && evaluated < width_; ++j) {
      std::swap(order_[j], order_[j + rng_.index(n_cols - j)]);
      const std::size_t c = order_[j];
      const std::size_t f = cols_.features[c];
      const double* col = cols_.column(c);
      const double first = col[idx[begin]];
      std::size_t i = begin + 1;
      while (i < end && col[idx[i]] == first) ++i;
      if (i == end) continue;
      buf_.clear();
      for (std::size_t r = begin; r < end; ++r) buf_.push_back({col[idx[r]], y_[idx[r]]});
      ++evaluated;
      std::sort(buf_.begin(), buf_.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });

      left_.assign(k_, 0U);
      double left_sq = 0, right_sq = total_sq;
      for (std::size_t i = 0; i + 1 < buf_.size(); ++i) {
        const auto k = buf_[i].cls;
        const double lc = left_[k];
        const double rc = static_cast<double>(counts[k]) - lc;
        left_sq += 2 * lc + 1;
        right_sq -= 2 * rc - 1;
        ++left_[k];
        if (buf_[i].value == buf_[i + 1].value) continue;
        const double nl = static_cast<double>(i + 1);
        const double child = weighted_gini(left_sq, nl) + weighted_gini(right_sq, n - nl);
        double thr = 0.5 * (buf_[i].value + buf_[i + 1].value);
        if (!(thr < buf_[i + 1].value)) thr = buf_[i].value;
        if (!best || child < best->child_impurity ||
            (child == best->child_impurity &&
             (f < best->feature || (f == best->feature && thr < best->threshold)))) {
          best = Split{c, f, thr, child, parent - child};
        }
      }
    }
    if (best && best->decrease < 0) best->decrease = 0;
    return best;
  }

  const ColumnStore& cols_;
  std::span<const std::uint32_t> y_;
  std::size_t k_;
  const ForestConfig& cfg_;
  Rng rng_;
  double root_n_ = 1;
  std::size_t width_ = 1;
  std::vector<std::size_t> order_;
  std::vector<Entry> buf_;
  std::vector<std::uint32_t> left_;
};

}  // namespace detail

/// Trains on rows of `x` restricted to `mask` (all features when empty).
inline TrainedForest train(const Matrix& x, const std::vector<std::string>& y, const ForestConfig& cfg,
                           std::vector<bool> mask = {}) {
  if (x.rows() == 0 || y.empty()) throw TrainingError("train: empty input");
  if (x.rows() != y.size()) throw TrainingError("train: row count differs from label count");
  if (x.cols() == 0) throw TrainingError("train: rows have no features");
  if (cfg.n_trees < 1) throw TrainingError("train: n_trees must be >= 1");
  if (mask.empty()) mask.assign(x.cols(), true);
  if (mask.size() != x.cols()) throw TrainingError("train: feature mask width mismatch");

  TrainedForest f;
  f.config = cfg;
  f.feature_mask = mask;
  f.labels = y;
  std::sort(f.labels.begin(), f.labels.end());
  f.labels.erase(std::unique(f.labels.begin(), f.labels.end()), f.labels.end());
  std::vector<std::uint32_t> yi(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    yi[i] = static_cast<std::uint32_t>(std::lower_bound(f.labels.begin(), f.labels.end(), y[i]) - f.labels.begin());
  }
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j]) active.push_back(j);
  }
  if (active.empty()) throw TrainingError("train: feature mask is empty");

  const detail::ColumnStore cols(x, active, cfg.split_width(active.size()));
  f.trees.resize(cfg.n_trees);
  auto grow = [&](std::size_t t) {
    detail::TreeBuilder b(cols, yi, f.labels.size(), cfg, derive_seed(cfg.seed, t));
    f.trees[t] = b.build();
  };
  const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, cfg.n_trees);
  if (threads == 1) {
    for (std::size_t t = 0; t < cfg.n_trees; ++t) grow(t);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < cfg.n_trees; t += threads) grow(t);
      });
    }
  }
  return f;
}

/// Fraction of trees voting for each class.
inline std::vector<double> predict_proba(const TrainedForest& f, std::span<const double> x) {
  if (x.size() != f.n_features()) {
    throw Error("predict_proba: expected " + std::to_string(f.n_features()) + " features, got " +
                std::to_string(x.size()));
  }
  std::vector<double> p(f.n_classes(), 0.0);
  for (const auto& t : f.trees) p[t.leaf_for(x).vote] += 1.0;
  for (auto& v : p) v /= static_cast<double>(f.trees.size());
  return p;
}

inline std::size_t argmax(std::span<const double> p) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (p[k] > p[best]) best = k;
  }
  return best;
}

inline const std::string& predict(const TrainedForest& f, std::span<const double> x) {
  return f.labels[argmax(predict_proba(f, x))];
}

inline std::vector<std::string> predict(const TrainedForest& f, const Matrix& x) {
  std::vector<std::string> out;
  out.reserve(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(predict(f, x.row(r)));
  return out;
}

struct FeatureImportance {
  std::vector<double> values;  // sums to 1 unless degenerate
  bool degenerate = false;     // no split anywhere in the forest
};

/// Mean decrease in Gini impurity, normalized per tree, averaged over
/// trees and normalized to sum to one.
inline FeatureImportance feature_importance(const TrainedForest& f) {
  FeatureImportance imp{std::vector<double>(f.n_features(), 0.0), false};
  std::vector<double> per_tree(f.n_features());
  for (const auto& t : f.trees) {
    std::fill(per_tree.begin(), per_tree.end(), 0.0);
    double total = 0;
    for (const auto& n : t.nodes) {
      if (n.feature < 0) continue;
      per_tree[static_cast<std::size_t>(n.feature)] += n.impurity_decrease;
      total += n.impurity_decrease;
    }
    if (total <= 0) continue;
    for (std::size_t j = 0; j < per_tree.size(); ++j) imp.values[j] += per_tree[j] / total;
  }
  const double sum = std::accumulate(imp.values.begin(), imp.values.end(), 0.0);
  if (sum <= 0) {
    imp.degenerate = true;
    std::fill(imp.values.begin(), imp.values.end(), 0.0);
    return imp;
  }
  for (auto& v : imp.values) v /= sum;
  return imp;
}

struct RfeResult {
  std::vector<bool> mask;
  TrainedForest forest;  // trained on `mask`
  std::size_t rounds = 0;
};

/// Recursive Feature Elimination: train, drop the ceil(step * remaining)
/// least important features (never below `keep`), repeat until `keep`
/// remain. Equal importances drop the higher feature index first.
inline RfeResult rfe(const Matrix& x, const std::vector<std::string>& y, const ForestConfig& cfg,
                     std::size_t keep, double step = 0.5, std::vector<bool> mask = {}) {
  if (keep < 1) throw TrainingError("rfe: keep must be >= 1");
  if (!(step > 0.0 && step <= 1.0)) throw TrainingError("rfe: step must be in (0, 1]");
  if (mask.empty()) mask.assign(x.cols(), true);
  std::size_t remaining = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  if (keep > remaining) throw TrainingError("rfe: keep exceeds the number of features");

  RfeResult r;
  for (;;) {
    r.forest = train(x, y, cfg, mask);
    ++r.rounds;
    if (remaining == keep) break;
    const auto imp = feature_importance(r.forest);
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < mask.size(); ++j) {
      if (mask[j]) active.push_back(j);
    }
    std::sort(active.begin(), active.end(), [&](std::size_t a, std::size_t b) {
      if (imp.values[a] != imp.values[b]) return imp.values[a] < imp.values[b];
      return a > b;
    });
    const auto drop = std::min(remaining - keep,
                               static_cast<std::size_t>(std::ceil(step * static_cast<double>(remaining))));
    for (std::size_t i = 0; i < drop; ++i) mask[active[i]] = false;
    remaining -= drop;
  }
  r.mask = mask;
  return r;
}

// ---------------------------------------------------------------------------
// Serialization. Line-oriented text, doubles in shortest round-trip form.
//
//   btlab-forest 1
//   rng mt19937_64/splitmix64
//   config <n_trees> <max_depth|-1> <sqrt|all|fixed> <fixed_features> <bootstrap> <seed>
//   features <d> <mask as 0/1 string>
//   labels <k>
//   <one label per line>
//   trees <n>
//   tree <node count>
//   I <feature> <threshold> <left> <right> <impurity_decrease>
//   L <vote> <count_0> ... <count_k-1>

inline constexpr std::string_view kForestMagic = "btlab-forest";
inline constexpr int kForestFormatVersion = 1;

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, p};
}

inline double parse_double(const std::string& s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw Error("model: bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline void save(const TrainedForest& f, std::ostream& out) {
  const auto& c = f.config;
  out << kForestMagic << ' ' << kForestFormatVersion << '\n';
  out << "rng " << kRngIdentity << '\n';
  const char* fps = c.features_per_split == FeaturesPerSplit::Sqrt  ? "sqrt"
                    : c.features_per_split == FeaturesPerSplit::All ? "all"
                                                                    : "fixed";
  out << "config " << c.n_trees << ' ' << (c.max_depth ? static_cast<long long>(*c.max_depth) : -1LL) << ' '
      << fps << ' ' << c.fixed_features << ' ' << (c.bootstrap ? 1 : 0) << ' ' << c.seed << '\n';
  out << "features " << f.feature_mask.size() << ' ';
  for (bool b : f.feature_mask) out << (b ? '1' : '0');
  out << '\n';
  out << "labels " << f.labels.size() << '\n';
  for (const auto& l : f.labels) out << l << '\n';
  out << "trees " << f.trees.size() << '\n';
  for (const auto& t : f.trees) {
    out << "tree " << t.nodes.size() << '\n';
    for (const auto& n : t.nodes) {
      if (n.feature >= 0) {
        out << "I " << n.feature << ' ' << detail::fmt_double(n.threshold) << ' ' << n.left << ' ' << n.right
            << ' ' << detail::fmt_double(n.impurity_decrease) << '\n';
      } else {
        out << "L " << n.vote;
        for (auto cnt : n.counts) out << ' ' << cnt;
        out << '\n';
      }
    }
  }
}

inline std::string save_to_string(const TrainedForest& f) {
  std::ostringstream ss;
  save(f, ss);
  return ss.str();
}

inline TrainedForest load_forest(std::istream& in) {
  auto fail = [](const std::string& what) -> TrainedForest { throw Error("model: " + what); };
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != kForestMagic) return fail("not a btlab forest file");
  if (version != kForestFormatVersion) return fail("unsupported format version " + std::to_string(version));
  std::string rng;
  if (!(in >> word >> rng) || word != "rng") return fail("missing rng line");
  if (rng != kRngIdentity) return fail("model was trained with rng '" + rng + "'");

  TrainedForest f;
  auto& c = f.config;
  long long depth = 0;
  std::string fps;
  int bootstrap = 0;
  if (!(in >> word >> c.n_trees >> depth >> fps >> c.fixed_features >> bootstrap >> c.seed) || word != "config") {
    return fail("bad config line");
  }
  if (depth >= 0) c.max_depth = static_cast<std::size_t>(depth);
  if (fps == "sqrt") {
    c.features_per_split = FeaturesPerSplit::Sqrt;
  } else if (fps == "all") {
    c.features_per_split = FeaturesPerSplit::All;
  } else if (fps == "fixed") {
    c.features_per_split = FeaturesPerSplit::Fixed;
  } else {
    return fail("unknown features_per_split '" + fps + "'");
  }
  c.bootstrap = bootstrap != 0;

  std::size_t d = 0;
  std::string bits;
  if (!(in >> word >> d >> bits) || word != "features" || bits.size() != d) return fail("bad features line");
  for (char ch : bits) f.feature_mask.push_back(ch == '1');

  std::size_t k = 0;
  if (!(in >> word >> k) || word != "labels" || k == 0) return fail("bad labels line");
  std::getline(in, word);
  for (std::size_t i = 0; i < k; ++i) {
    std::string l;
    if (!std::getline(in, l)) return fail("truncated label table");
    f.labels.push_back(l);
  }

  std::size_t n_trees = 0;
  if (!(in >> word >> n_trees) || word != "trees") return fail("bad trees line");
  f.trees.resize(n_trees);
  for (auto& t : f.trees) {
    std::size_t n_nodes = 0;
    if (!(in >> word >> n_nodes) || word != "tree") return fail("bad tree header");
    t.nodes.resize(n_nodes);
    for (auto& n : t.nodes) {
      std::string kind;
      in >> kind;
      if (kind == "I") {
        std::string thr, dec;
        if (!(in >> n.feature >> thr >> n.left >> n.right >> dec)) return fail("bad internal node");
        n.threshold = detail::parse_double(thr);
        n.impurity_decrease = detail::parse_double(dec);
        const auto lim = static_cast<std::int32_t>(n_nodes);
        if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= d || n.left <= 0 || n.right <= 0 ||
            n.left >= lim || n.right >= lim) {
          return fail("node reference out of range");
        }
      } else if (kind == "L") {
        if (!(in >> n.vote) || n.vote >= k) return fail("bad leaf");
        n.counts.resize(k);
        for (auto& cnt : n.counts) {
          if (!(in >> cnt)) return fail("bad leaf counts");
        }
      } else {
        return fail("unknown node kind '" + kind + "'");
      }
    }
  }
  return f;
}

inline TrainedForest load_forest_from_string(const std::string& s) {
  std::istringstream ss(s);
  return load_forest(ss);
}

}  // namespace btlab
