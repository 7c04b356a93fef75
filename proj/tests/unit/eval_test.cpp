#include <gtest/gtest.h>

#include <map>

#include "btlab/eval.hpp"
#include "util.hpp"

namespace btlab {
namespace {

using Labels_ = std::vector<std::string>;

TEST(Score, HandArithmetic) {
  const auto r = score({"A", "A", "B", "B"}, {"A", "B", "B", "B"});
  ASSERT_EQ(r.labels, (Labels_{"A", "B"}));
  EXPECT_DOUBLE_EQ(r.classes[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(r.classes[0].recall, 0.5);
  EXPECT_DOUBLE_EQ(r.classes[1].precision, 2.0 / 3);
  EXPECT_DOUBLE_EQ(r.classes[1].recall, 1.0);
  EXPECT_NEAR(r.macro_f1, (2.0 / 3 + 4.0 / 5) / 2, 1e-12);
  EXPECT_NEAR(r.macro_f1, 0.7333, 1e-4);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
}

TEST(Score, AllCorrect) {
  const auto r = score({"x", "y", "y", "z"}, {"x", "y", "y", "z"});
  EXPECT_EQ(r.macro_f1, 1.0);
  EXPECT_EQ(r.macro_precision, 1.0);
  EXPECT_EQ(r.macro_recall, 1.0);
  EXPECT_EQ(r.accuracy, 1.0);
}

TEST(Score, NeverPredictedClassScoresZero) {
  const auto r = score({"A", "C"}, {"A", "A"});
  EXPECT_EQ(r.classes[1].label, "C");
  EXPECT_EQ(r.classes[1].precision, 0.0);
  EXPECT_EQ(r.classes[1].recall, 0.0);
  EXPECT_EQ(r.classes[1].f1, 0.0);
}

TEST(Score, MacroSkipsClassesWithoutSupport) {
  const auto r = score({"A", "A"}, {"A", "B"}, {"A", "B", "C"});
  EXPECT_EQ(r.classes[1].support, 0u);
  EXPECT_NEAR(r.macro_f1, 2.0 / 3, 1e-12);
  EXPECT_NEAR(r.macro_recall, 0.5, 1e-12);
  EXPECT_NEAR(r.macro_precision, 1.0, 1e-12);
  for (double v : r.confusion_normalized[2]) EXPECT_EQ(v, 0.0);
}

TEST(Score, Errors) {
  EXPECT_THROW(score({"A"}, {"A", "B"}), Error);
  EXPECT_THROW(score({}, {}), Error);
  EXPECT_THROW(score({"A"}, {"B"}, {"A"}), Error);
}

TEST(Score, Properties) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 1 + rng.index(40), k = 1 + rng.index(5);
    Labels_ t, p;
    for (std::size_t i = 0; i < n; ++i) {
      t.push_back(std::string(1, static_cast<char>('a' + rng.index(k))));
      p.push_back(std::string(1, static_cast<char>('a' + rng.index(k))));
    }
    const auto self = score(t, t);
    EXPECT_EQ(self.macro_f1, 1.0);
    const auto r = score(t, p);
    for (std::size_t c = 0; c < r.labels.size(); ++c) {
      std::size_t row = 0;
      for (auto v : r.confusion[c]) row += v;
      EXPECT_EQ(row, r.classes[c].support);
      if (row > 0) EXPECT_EQ(r.confusion_normalized[c][c], r.classes[c].recall);
    }
    // test-row order does not matter
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    Labels_ t2, p2;
    for (auto i : perm) {
      t2.push_back(t[i]);
      p2.push_back(p[i]);
    }
    const auto r2 = score(t2, p2);
    EXPECT_EQ(r2.confusion, r.confusion);
    EXPECT_EQ(r2.macro_f1, r.macro_f1);
  }
}

Labels_ classes(std::map<std::string, int> counts) {
  Labels_ y;
  for (const auto& [l, n] : counts) y.insert(y.end(), static_cast<std::size_t>(n), l);
  return y;
}

TEST(StratifiedSplit, Counts) {
  const auto y = classes({{"A", 10}, {"B", 10}});
  const auto s = stratified_split_indices(y, 0.8, 1);
  std::map<std::string, int> tr, te;
  for (auto i : s.train) ++tr[y[i]];
  for (auto i : s.test) ++te[y[i]];
  EXPECT_EQ(tr, (std::map<std::string, int>{{"A", 8}, {"B", 8}}));
  EXPECT_EQ(te, (std::map<std::string, int>{{"A", 2}, {"B", 2}}));

  const auto five = stratified_split_indices(classes({{"A", 5}}), 0.8, 1);
  EXPECT_EQ(five.train.size(), 4u);
  EXPECT_EQ(five.test.size(), 1u);
  const auto again = stratified_split_indices(y, 0.8, 1);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.test, s.test);
  EXPECT_THROW(stratified_split_indices(y, 1.0, 1), Error);
  EXPECT_THROW(stratified_split_indices(classes({{"A", 1}}), 0.5, 1), Error);
}

// Rows carry the class as a size offset far larger than the noise.
Matrix separable(const Labels_& y, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  for (const auto& l : y) {
    rows.push_back({(l == "A" ? 100.0 : 500.0) + rng.uniform(0, 10), rng.uniform(), rng.uniform()});
  }
  return Matrix::from_rows(rows);
}

PipelineConfig small_pipeline() {
  PipelineConfig p;
  p.forest.n_trees = 10;
  p.rfe_keep = 0;
  return p;
}

TEST(CrossValidate, SeparableIsPerfect) {
  const auto y = classes({{"A", 20}, {"B", 20}});
  const auto cv = cross_validate(separable(y, 1), y, 5, small_pipeline(), 3);
  EXPECT_EQ(cv.macro_f1.mean, 1.0);
  EXPECT_EQ(cv.pooled.macro_f1, 1.0);
}

TEST(CrossValidate, ShuffledLabelsNearChance) {
  double sum = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    auto y = classes({{"A", 50}, {"B", 50}});
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < y.size(); ++i) rows.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    rng.shuffle(y.begin(), y.end());
    const auto cv = cross_validate(Matrix::from_rows(rows), y, 5, small_pipeline(), seed);
    EXPECT_GE(cv.macro_f1.mean, 0.3) << seed;
    EXPECT_LE(cv.macro_f1.mean, 0.7) << seed;
    sum += cv.macro_f1.mean;
  }
  EXPECT_NEAR(sum / 10, 0.5, 0.1);
}

TEST(CrossValidate, TenFoldsHoldOutOnePerClass) {
  const auto y = classes({{"A", 10}, {"B", 10}});
  const auto cv = cross_validate(separable(y, 2), y, 10, small_pipeline(), 1);
  ASSERT_EQ(cv.folds, 10u);
  for (std::size_t f = 0; f < 10; ++f) {
    std::map<std::string, int> held;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (cv.fold_of[i] == f) ++held[y[i]];
    }
    EXPECT_EQ(held, (std::map<std::string, int>{{"A", 1}, {"B", 1}}));
  }
}

TEST(CrossValidate, FoldsPartitionDataset) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Labels_ y;
    for (std::size_t i = 0; i < 30 + rng.index(50); ++i) y.push_back("c" + std::to_string(rng.index(3)));
    const auto k = 2 + rng.index(4);
    const auto folds = stratified_folds(y, k, static_cast<std::uint64_t>(trial));
    ASSERT_EQ(folds.size(), y.size());
    std::vector<std::size_t> sizes(k, 0);
    for (auto f : folds) {
      ASSERT_LT(f, k);
      ++sizes[f];
    }
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u);
  }
}

TEST(CrossValidate, SmallClassWarnsOrThrows) {
  const auto y = classes({{"A", 3}, {"B", 10}});
  const auto x = separable(y, 1);
  const auto cv = cross_validate(x, y, 5, small_pipeline(), 1);
  EXPECT_EQ(cv.folds, 3u);
  ASSERT_EQ(cv.warnings.size(), 1u);
  EXPECT_THROW(cross_validate(x, y, 5, small_pipeline(), 1, true), Error);
}

TEST(CrossValidate, RfeRunsInsideFolds) {
  const auto y = classes({{"A", 15}, {"B", 15}});
  auto p = small_pipeline();
  p.rfe_keep = 1;
  const auto cv = cross_validate(separable(y, 5), y, 3, p, 2);
  EXPECT_EQ(cv.macro_f1.mean, 1.0);
  EXPECT_GT(cv.importance[0], 0.99);
}

Dataset keyed(const std::vector<std::pair<std::string, int>>& parts) {
  Dataset ds;
  for (const auto& [v, n] : parts) {
    for (int i = 0; i < n; ++i) {
      TraceSample s;
      s.labels = {{"pair", v}, {"day", v}};
      ds.samples.push_back(s);
    }
  }
  return ds;
}

TEST(HoldoutByKey, Partitions) {
  const auto [tr, te] = holdout_by_key(keyed({{"P1", 4}, {"P2", 3}}), "pair", {"P1"}, {"P2"});
  EXPECT_EQ(tr.size(), 4u);
  EXPECT_EQ(te.size(), 3u);
  for (const auto& s : te.samples) EXPECT_EQ(s.label("pair"), "P2");
  const auto [a, b] = holdout_by_key(keyed({{"0", 6}, {"3", 2}, {"5", 5}}), "day", {"0"}, {"5"});
  EXPECT_EQ(a.size(), 6u);
  EXPECT_EQ(b.size(), 5u);
  EXPECT_THROW(holdout_by_key(keyed({{"P1", 1}}), "pair", {"P1"}, {"P1", "P2"}), Error);
  EXPECT_THROW(holdout_by_key(keyed({{"P1", 1}}), "pair", {"P1"}, {"P2"}), Error);
}

TEST(PacketLoss, Extremes) {
  Rng rng(1);
  const auto s = test::random_sample(rng, 100);
  EXPECT_EQ(apply_packet_loss(s, 0.0, 5).packets, s.packets);
  EXPECT_TRUE(apply_packet_loss(s, 1.0, 5).packets.empty());
  EXPECT_THROW(apply_packet_loss(s, 1.5, 5), Error);
}

TEST(PacketLoss, BinomialBound) {
  Rng rng(2);
  const auto s = test::random_sample(rng, 10000);
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto kept = apply_packet_loss(s, 0.5, seed).packets.size();
    inside += kept >= 4800 && kept <= 5200;
  }
  EXPECT_GE(inside, 198);
}

TEST(PacketLoss, SurvivorsUnchangedInOrder) {
  Rng rng(3);
  const auto s = test::random_sample(rng, 500);
  const auto out = apply_packet_loss(s, 0.3, 9);
  std::size_t j = 0;
  for (const auto& p : out.packets) {
    while (j < s.packets.size() && !(s.packets[j] == p)) ++j;
    ASSERT_LT(j, s.packets.size());
    ++j;
  }
}

TEST(MeanStd, Population) {
  const auto m = mean_std({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.std, std::sqrt(1.25));
}

}  // namespace
}  // namespace btlab
