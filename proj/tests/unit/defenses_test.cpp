#include <gtest/gtest.h>

#include <cmath>

#include "btlab/defenses.hpp"
#include "btlab/eval.hpp"
#include "btlab/synth.hpp"
#include "util.hpp"

namespace btlab {
namespace {

using test::pkt;
using test::sample_of;

TEST(Pad, ClassicToCeiling) {
  const auto d = pad(sample_of({pkt(0, 300)}));
  EXPECT_EQ(d.sample.packets[0].size, 1021u);
  EXPECT_EQ(d.cost.padding_bytes, 721);
  EXPECT_EQ(d.cost.mean_delay_per_packet, 0);
  EXPECT_EQ(d.cost.dummy_bytes, 0);
}

TEST(Pad, LowEnergyFixedPoint) {
  const auto d = pad(sample_of({pkt(0, 255)}, Flavor::LowEnergy));
  EXPECT_EQ(d.sample.packets[0].size, 255u);
  EXPECT_EQ(d.cost.padding_bytes, 0);
  EXPECT_EQ(d.cost.overhead_pct, 0);
}

TEST(Pad, OverheadDefinition) {
  // 100 B of payload gaining 50 B of padding is 50% overhead
  const auto d = pad(sample_of({pkt(0, 205), pkt(1, 0, Direction::SlaveToMaster, true)}, Flavor::LowEnergy));
  EXPECT_EQ(d.cost.padding_bytes, 50);
  EXPECT_NEAR(d.cost.overhead_pct, 100.0 * 50 / 205, 1e-12);
  DefenseCost c{0, 0, 50, 0, 0};
  detail::finish_overhead(c, sample_of({pkt(0, 100)}));
  EXPECT_DOUBLE_EQ(c.overhead_pct, 50.0);
}

TEST(Pad, MetaUntouchedAndOversizeRejected) {
  const auto d = pad(sample_of({pkt(0, 0, Direction::MasterToSlave, true)}));
  EXPECT_EQ(d.sample.packets[0].size, 0u);
  EXPECT_THROW(pad(sample_of({pkt(0, 300)}, Flavor::LowEnergy)), Error);
}

TEST(Pad, Invariants) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    auto s = test::random_sample(rng, rng.index(100), trial % 2 ? Flavor::LowEnergy : Flavor::Classic);
    s.labels = {{"app", "x"}, {"flavor", std::string(to_string(s.flavor))}};
    const auto d = pad(s);
    ASSERT_EQ(d.sample.packets.size(), s.packets.size());
    for (std::size_t i = 0; i < s.packets.size(); ++i) {
      EXPECT_EQ(d.sample.packets[i].timestamp, s.packets[i].timestamp);
      if (!s.packets[i].is_meta) EXPECT_EQ(d.sample.packets[i].size, max_payload(s.flavor));
    }
    EXPECT_EQ(d.sample.labels, s.labels);
    EXPECT_EQ(d.cost.mean_delay_per_packet, 0);
    EXPECT_EQ(d.cost.extra_duration, 0);
  }
}

TEST(Pad, AllMaxSizeDatasetCostsNothing) {
  Dataset ds;
  ds.samples.push_back(sample_of({pkt(0, 1021), pkt(1, 1021)}));
  ds.samples.push_back(sample_of({pkt(0, 255)}, Flavor::LowEnergy));
  Dataset out;
  std::vector<DefenseCost> costs;
  for (const auto& s : ds.samples) {
    auto d = pad(s);
    out.samples.push_back(d.sample);
    costs.push_back(d.cost);
  }
  const auto row = defense_cost_summary("pad", ds, out, costs, 1.0);
  EXPECT_EQ(row.delay_per_packet_s, 0);
  EXPECT_EQ(row.extra_duration_s, 0);
  EXPECT_EQ(row.padding_kb, 0);
  EXPECT_EQ(row.dummy_kb, 0);
  EXPECT_EQ(row.overhead_pct, 0);
  EXPECT_EQ(row.accuracy_pct, 100);
}

TEST(DelayGroup, CeilingRule) {
  auto d = delay_group(sample_of({pkt(0.2, 10)}));
  EXPECT_EQ(d.sample.packets[0].timestamp, 1.0);
  EXPECT_NEAR(d.cost.mean_delay_per_packet, 0.8, 1e-12);
  d = delay_group(sample_of({pkt(3.0, 10)}));
  EXPECT_EQ(d.sample.packets[0].timestamp, 3.0);
  EXPECT_EQ(d.cost.mean_delay_per_packet, 0);
  EXPECT_TRUE(delay_group(TraceSample{}).sample.packets.empty());
}

TEST(DelayGroup, UniformArrivalsAverageHalfSecond) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::vector<double> ts(5000);
    for (auto& t : ts) t = quantize_us(rng.uniform(0, 1000));
    std::sort(ts.begin(), ts.end());
    TraceSample s;
    for (double t : ts) s.packets.push_back(pkt(t, 10));
    const auto d = delay_group(s);
    EXPECT_GE(d.cost.mean_delay_per_packet, 0.45);
    EXPECT_LE(d.cost.mean_delay_per_packet, 0.55);
  }
}

TEST(DelayGroup, Invariants) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = test::random_sample(rng, rng.index(200));
    const auto d = delay_group(s);
    ASSERT_EQ(d.sample.packets.size(), s.packets.size());
    for (std::size_t i = 0; i < s.packets.size(); ++i) {
      const auto& a = s.packets[i];
      const auto& b = d.sample.packets[i];
      EXPECT_EQ(b.timestamp, std::floor(b.timestamp));
      EXPECT_GE(b.timestamp - a.timestamp, 0.0);
      EXPECT_LT(b.timestamp - a.timestamp, 1.0);
      EXPECT_EQ(b.size, a.size);
      EXPECT_EQ(b.direction, a.direction);
      if (i > 0) EXPECT_LE(d.sample.packets[i - 1].timestamp, b.timestamp);
    }
    EXPECT_EQ(d.cost.padding_bytes, 0);
    EXPECT_EQ(d.cost.dummy_bytes, 0);
  }
}

TEST(AddDummies, RayleighScale) {
  EXPECT_NEAR(rayleigh_sigma_for_mean(6.0), 4.7873, 1e-4);
}

TEST(AddDummies, ZeroDummiesUnchanged) {
  Rng rng(3);
  const auto s = test::random_sample(rng, 40);
  DummyConfig c;
  c.n_dummies = 0;
  const auto d = add_dummies(s, c, SizeSource{}, 1);
  EXPECT_EQ(d.sample, s);
  EXPECT_EQ(d.cost.dummy_bytes, 0);
}

TEST(AddDummies, ByteTotalMatchesSourceMean) {
  // sizes uniform over 60..260: mean 160, sd ~58
  SizeSource src;
  for (std::uint32_t v = 60; v <= 260; ++v) src.sizes.push_back(v);
  Rng rng(4);
  const auto s = test::random_sample(rng, 50);
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = add_dummies(s, DummyConfig{}, src, seed);
    const double kb = d.cost.dummy_bytes / kBytesPerKb;
    inside += kb >= 40.8 && kb <= 55.2;
  }
  EXPECT_GE(inside, 95);
}

TEST(AddDummies, Invariants) {
  Rng rng(5);
  SizeSource src;
  src.sizes = {50, 70, 900};
  src.m2s_fraction = 0.3;
  for (int trial = 0; trial < 30; ++trial) {
    auto s = test::random_sample(rng, rng.index(100));
    s.labels = {{"app", "a"}};
    DummyConfig c;
    c.n_dummies = rng.index(400);
    c.mean_s = rng.uniform(0.5, 10);
    const auto d = add_dummies(s, c, src, static_cast<std::uint64_t>(trial));
    EXPECT_EQ(d.sample.packets.size(), s.packets.size() + c.n_dummies);
    EXPECT_EQ(d.sample.labels, s.labels);
    // originals form a subsequence
    std::size_t j = 0;
    for (const auto& p : d.sample.packets) {
      if (j < s.packets.size() && p == s.packets[j]) ++j;
    }
    EXPECT_EQ(j, s.packets.size());
    // dummy_bytes is the exact sum of the added sizes
    EXPECT_EQ(d.cost.dummy_bytes, static_cast<double>(payload_bytes(d.sample) - payload_bytes(s)));
    EXPECT_TRUE(is_valid(d.sample));
  }
}

TEST(AddDummies, UniformCountWithinBounds) {
  SizeSource src;
  src.sizes = {10};
  DummyConfig c;
  c.n_dummies = 20;
  c.uniform_count = true;
  std::set<std::size_t> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto n = add_dummies(TraceSample{}, c, src, seed).sample.packets.size();
    EXPECT_GE(n, 1u);
    EXPECT_LE(n, 20u);
    seen.insert(n);
  }
  EXPECT_GT(seen.size(), 10u);
}

TEST(AddDummies, Errors) {
  DummyConfig c;
  EXPECT_THROW(add_dummies(TraceSample{}, c, SizeSource{}, 1), Error);
  c.mean_s = 0;
  SizeSource src;
  src.sizes = {1};
  EXPECT_THROW(add_dummies(TraceSample{}, c, src, 1), Error);
}

TEST(CostSummary, CountsMustAgree) {
  Dataset a;
  a.samples.emplace_back();
  EXPECT_THROW(defense_cost_summary("x", a, Dataset{}, {}, 0.5), Error);
}

// Two devices that differ only in packet size: separable undefended,
// indistinguishable once every packet is padded to the ceiling.
TEST(Pad, RemovesSizeOnlySignal) {
  std::vector<Profile> pack;
  for (std::uint32_t size : {100U, 300U}) {
    Profile p;
    p.name = "dev" + std::to_string(size);
    p.labels = {{"device", p.name}};
    p.m2s_sizes.atoms = {{size, 1.0}};
    p.s2m_sizes.atoms = {{size, 1.0}};
    p.burst = {{5, false}, {6, false}, 0.01, 2.0};
    pack.push_back(p);
  }
  const auto ds = generate_dataset(pack, 40, 30, 1);
  Dataset padded;
  for (const auto& s : ds.samples) padded.samples.push_back(pad(s).sample);
  PipelineConfig cfg;
  cfg.forest.n_trees = 20;
  cfg.rfe_keep = 0;
  const auto clean = cross_validate(ds, "device", 5, cfg, 1);
  const auto defended = cross_validate(padded, "device", 5, cfg, 1);
  EXPECT_GE(clean.pooled.accuracy, 0.95);
  EXPECT_LE(defended.pooled.accuracy, 0.6);
}

}  // namespace
}  // namespace btlab
