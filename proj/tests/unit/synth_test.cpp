#include <gtest/gtest.h>

#include <map>

#include "btlab/ingest.hpp"
#include "btlab/packs.hpp"
#include "btlab/synth.hpp"
#include "util.hpp"

namespace btlab {
namespace {

Profile simple(std::string name = "p") {
  Profile p;
  p.name = std::move(name);
  p.labels = {{"app", p.name}};
  p.m2s_sizes.atoms = {{60, 1.0}};
  p.s2m_sizes.atoms = {{60, 1.0}};
  p.burst = {{3, false}, {5, false}, 0.01, 2.0};
  return p;
}

TEST(GenerateSample, ZeroBurstsIsEmpty) {
  auto p = simple();
  p.burst.bursts = {0, true};
  EXPECT_TRUE(generate_sample(p, 30, 1).packets.empty());
}

TEST(GenerateSample, SingleAtomSingleBurst) {
  auto p = simple();
  p.m2s_sizes.atoms = {{100, 1.0}};
  p.s2m_sizes.atoms = {{100, 1.0}};
  p.burst = {{1, true}, {10, true}, 0.001, 0.5};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = generate_sample(p, 1000, seed);
    ASSERT_EQ(s.packets.size(), 10u);
    for (const auto& pk : s.packets) EXPECT_EQ(pk.size, 100u);
  }
}

TEST(GenerateSample, SizeHistogramMatchesMixture) {
  auto p = simple();
  p.m2s_sizes.atoms = {{60, 1.0}, {200, 2.0}, {500, 1.0}};
  p.s2m_sizes = p.m2s_sizes;
  p.meta_rate = 0.2;
  std::map<std::uint32_t, double> hist;
  double n = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    for (const auto& pk : generate_sample(p, 30, seed).packets) {
      if (pk.is_meta) continue;
      hist[pk.size] += 1;
      n += 1;
    }
  }
  const std::map<std::uint32_t, double> want = {{60, 0.25}, {200, 0.5}, {500, 0.25}};
  double tv = 0;
  for (const auto& [s, c] : hist) tv += std::abs(c / n - (want.count(s) ? want.at(s) : 0.0));
  for (const auto& [s, w] : want) {
    if (!hist.count(s)) tv += w;
  }
  EXPECT_LT(tv / 2, 0.05);
}

TEST(GenerateSample, ValidAndWithinDuration) {
  for (const auto& p : packs::deep_pack()) {
    const auto s = generate_sample(p, 30, 4);
    EXPECT_TRUE(is_valid(s)) << p.name;
    if (!s.packets.empty()) EXPECT_LT(s.packets.back().timestamp, 30.0);
    EXPECT_EQ(s.labels, [&] {
      auto l = p.labels;
      l["flavor"] = std::string(to_string(p.flavor));
      return l;
    }());
  }
}

TEST(GenerateSample, ActiveWindowBoundsTraffic) {
  auto p = simple();
  p.burst.bursts = {50, true};
  p.burst.inter_gap_s = 0.2;
  p.active_s = 5;
  const auto s = generate_sample(p, 30, 2);
  ASSERT_FALSE(s.packets.empty());
  EXPECT_LT(s.packets.back().timestamp, 5.0);
}

TEST(GenerateSample, CeilingClampsNoise) {
  auto p = simple();
  p.flavor = Flavor::LowEnergy;
  p.m2s_sizes = {{{250, 1.0}}, 20};
  p.s2m_sizes = p.m2s_sizes;
  for (const auto& pk : generate_sample(p, 30, 3).packets) EXPECT_LE(pk.size, 255u);
}

TEST(ValidateProfile, Rejections) {
  auto p = simple();
  p.meta_rate = 2;
  EXPECT_THROW(validate_profile(p), SchemaError);
  p = simple();
  p.flavor = Flavor::LowEnergy;
  p.m2s_sizes.atoms = {{300, 1}};
  EXPECT_THROW(validate_profile(p), SchemaError);
  p = simple();
  p.s2m_sizes.atoms.clear();
  EXPECT_THROW(validate_profile(p), SchemaError);
  p = simple();
  p.burst.intra_gap_s = 0;
  EXPECT_THROW(validate_profile(p), SchemaError);
  p = simple("");
  EXPECT_THROW(validate_profile(p), SchemaError);
}

TEST(GenerateDataset, DeterministicLayout) {
  const std::vector<Profile> pack = {simple("a"), simple("b")};
  const auto ds = generate_dataset(pack, 3, 30, 9);
  ASSERT_EQ(ds.size(), 6u);
  EXPECT_EQ(ds.samples[4].label("app"), "b");
  EXPECT_EQ(ds.samples[4], generate_capture(pack[1], nullptr, 30, derive_seed(9, 1, 1)));
  EXPECT_EQ(generate_dataset(pack, 3, 30, 9).samples, ds.samples);
}

TEST(GenerateCapture, BackgroundMergedInOrder) {
  auto bg = simple("bg");
  bg.burst.bursts = {20, true};
  const auto s = generate_capture(simple("a"), &bg, 30, 5);
  const auto alone = generate_sample(simple("a"), 30, derive_seed(5, 0));
  EXPECT_GT(s.packets.size(), alone.packets.size());
  EXPECT_TRUE(is_valid(s));
}

std::map<std::string, Profile> day_profiles() {
  auto a = simple("ActA");
  a.active_s = 15;
  a.burst.inter_gap_s = 1;
  a.burst.bursts = {8, true};
  auto b = a;
  b.name = "ActB";
  auto bg = simple("NoApp");
  bg.burst.bursts = {1, true};
  bg.burst.packets = {2, true};
  bg.m2s_sizes.atoms = {{20, 1}};
  bg.s2m_sizes.atoms = {{20, 1}};
  return {{"ActA", a}, {"ActB", b}, {"NoApp", bg}};
}

DayPlan small_plan() {
  DayPlan p;
  p.catalog = {{"ActA", true}, {"ActB", false}};
  p.total_s = 3 * 3600;
  return p;
}

TEST(GenerateDay, ZeroWeightsGiveOnlyBackground) {
  auto plan = small_plan();
  plan.hourly_weights.assign(24, 0.0);
  const auto day = generate_day(plan, day_profiles(), 1);
  EXPECT_TRUE(day.truth.empty());
  ASSERT_FALSE(day.trace.packets.empty());
  for (const auto& p : day.trace.packets) EXPECT_EQ(p.size, 20u);
}

TEST(GenerateDay, OneActionPerSlot) {
  auto plan = small_plan();
  plan.catalog = {{"ActA", false}};
  plan.total_s = 2400;
  plan.segment_s = 1200;
  plan.trigger_prob = 1.0;
  plan.min_gap_s = 1200;
  plan.mean_wait_s = 0;
  const auto day = generate_day(plan, day_profiles(), 2);
  ASSERT_EQ(day.truth.size(), 2u);
  EXPECT_LE(day.truth[0].end, day.truth[1].start);
  EXPECT_EQ(day.truth[0].start, 0.0);
  EXPECT_EQ(day.truth[1].start, 1200.0);
}

TEST(GenerateDay, PopularActionsDrawnTwiceAsOften) {
  auto plan = small_plan();
  Rng rng(3);
  int popular = 0;
  for (int i = 0; i < 1000; ++i) popular += plan.catalog[draw_action(plan, rng)].popular;
  EXPECT_NEAR(popular / 1000.0, 2.0 / 3.0, 0.05);
}

TEST(GenerateDay, IntervalsAndSegmentsWellFormed) {
  auto plan = small_plan();
  plan.trigger_prob = 0.9;
  plan.mean_wait_s = 30;
  plan.min_gap_s = 10;
  const auto day = generate_day(plan, day_profiles(), 4);
  ASSERT_GT(day.truth.size(), 10u);
  EXPECT_TRUE(is_valid(day.trace));
  for (std::size_t i = 0; i < day.truth.size(); ++i) {
    const auto& iv = day.truth[i];
    EXPECT_GE(iv.start, 0.0);
    EXPECT_LE(iv.end, plan.total_s);
    EXPECT_LT(iv.start, iv.end);
    if (i > 0) EXPECT_LE(day.truth[i - 1].end, iv.start);
    // an action never straddles a segment boundary
    EXPECT_EQ(std::floor(iv.start / plan.segment_s), std::floor((iv.end - 1e-6) / plan.segment_s));
  }
  EXPECT_LT(day.trace.packets.back().timestamp, plan.total_s);
}

TEST(GenerateDay, Deterministic) {
  const auto a = generate_day(small_plan(), day_profiles(), 5);
  const auto b = generate_day(small_plan(), day_profiles(), 5);
  EXPECT_EQ(write_trace_csv(a.trace), write_trace_csv(b.trace));
  EXPECT_EQ(a.truth, b.truth);
  EXPECT_NE(write_trace_csv(generate_day(small_plan(), day_profiles(), 6).trace), write_trace_csv(a.trace));
}

TEST(GenerateDay, Errors) {
  auto plan = small_plan();
  plan.catalog.push_back({"Missing", false});
  EXPECT_THROW(generate_day(plan, day_profiles(), 1), SchemaError);
  plan = small_plan();
  plan.hourly_weights.resize(23);
  EXPECT_THROW(generate_day(plan, day_profiles(), 1), SchemaError);
  plan = small_plan();
  plan.background = "Nope";
  EXPECT_THROW(generate_day(plan, day_profiles(), 1), SchemaError);
}

TEST(Intervals, CsvRoundTrip) {
  const std::vector<Interval> v = {{1.5, 16.5, "A"}, {100, 115.25, "B"}};
  EXPECT_EQ(parse_intervals_csv(write_intervals_csv(v)), v);
  EXPECT_THROW(parse_intervals_csv("start,end\n"), ParseError);
}

TEST(PackJson, RoundTrip) {
  for (const auto& pack : {packs::device_pack(), packs::deep_pack(), packs::day_pack()}) {
    const auto text = write_profile_pack(pack);
    const auto back = parse_profile_pack(text);
    ASSERT_EQ(back.size(), pack.size());
    EXPECT_EQ(write_profile_pack(back), text);
    EXPECT_EQ(generate_sample(back[0], 30, 1), generate_sample(pack[0], 30, 1));
  }
}

TEST(PackJson, SchemaErrorsNameTheLocation) {
  auto expect_error = [](const std::string& text, const std::string& fragment) {
    try {
      parse_profile_pack(text, "pack.json");
      ADD_FAILURE() << "accepted: " << text;
    } catch (const SchemaError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error("{", "pack.json");
  expect_error("{\n\"format\": \"btlab-profile-pack\",\n \"version\": 1,\n \"profiles\": [}\n", "line 4");
  expect_error(R"({"format": "other", "version": 1, "profiles": []})", "format");
  expect_error(R"({"format": "btlab-profile-pack", "version": 1, "profiles": [{"name": "a"}]})",
               "pack.json/profiles/0");
  expect_error(R"({"format": "btlab-profile-pack", "version": 1, "profiles": [{"name": "a", "flavor": "Both",
      "sizes": {"m2s": {}, "s2m": {}}, "bursts": {"count": {}, "packets": {}}}]})",
               "flavor");
  expect_error(R"({"format": "btlab-profile-pack", "version": 1, "profiles": [{"name": "a",
      "sizes": {"m2s": {"atoms": [[10, 1]]}, "s2m": {"atoms": [["x", 1]]}}, "bursts": {"count": {}, "packets": {}}}]})",
               "sizes/s2m/atoms/0");
  const auto one = write_profile_pack({simple("a"), simple("a")});
  expect_error(one, "duplicate name");
}

TEST(PlanJson, RoundTripAndErrors) {
  const auto plan = packs::default_day_plan();
  const auto text = write_day_plan(plan);
  EXPECT_EQ(write_day_plan(parse_day_plan(text)), text);
  EXPECT_THROW(parse_day_plan(R"({"format": "btlab-dayplan", "version": 1, "catalog": []})"), SchemaError);
  EXPECT_THROW(parse_day_plan(R"({"format": "btlab-dayplan", "version": 1, "catalog": [{"action": "a"}],
      "trigger_prob": 3})"),
               SchemaError);
}

}  // namespace
}  // namespace btlab
