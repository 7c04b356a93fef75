#pragma once

// Fixed-length feature vectors computed from a capture.
//
// Device32 layout (32 values):
//   [0, 15)   size stats (min, mean, max, count, std) of m2s, s2m, data
//   [15, 25)  coarse size buckets over all packets: [0,9] ... [80,89], [90,inf)
//   [25, 30)  inter-arrival stats over all packets
//   [30, 32)  average inter-packet time of sent (m2s) and received (s2m)
//
// Action997 layout (997 values):
//   [0, 15)    size stats of m2s, s2m, data
//   [15, 30)   size stats of the same three sequences keeping sizes >= 46
//   [30, 990)  per-size counts for sizes 46..1005 over all packets
//   [990, 995) inter-arrival stats
//   [995, 997) average inter-packet time sent / received
//
// Statistics of an empty sequence are all zero; std is the population std.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "btlab/core.hpp"

namespace btlab {

enum class FeatureSchema { Device32, Action997 };

inline std::string_view to_string(FeatureSchema s) {
  return s == FeatureSchema::Device32 ? "device32" : "action997";
}

inline constexpr std::size_t kDevice32Size = 32;
inline constexpr std::size_t kAction997Size = 997;
inline constexpr std::size_t kCoarseBuckets = 10;
inline constexpr std::uint32_t kFineMin = 46;
inline constexpr std::uint32_t kFineMax = 1005;
inline constexpr std::size_t kFineBuckets = kFineMax - kFineMin + 1;  // 960
inline constexpr std::uint32_t kSmallPacketCutoff = 46;

inline constexpr std::size_t schema_size(FeatureSchema s) {
  return s == FeatureSchema::Device32 ? kDevice32Size : kAction997Size;
}

/// min, mean, max, count, std
using Stats5 = std::array<double, 5>;

inline Stats5 stats5(const std::vector<double>& v) {
  if (v.empty()) return {0, 0, 0, 0, 0};
  const double n = static_cast<double>(v.size());
  double lo = v.front(), hi = v.front(), sum = 0;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    sum += x;
  }
  const double mean = sum / n;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {lo, mean, hi, n, std::sqrt(ss / n)};
}

inline Stats5 size_stats(const PacketList& seq) {
  std::vector<double> sizes;
  sizes.reserve(seq.size());
  for (const auto& p : seq) sizes.push_back(static_cast<double>(p.size));
  return stats5(sizes);
}

inline std::array<double, kCoarseBuckets> coarse_buckets(const PacketList& seq) {
  std::array<double, kCoarseBuckets> b{};
  for (const auto& p : seq) ++b[std::min<std::size_t>(p.size / 10, kCoarseBuckets - 1)];
  return b;
}

inline std::vector<double> fine_buckets(const PacketList& seq) {
  std::vector<double> b(kFineBuckets, 0.0);
  for (const auto& p : seq) {
    if (p.size >= kFineMin && p.size <= kFineMax) ++b[p.size - kFineMin];
  }
  return b;
}

inline Stats5 interarrival_stats(const PacketList& packets) {
  if (packets.size() < 2) return {0, 0, 0, 0, 0};
  std::vector<double> d;
  d.reserve(packets.size() - 1);
  for (std::size_t i = 1; i < packets.size(); ++i) {
    d.push_back(packets[i].timestamp - packets[i - 1].timestamp);
  }
  return stats5(d);
}

inline Stats5 interarrival_stats(const TraceSample& sample) { return interarrival_stats(sample.packets); }

/// Mean gap between consecutive packets; the sum telescopes to
/// (last - first) / (n - 1).
inline double avg_ipt(const PacketList& seq) {
  if (seq.size() < 2) return 0.0;
  return (seq.back().timestamp - seq.front().timestamp) / static_cast<double>(seq.size() - 1);
}

inline PacketList drop_small(const PacketList& seq, std::uint32_t min_size = kSmallPacketCutoff) {
  PacketList out;
  for (const auto& p : seq) {
    if (p.size >= min_size) out.push_back(p);
  }
  return out;
}

struct FeatureVector {
  std::vector<double> values;
  FeatureSchema schema = FeatureSchema::Device32;

  [[nodiscard]] const std::vector<std::string>& names() const;
  [[nodiscard]] std::size_t size() const { return values.size(); }
};

namespace detail {

inline void add_stats_names(std::vector<std::string>& n, const std::string& prefix) {
  for (const char* s : {"min", "mean", "max", "count", "std"}) n.push_back(prefix + "_size_" + s);
}

inline void add_timing_names(std::vector<std::string>& n) {
  for (const char* s : {"min", "mean", "max", "count", "std"}) n.push_back(std::string("ipt_") + s);
  n.emplace_back("avg_ipt_sent");
  n.emplace_back("avg_ipt_recv");
}

inline void append(std::vector<double>& out, const Stats5& s) { out.insert(out.end(), s.begin(), s.end()); }

}  // namespace detail

inline const std::vector<std::string>& feature_names(FeatureSchema schema) {
  static const std::vector<std::string> device = [] {
    std::vector<std::string> n;
    for (const char* seq : {"m2s", "s2m", "data"}) detail::add_stats_names(n, seq);
    for (int b = 0; b < 9; ++b) {
      n.push_back("bucket_" + std::to_string(b * 10) + "_" + std::to_string(b * 10 + 9));
    }
    n.emplace_back("bucket_90_inf");
    detail::add_timing_names(n);
    return n;
  }();
  static const std::vector<std::string> action = [] {
    std::vector<std::string> n;
    for (const char* seq : {"m2s", "s2m", "data"}) detail::add_stats_names(n, seq);
    for (const char* seq : {"m2s46", "s2m46", "data46"}) detail::add_stats_names(n, seq);
    for (std::uint32_t s = kFineMin; s <= kFineMax; ++s) n.push_back("size_" + std::to_string(s));
    detail::add_timing_names(n);
    return n;
  }();
  return schema == FeatureSchema::Device32 ? device : action;
}

inline const std::vector<std::string>& FeatureVector::names() const { return feature_names(schema); }

inline FeatureVector extract_device32(const TraceSample& sample) {
  const auto f = filter_sequences(sample);
  FeatureVector v{{}, FeatureSchema::Device32};
  v.values.reserve(kDevice32Size);
  detail::append(v.values, size_stats(f.m2s));
  detail::append(v.values, size_stats(f.s2m));
  detail::append(v.values, size_stats(f.data));
  const auto buckets = coarse_buckets(sample.packets);
  v.values.insert(v.values.end(), buckets.begin(), buckets.end());
  detail::append(v.values, interarrival_stats(sample.packets));
  v.values.push_back(avg_ipt(f.m2s));
  v.values.push_back(avg_ipt(f.s2m));
  return v;
}

inline FeatureVector extract_action997(const TraceSample& sample) {
  const auto f = filter_sequences(sample);
  FeatureVector v{{}, FeatureSchema::Action997};
  v.values.reserve(kAction997Size);
  detail::append(v.values, size_stats(f.m2s));
  detail::append(v.values, size_stats(f.s2m));
  detail::append(v.values, size_stats(f.data));
  detail::append(v.values, size_stats(drop_small(f.m2s)));
  detail::append(v.values, size_stats(drop_small(f.s2m)));
  detail::append(v.values, size_stats(drop_small(f.data)));
  const auto fine = fine_buckets(sample.packets);
  v.values.insert(v.values.end(), fine.begin(), fine.end());
  detail::append(v.values, interarrival_stats(sample.packets));
  v.values.push_back(avg_ipt(f.m2s));
  v.values.push_back(avg_ipt(f.s2m));
  return v;
}

inline FeatureVector extract(const TraceSample& sample, FeatureSchema schema) {
  return schema == FeatureSchema::Device32 ? extract_device32(sample) : extract_action997(sample);
}

}  // namespace btlab
