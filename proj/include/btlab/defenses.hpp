#pragma once

// Trace-level defenses and their cost accounting.
//
//   pad          every data packet padded to the flavor's maximum payload
//   delay_group  every packet held until the next whole second
//   add_dummies  dummy packets at Rayleigh-distributed offsets from the
//                first packet, sizes drawn from an empirical distribution

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "btlab/core.hpp"
#include "btlab/ingest.hpp"
#include "btlab/rng.hpp"

namespace btlab {

inline constexpr std::uint32_t kMaxPayloadClassic = 1021;  // 3-DH5 ACL payload
inline constexpr std::uint32_t kMaxPayloadLowEnergy = 255;

inline constexpr std::uint32_t max_payload(Flavor f) {
  return f == Flavor::Classic ? kMaxPayloadClassic : kMaxPayloadLowEnergy;
}

struct DefenseCost {
  double mean_delay_per_packet = 0;  // s
  double extra_duration = 0;         // s
  double padding_bytes = 0;
  double dummy_bytes = 0;
  double overhead_pct = 0;  // 100 * (padding + dummy) / original payload
};

struct Defended {
  TraceSample sample;
  DefenseCost cost;
};

inline std::uint64_t payload_bytes(const TraceSample& s) {
  std::uint64_t total = 0;
  for (const auto& p : s.packets) total += p.size;
  return total;
}

namespace detail {

inline void finish_overhead(DefenseCost& c, const TraceSample& original) {
  const auto base = static_cast<double>(payload_bytes(original));
  c.overhead_pct = base > 0 ? 100.0 * (c.padding_bytes + c.dummy_bytes) / base : 0.0;
}

}  // namespace detail

inline Defended pad(const TraceSample& sample, Flavor flavor) {
  const auto ceiling = max_payload(flavor);
  Defended d{sample, {}};
  std::uint64_t added = 0;
  for (std::size_t i = 0; i < d.sample.packets.size(); ++i) {
    auto& p = d.sample.packets[i];
    if (p.is_meta) continue;
    if (p.size > ceiling) {
      throw Error("pad: packet " + std::to_string(i) + " has " + std::to_string(p.size) + " bytes, above the " +
                  std::to_string(ceiling) + " B ceiling");
    }
    added += ceiling - p.size;
    p.size = ceiling;
  }
  d.cost.padding_bytes = static_cast<double>(added);
  detail::finish_overhead(d.cost, sample);
  return d;
}

inline Defended pad(const TraceSample& sample) { return pad(sample, sample.flavor); }

inline Defended delay_group(const TraceSample& sample) {
  Defended d{sample, {}};
  if (sample.packets.empty()) return d;
  double delay = 0;
  for (auto& p : d.sample.packets) {
    const double t = std::ceil(p.timestamp);
    delay += t - p.timestamp;
    p.timestamp = t;
  }
  d.cost.mean_delay_per_packet = delay / static_cast<double>(sample.packets.size());
  d.cost.extra_duration = d.sample.packets.back().timestamp - sample.packets.back().timestamp;
  return d;
}

/// Empirical (size, direction) pool that dummy packets are drawn from.
struct SizeSource {
  std::vector<std::uint32_t> sizes;
  double m2s_fraction = 0.5;

  static SizeSource from_dataset(const Dataset& ds) {
    SizeSource src;
    std::size_t m2s = 0;
    for (const auto& s : ds.samples) {
      for (const auto& p : s.packets) {
        if (p.is_meta) continue;
        src.sizes.push_back(p.size);
        m2s += p.direction == Direction::MasterToSlave;
      }
    }
    if (!src.sizes.empty()) src.m2s_fraction = static_cast<double>(m2s) / static_cast<double>(src.sizes.size());
    return src;
  }
};

struct DummyConfig {
  double mean_s = 6.0;         // mean of the Rayleigh offset
  std::size_t n_dummies = 300;
  bool uniform_count = false;  // draw the count uniformly from [1, n_dummies]
};

/// Rayleigh scale whose mean equals `mean`.
inline double rayleigh_sigma_for_mean(double mean) { return mean / std::sqrt(std::numbers::pi / 2.0); }

inline Defended add_dummies(const TraceSample& sample, const DummyConfig& cfg, const SizeSource& source,
                            std::uint64_t seed) {
  if (!(cfg.mean_s > 0)) throw Error("add_dummies: mean must be > 0");
  Defended d{sample, {}};
  Rng rng(seed);
  std::size_t n = cfg.n_dummies;
  if (cfg.uniform_count && n > 0) n = static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(n)));
  if (n == 0) {
    detail::finish_overhead(d.cost, sample);
    return d;
  }
  if (source.sizes.empty()) throw Error("add_dummies: empty size source");

  const double sigma = rayleigh_sigma_for_mean(cfg.mean_s);
  const double anchor = sample.packets.empty() ? 0.0 : sample.packets.front().timestamp;
  PacketList dummies;
  dummies.reserve(n);
  std::uint64_t bytes = 0;
  for (std::size_t i = 0; i < n; ++i) {
    PacketRecord p;
    p.timestamp = quantize_us(anchor + rng.rayleigh(sigma));
    p.size = source.sizes[rng.index(source.sizes.size())];
    p.direction = rng.bernoulli(source.m2s_fraction) ? Direction::MasterToSlave : Direction::SlaveToMaster;
    bytes += p.size;
    dummies.push_back(p);
  }
  std::stable_sort(dummies.begin(), dummies.end(),
                   [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; });
  // originals first among equal timestamps
  d.sample.packets.clear();
  std::merge(sample.packets.begin(), sample.packets.end(), dummies.begin(), dummies.end(),
             std::back_inserter(d.sample.packets),
             [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; });

  d.cost.dummy_bytes = static_cast<double>(bytes);
  const double old_end = sample.packets.empty() ? 0.0 : sample.packets.back().timestamp;
  d.cost.extra_duration = std::max(0.0, d.sample.packets.back().timestamp - old_end);
  detail::finish_overhead(d.cost, sample);
  return d;
}

/// One row of a defense cost table, costs averaged per sample.
struct DefenseCostRow {
  std::string defense;
  double accuracy_pct = 0;
  double delay_per_packet_s = 0;
  double extra_duration_s = 0;
  double padding_kb = 0;
  double dummy_kb = 0;
  double overhead_pct = 0;
};

inline constexpr double kBytesPerKb = 1000.0;

/// Averages per-sample costs. `accuracy` is the retrained adversary's
/// accuracy on the defended data, in [0, 1].
inline DefenseCostRow defense_cost_summary(std::string name, const Dataset& before, const Dataset& after,
                                           const std::vector<DefenseCost>& costs, double accuracy) {
  if (before.size() != after.size() || before.size() != costs.size()) {
    throw Error("defense_cost_summary: sample counts differ (" + std::to_string(before.size()) + ", " +
                std::to_string(after.size()) + ", " + std::to_string(costs.size()) + ")");
  }
  DefenseCostRow row;
  row.defense = std::move(name);
  row.accuracy_pct = 100.0 * accuracy;
  if (costs.empty()) return row;
  for (const auto& c : costs) {
    row.delay_per_packet_s += c.mean_delay_per_packet;
    row.extra_duration_s += c.extra_duration;
    row.padding_kb += c.padding_bytes / kBytesPerKb;
    row.dummy_kb += c.dummy_bytes / kBytesPerKb;
    row.overhead_pct += c.overhead_pct;
  }
  const auto n = static_cast<double>(costs.size());
  row.delay_per_packet_s /= n;
  row.extra_duration_s /= n;
  row.padding_kb /= n;
  row.dummy_kb /= n;
  row.overhead_pct /= n;
  return row;
}

}  // namespace btlab
