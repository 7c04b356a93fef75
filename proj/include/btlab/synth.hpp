#pragma once

// Seeded synthetic traffic: parametric profiles, 30 s capture generation,
// and a day-long usage simulation assembled from fixed-length segments.
//
// A profile emits bursts of packets. The first burst starts after an
// exponential inter-burst gap, packets inside a burst are separated by
// exponential intra-burst gaps, and the next burst starts an exponential
// inter-burst gap after the previous one ends. Each packet is a meta frame
// with probability meta_rate; otherwise its size comes from the size
// mixture of its direction.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "btlab/core.hpp"
#include "btlab/ingest.hpp"
#include "btlab/rng.hpp"

namespace btlab {

struct SizeAtom {
  std::uint32_t size = 0;
  double weight = 1.0;
};

struct SizeMixture {
  std::vector<SizeAtom> atoms;
  std::uint32_t noise = 0;  // uniform integer jitter in [-noise, +noise]
};

/// Poisson(mean) draw, or exactly round(mean) when `fixed`.
struct CountModel {
  double mean = 0;
  bool fixed = false;
};

struct BurstModel {
  CountModel bursts;
  CountModel packets;  // per burst
  double intra_gap_s = 0.01;
  double inter_gap_s = 2.0;
};

struct Profile {
  std::string name;
  Flavor flavor = Flavor::Classic;
  Labels labels;  // device / app / action / pair / day ...
  double m2s_fraction = 0.5;
  SizeMixture m2s_sizes;
  SizeMixture s2m_sizes;
  BurstModel burst;
  double meta_rate = 0.0;
  double volume_scale = 1.0;  // multiplies the burst count
  double active_s = 0.0;      // traffic confined to [0, active_s) when > 0
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Throws SchemaError naming the first broken invariant.
inline void validate_profile(const Profile& p) {
  auto bad = [&](const std::string& what) { throw SchemaError("profile '" + p.name + "': " + what); };
  if (p.name.empty()) throw SchemaError("profile with empty name");
  const auto ceiling = p.flavor == Flavor::Classic ? 1021U : 255U;
  for (const auto* mix : {&p.m2s_sizes, &p.s2m_sizes}) {
    for (const auto& a : mix->atoms) {
      if (!(a.weight > 0)) bad("size weights must be positive");
      if (a.size > ceiling) bad("size " + std::to_string(a.size) + " exceeds the flavor ceiling");
    }
  }
  if (!(p.burst.intra_gap_s > 0) || !(p.burst.inter_gap_s > 0)) bad("gap means must be > 0");
  if (p.burst.bursts.mean < 0 || p.burst.packets.mean < 0) bad("count means must be >= 0");
  if (p.meta_rate < 0 || p.meta_rate > 1) bad("meta_rate must be in [0,1]");
  if (p.m2s_fraction < 0 || p.m2s_fraction > 1) bad("m2s_fraction must be in [0,1]");
  if (p.meta_rate < 1) {
    if (p.m2s_fraction > 0 && p.m2s_sizes.atoms.empty()) bad("m2s size mixture is empty");
    if (p.m2s_fraction < 1 && p.s2m_sizes.atoms.empty()) bad("s2m size mixture is empty");
  }
  if (p.volume_scale < 0) bad("volume_scale must be >= 0");
  if (p.active_s < 0) bad("active_s must be >= 0");
}

namespace detail {

inline std::uint64_t draw_count(Rng& rng, const CountModel& c, double scale = 1.0) {
  const double mean = c.mean * scale;
  if (c.fixed) return static_cast<std::uint64_t>(std::llround(mean));
  return rng.poisson(mean);
}

inline std::uint32_t draw_size(Rng& rng, const SizeMixture& mix, std::uint32_t ceiling) {
  std::vector<double> w;
  w.reserve(mix.atoms.size());
  for (const auto& a : mix.atoms) w.push_back(a.weight);
  auto s = static_cast<std::int64_t>(mix.atoms[rng.weighted(w)].size);
  if (mix.noise > 0) s += rng.integer(-static_cast<std::int64_t>(mix.noise), mix.noise);
  return static_cast<std::uint32_t>(std::clamp<std::int64_t>(s, 0, ceiling));
}

inline void sort_by_time(PacketList& p) {
  std::stable_sort(p.begin(), p.end(),
                   [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; });
}

}  // namespace detail

/// One capture of `duration` seconds from `profile`.
inline TraceSample generate_sample(const Profile& profile, double duration, std::uint64_t seed) {
  validate_profile(profile);
  TraceSample s;
  s.flavor = profile.flavor;
  s.labels = profile.labels;
  s.labels[std::string(label::kFlavor)] = std::string(to_string(profile.flavor));

  const double window = profile.active_s > 0 ? std::min(duration, profile.active_s) : duration;
  const auto ceiling = profile.flavor == Flavor::Classic ? 1021U : 255U;
  Rng rng(seed);
  const auto n_bursts = detail::draw_count(rng, profile.burst.bursts, profile.volume_scale);
  double t = rng.exponential(profile.burst.inter_gap_s);
  for (std::uint64_t b = 0; b < n_bursts && t < window; ++b) {
    const auto n_packets = detail::draw_count(rng, profile.burst.packets);
    for (std::uint64_t j = 0; j < n_packets; ++j) {
      if (j > 0) t += rng.exponential(profile.burst.intra_gap_s);
      const double ts = quantize_us(t);
      if (ts >= window) break;
      PacketRecord p;
      p.timestamp = ts;
      p.direction = rng.bernoulli(profile.m2s_fraction) ? Direction::MasterToSlave : Direction::SlaveToMaster;
      p.is_meta = rng.bernoulli(profile.meta_rate);
      if (!p.is_meta) {
        p.size = detail::draw_size(
            rng, p.direction == Direction::MasterToSlave ? profile.m2s_sizes : profile.s2m_sizes, ceiling);
      }
      s.packets.push_back(p);
    }
    t += rng.exponential(profile.burst.inter_gap_s);
  }
  return s;
}

/// Merges packet lists, keeping `a` first among equal timestamps.
inline PacketList merge_packets(const PacketList& a, const PacketList& b) {
  PacketList out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out),
             [](const PacketRecord& x, const PacketRecord& y) { return x.timestamp < y.timestamp; });
  return out;
}

/// A capture of `profile` with `background` traffic running underneath.
inline TraceSample generate_capture(const Profile& profile, const Profile* background, double duration,
                                    std::uint64_t seed) {
  auto s = generate_sample(profile, duration, derive_seed(seed, 0));
  if (background) {
    const auto bg = generate_sample(*background, duration, derive_seed(seed, 1));
    s.packets = merge_packets(s.packets, bg.packets);
  }
  return s;
}

/// `n` captures per profile; sample i of profile p uses derive_seed(seed, p, i).
inline Dataset generate_dataset(const std::vector<Profile>& profiles, std::size_t n, double duration,
                                std::uint64_t seed, const Profile* background = nullptr) {
  Dataset ds;
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    for (std::size_t i = 0; i < n; ++i) {
      ds.samples.push_back(generate_capture(profiles[p], background, duration, derive_seed(seed, p, i)));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Day simulation

struct CatalogEntry {
  std::string action;  // profile name
  bool popular = false;
};

struct DayPlan {
  std::vector<double> hourly_weights = std::vector<double>(24, 1.0);
  std::vector<CatalogEntry> catalog;
  double popular_multiplier = 2.0;
  double segment_s = 1200.0;
  double total_s = 86400.0;
  double trigger_prob = 0.5;  // coin bias in the busiest hour
  double mean_wait_s = 240.0;
  double min_gap_s = 60.0;  // idle time always inserted after a coin flip
  std::string background = "NoApp";
  double background_chunk_s = 30.0;
};

struct Interval {
  double start = 0;
  double end = 0;
  std::string label;

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct DayTrace {
  TraceSample trace;
  std::vector<Interval> truth;
};

inline void validate_plan(const DayPlan& plan) {
  if (plan.hourly_weights.size() != 24) throw SchemaError("day plan: hourly_weights must have 24 entries");
  for (double w : plan.hourly_weights) {
    if (w < 0) throw SchemaError("day plan: hourly weights must be non-negative");
  }
  if (plan.catalog.empty()) throw SchemaError("day plan: empty action catalog");
  if (!(plan.segment_s > 0) || !(plan.total_s > 0)) throw SchemaError("day plan: durations must be > 0");
  if (plan.trigger_prob < 0 || plan.trigger_prob > 1) throw SchemaError("day plan: trigger_prob must be in [0,1]");
  if (plan.popular_multiplier <= 0) throw SchemaError("day plan: popular_multiplier must be > 0");
  if (plan.mean_wait_s < 0 || plan.min_gap_s < 0) throw SchemaError("day plan: waits must be >= 0");
  if (!(plan.min_gap_s > 0) && !(plan.mean_wait_s > 0)) throw SchemaError("day plan: waits cannot both be 0");
}

/// Catalog index drawn with popular actions weighted by popular_multiplier.
inline std::size_t draw_action(const DayPlan& plan, Rng& rng) {
  std::vector<double> w;
  for (const auto& e : plan.catalog) w.push_back(e.popular ? plan.popular_multiplier : 1.0);
  return rng.weighted(w);
}

/// Simulates `plan.total_s` seconds of wear as consecutive segments. In
/// each segment a loop flips a coin biased by the hour's weight, runs a
/// drawn action on success, then idles min_gap_s + Exp(mean_wait_s).
/// Background traffic is laid down in back-to-back chunks throughout.
inline DayTrace generate_day(const DayPlan& plan, const std::map<std::string, Profile>& profiles,
                             std::uint64_t seed) {
  validate_plan(plan);
  for (const auto& e : plan.catalog) {
    if (!profiles.count(e.action)) throw SchemaError("day plan: no profile for action '" + e.action + "'");
  }
  const Profile* background = nullptr;
  if (!plan.background.empty()) {
    auto it = profiles.find(plan.background);
    if (it == profiles.end()) throw SchemaError("day plan: no background profile '" + plan.background + "'");
    background = &it->second;
  }
  const double max_w = *std::max_element(plan.hourly_weights.begin(), plan.hourly_weights.end());

  DayTrace day;
  const auto n_segments = static_cast<std::size_t>(std::ceil(plan.total_s / plan.segment_s));
  for (std::size_t k = 0; k < n_segments; ++k) {
    const double base = static_cast<double>(k) * plan.segment_s;
    const double seg_len = std::min(plan.segment_s, plan.total_s - base);
    const auto hour = static_cast<std::size_t>(std::floor(base / 3600.0)) % 24;
    const double p = max_w > 0 ? plan.trigger_prob * plan.hourly_weights[hour] / max_w : 0.0;
    Rng rng(derive_seed(seed, k, 0));

    PacketList seg;
    if (background) {
      std::uint64_t chunk = 0;
      for (double c = 0; c < seg_len; c += plan.background_chunk_s, ++chunk) {
        const double len = std::min(plan.background_chunk_s, seg_len - c);
        auto bg = generate_sample(*background, len, derive_seed(seed, k, 1 + chunk));
        for (auto& pk : bg.packets) pk.timestamp = quantize_us(base + c + pk.timestamp);
        seg = merge_packets(seg, bg.packets);
      }
    }
    double t = 0;
    std::uint64_t action_no = 0;
    while (t < seg_len) {
      if (rng.bernoulli(p)) {
        const auto& entry = plan.catalog[draw_action(plan, rng)];
        const auto& prof = profiles.at(entry.action);
        const double dur = prof.active_s > 0 ? prof.active_s : 30.0;
        if (t + dur > seg_len) break;
        auto a = generate_sample(prof, dur, derive_seed(seed, k, 1000000 + action_no++));
        const double start = quantize_us(base + t);
        for (auto& pk : a.packets) pk.timestamp = quantize_us(start + pk.timestamp);
        seg = merge_packets(a.packets, seg);
        day.truth.push_back({start, quantize_us(start + dur), entry.action});
        t += dur;
      }
      t += plan.min_gap_s + rng.exponential(plan.mean_wait_s);
    }
    // stray rounding at the segment edge
    const double limit = base + seg_len;
    for (auto& pk : seg) {
      if (pk.timestamp >= limit) pk.timestamp = quantize_us(limit - 1e-6);
    }
    day.trace.packets.insert(day.trace.packets.end(), seg.begin(), seg.end());
  }
  day.trace.flavor = background ? background->flavor : profiles.at(plan.catalog.front().action).flavor;
  day.trace.labels[std::string(label::kFlavor)] = std::string(to_string(day.trace.flavor));
  return day;
}

inline std::string write_intervals_csv(const std::vector<Interval>& v) {
  std::string out = "start_s,end_s,label\n";
  for (const auto& i : v) {
    detail::append_fixed6(out, i.start);
    out += ',';
    detail::append_fixed6(out, i.end);
    out += ',' + i.label + '\n';
  }
  return out;
}

inline std::vector<Interval> parse_intervals_csv(std::string_view content) {
  auto lines = detail::split_lines(content);
  if (lines.empty() || lines[0] != "start_s,end_s,label") throw ParseError(1, "expected header 'start_s,end_s,label'");
  std::vector<Interval> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = detail::split_fields(lines[i]);
    Interval iv;
    if (f.size() != 3 || !detail::parse_number(f[0], iv.start) || !detail::parse_number(f[1], iv.end)) {
      throw ParseError(i + 1, "expected start_s,end_s,label");
    }
    iv.label = f[2];
    out.push_back(std::move(iv));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structured-text (JSON) schemas.
//
// Profile pack:
//   {"format": "btlab-profile-pack", "version": 1, "profiles": [
//     {"name": "...", "flavor": "Classic" | "LowEnergy",
//      "labels": {"device": "...", "app": "...", "action": "..."},
//      "m2s_fraction": 0.5,
//      "sizes": {"m2s": {"atoms": [[size, weight], ...], "noise": 0},
//                "s2m": {...}},
//      "bursts": {"count": {"mean": 5, "fixed": false},
//                 "packets": {"mean": 8, "fixed": false},
//                 "intra_gap_s": 0.01, "inter_gap_s": 2.0},
//      "meta_rate": 0.3, "volume_scale": 1.0, "active_s": 0}]}
//
// Day plan:
//   {"format": "btlab-dayplan", "version": 1, "hourly_weights": [24 numbers],
//    "catalog": [{"action": "...", "popular": true}], "popular_multiplier": 2,
//    "segment_s": 1200, "total_s": 86400, "trigger_prob": 0.5,
//    "mean_wait_s": 240, "min_gap_s": 60, "background": "NoApp",
//    "background_chunk_s": 30}

inline constexpr std::string_view kPackFormat = "btlab-profile-pack";
inline constexpr std::string_view kPlanFormat = "btlab-dayplan";

namespace detail {

using nlohmann::json;

inline json mixture_to_json(const SizeMixture& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms) atoms.push_back({a.size, a.weight});
  return {{"atoms", atoms}, {"noise", m.noise}};
}

inline json count_to_json(const CountModel& c) { return {{"mean", c.mean}, {"fixed", c.fixed}}; }

template <class T>
T get_field(const json& j, const std::string& key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(where + "/" + key + ": " + e.what());
  }
}

inline const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(where + ": missing '" + key + "'");
  return j.at(key);
}

inline SizeMixture mixture_from_json(const json& j, const std::string& where) {
  SizeMixture m;
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  if (j.contains("atoms")) {
    const auto& atoms = j.at("atoms");
    if (!atoms.is_array()) throw SchemaError(where + "/atoms: expected an array");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const auto& a = atoms[i];
      if (!a.is_array() || a.size() != 2 || !a[0].is_number_unsigned() || !a[1].is_number()) {
        throw SchemaError(where + "/atoms/" + std::to_string(i) + ": expected [size, weight]");
      }
      m.atoms.push_back({a[0].get<std::uint32_t>(), a[1].get<double>()});
    }
  }
  m.noise = get_field<std::uint32_t>(j, "noise", where, 0);
  return m;
}

inline CountModel count_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  return {get_field<double>(j, "mean", where, 0.0), get_field<bool>(j, "fixed", where, false)};
}

}  // namespace detail

inline nlohmann::json profile_to_json(const Profile& p) {
  using detail::json;
  return {{"name", p.name},
          {"flavor", std::string(to_string(p.flavor))},
          {"labels", p.labels},
          {"m2s_fraction", p.m2s_fraction},
          {"sizes", {{"m2s", detail::mixture_to_json(p.m2s_sizes)}, {"s2m", detail::mixture_to_json(p.s2m_sizes)}}},
          {"bursts",
           {{"count", detail::count_to_json(p.burst.bursts)},
            {"packets", detail::count_to_json(p.burst.packets)},
            {"intra_gap_s", p.burst.intra_gap_s},
            {"inter_gap_s", p.burst.inter_gap_s}}},
          {"meta_rate", p.meta_rate},
          {"volume_scale", p.volume_scale},
          {"active_s", p.active_s}};
}

inline Profile profile_from_json(const nlohmann::json& j, const std::string& where) {
  Profile p;
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  p.name = detail::get_field<std::string>(j, "name", where, "");
  const auto flavor = detail::get_field<std::string>(j, "flavor", where, "Classic");
  auto fl = parse_flavor(flavor);
  if (!fl) throw SchemaError(where + "/flavor: must be Classic or LowEnergy");
  p.flavor = *fl;
  p.labels = detail::get_field<Labels>(j, "labels", where, {});
  p.m2s_fraction = detail::get_field<double>(j, "m2s_fraction", where, 0.5);
  const auto& sizes = detail::require(j, "sizes", where);
  p.m2s_sizes = detail::mixture_from_json(detail::require(sizes, "m2s", where + "/sizes"), where + "/sizes/m2s");
  p.s2m_sizes = detail::mixture_from_json(detail::require(sizes, "s2m", where + "/sizes"), where + "/sizes/s2m");
  const auto& b = detail::require(j, "bursts", where);
  p.burst.bursts = detail::count_from_json(detail::require(b, "count", where + "/bursts"), where + "/bursts/count");
  p.burst.packets =
      detail::count_from_json(detail::require(b, "packets", where + "/bursts"), where + "/bursts/packets");
  p.burst.intra_gap_s = detail::get_field<double>(b, "intra_gap_s", where + "/bursts", 0.01);
  p.burst.inter_gap_s = detail::get_field<double>(b, "inter_gap_s", where + "/bursts", 2.0);
  p.meta_rate = detail::get_field<double>(j, "meta_rate", where, 0.0);
  p.volume_scale = detail::get_field<double>(j, "volume_scale", where, 1.0);
  p.active_s = detail::get_field<double>(j, "active_s", where, 0.0);
  try {
    validate_profile(p);
  } catch (const SchemaError& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return p;
}

inline std::string write_profile_pack(const std::vector<Profile>& profiles) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : profiles) arr.push_back(profile_to_json(p));
  nlohmann::json j = {{"format", kPackFormat}, {"version", 1}, {"profiles", arr}};
  return j.dump(2) + "\n";
}

namespace detail {

inline nlohmann::json parse_json_text(std::string_view text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(source + ": " + e.what());
  }
}

inline void check_header(const nlohmann::json& j, std::string_view format, const std::string& source) {
  if (!j.is_object() || j.value("format", std::string()) != format) {
    throw SchemaError(source + ": expected \"format\": \"" + std::string(format) + "\"");
  }
  if (j.value("version", 0) != 1) throw SchemaError(source + ": unsupported version");
}

}  // namespace detail

/// `source` names the file in error messages.
inline std::vector<Profile> parse_profile_pack(std::string_view text, const std::string& source = "<pack>") {
  const auto j = detail::parse_json_text(text, source);
  detail::check_header(j, kPackFormat, source);
  const auto& arr = detail::require(j, "profiles", source);
  if (!arr.is_array()) throw SchemaError(source + "/profiles: expected an array");
  std::vector<Profile> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(profile_from_json(arr[i], source + "/profiles/" + std::to_string(i)));
    if (!names.insert(out.back().name).second) {
      throw SchemaError(source + "/profiles/" + std::to_string(i) + ": duplicate name '" + out.back().name + "'");
    }
  }
  return out;
}

inline std::string write_day_plan(const DayPlan& plan) {
  nlohmann::json cat = nlohmann::json::array();
  for (const auto& e : plan.catalog) cat.push_back({{"action", e.action}, {"popular", e.popular}});
  nlohmann::json j = {{"format", kPlanFormat},
                      {"version", 1},
                      {"hourly_weights", plan.hourly_weights},
                      {"catalog", cat},
                      {"popular_multiplier", plan.popular_multiplier},
                      {"segment_s", plan.segment_s},
                      {"total_s", plan.total_s},
                      {"trigger_prob", plan.trigger_prob},
                      {"mean_wait_s", plan.mean_wait_s},
                      {"min_gap_s", plan.min_gap_s},
                      {"background", plan.background},
                      {"background_chunk_s", plan.background_chunk_s}};
  return j.dump(2) + "\n";
}

inline DayPlan parse_day_plan(std::string_view text, const std::string& source = "<plan>") {
  const auto j = detail::parse_json_text(text, source);
  detail::check_header(j, kPlanFormat, source);
  DayPlan p;
  p.hourly_weights = detail::get_field<std::vector<double>>(j, "hourly_weights", source, p.hourly_weights);
  const auto& cat = detail::require(j, "catalog", source);
  if (!cat.is_array()) throw SchemaError(source + "/catalog: expected an array");
  for (std::size_t i = 0; i < cat.size(); ++i) {
    const std::string where = source + "/catalog/" + std::to_string(i);
    if (!cat[i].is_object()) throw SchemaError(where + ": expected an object");
    p.catalog.push_back({detail::get_field<std::string>(cat[i], "action", where, ""),
                         detail::get_field<bool>(cat[i], "popular", where, false)});
  }
  p.popular_multiplier = detail::get_field<double>(j, "popular_multiplier", source, p.popular_multiplier);
  p.segment_s = detail::get_field<double>(j, "segment_s", source, p.segment_s);
  p.total_s = detail::get_field<double>(j, "total_s", source, p.total_s);
  p.trigger_prob = detail::get_field<double>(j, "trigger_prob", source, p.trigger_prob);
  p.mean_wait_s = detail::get_field<double>(j, "mean_wait_s", source, p.mean_wait_s);
  p.min_gap_s = detail::get_field<double>(j, "min_gap_s", source, p.min_gap_s);
  p.background = detail::get_field<std::string>(j, "background", source, p.background);
  p.background_chunk_s = detail::get_field<double>(j, "background_chunk_s", source, p.background_chunk_s);
  try {
    validate_plan(p);
  } catch (const SchemaError& e) {
    throw SchemaError(source + ": " + e.what());
  }
  return p;
}

}  // namespace btlab
