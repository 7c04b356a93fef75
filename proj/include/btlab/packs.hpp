#pragma once

// Built-in profile packs: desk-scale stand-ins for the real captures.
//
//   device_pack     7 Classic + 7 LE devices, one sync profile each
//   wide_pack       49 device-specific actions over the same 14 devices
//   deep_pack       38 high-volume + 18 low-volume smartwatch apps
//   diabetes_pack   6 meal-management actions inside one app
//   day_pack        17 day-long actions, their apps' Close events and the
//                   NoApp background, plus the matching DayPlan
//
// Every pack is a pure function of its arguments. Size signatures are
// drawn from a fixed design seed so they never change between runs.

#include <map>
#include <string>
#include <vector>

#include "btlab/synth.hpp"

namespace btlab::packs {

struct DeviceInfo {
  std::string name;
  Flavor flavor;
  std::string chipset;
};

inline const std::vector<DeviceInfo>& devices() {
  static const std::vector<DeviceInfo> d = {
      {"GalaxyWatch", Flavor::Classic, "Broadcom"},
      {"ExploristHR", Flavor::Classic, "Qualcomm"},
      {"AppleWatch4", Flavor::Classic, "Apple"},
      {"HuaweiWatch2", Flavor::Classic, "Broadcom"},
      {"Versa2", Flavor::Classic, "Cypress"},
      {"MDR-XB9", Flavor::Classic, "Qualcomm"},
      {"AirPods2", Flavor::Classic, "Apple"},
      {"AppleWatch4", Flavor::LowEnergy, "Apple"},
      {"Charge2", Flavor::LowEnergy, "Microelectronics"},
      {"Charge3", Flavor::LowEnergy, "Cypress"},
      {"Band3e", Flavor::LowEnergy, "RivieraWaves"},
      {"MiBand2", Flavor::LowEnergy, "Dialog"},
      {"MiBand3", Flavor::LowEnergy, "Dialog"},
      {"MiBand4", Flavor::LowEnergy, "Dialog"},
  };
  return d;
}

/// device name -> chipset vendor, for the chipset relabeling experiment.
inline std::map<std::string, std::string> chipset_map() {
  std::map<std::string, std::string> m;
  for (const auto& d : devices()) m[d.name] = d.chipset;
  return m;
}

namespace detail {

inline Labels make_labels(const std::string& device, const std::string& app, const std::string& action) {
  return {{"device", device}, {"app", app}, {"action", action}, {"pair", "P1"}, {"day", "0"}};
}

inline SizeMixture mix(std::initializer_list<std::pair<std::uint32_t, double>> atoms, std::uint32_t noise = 0) {
  SizeMixture m;
  for (auto [s, w] : atoms) m.atoms.push_back({s, w});
  m.noise = noise;
  return m;
}

/// `n` distinct sizes in [lo, hi], none in `taken`; marks them taken.
inline std::vector<std::uint32_t> distinct_sizes(Rng& rng, std::size_t n, std::uint32_t lo, std::uint32_t hi,
                                                 std::set<std::uint32_t>& taken) {
  std::vector<std::uint32_t> out;
  while (out.size() < n) {
    const auto s = static_cast<std::uint32_t>(rng.integer(lo, hi));
    if (taken.insert(s).second) out.push_back(s);
  }
  return out;
}

inline constexpr std::uint64_t kDesignSeed = 0xB1E7007AULL;

}  // namespace detail

inline Profile device_profile(std::size_t i) {
  const auto& d = devices().at(i);
  const bool classic = d.flavor == Flavor::Classic;
  const auto k = static_cast<std::uint32_t>(classic ? i : i - 7);
  const double kd = static_cast<double>(k);
  Profile p;
  p.name = d.name + (classic ? "_Classic" : "_LE") + "_Sync";
  p.flavor = d.flavor;
  p.labels = detail::make_labels(d.name, "", "Sync");
  if (classic) {
    p.m2s_sizes = detail::mix({{12 + 7 * k, 3.0}, {60 + 37 * k, 1.0}}, 2);
    p.s2m_sizes = detail::mix({{25 + 11 * k, 2.0}, {150 + 90 * k, 1.5}}, 2);
  } else {
    p.m2s_sizes = detail::mix({{9 + 5 * k, 3.0}, {30 + 20 * k, 1.0}}, 1);
    p.s2m_sizes = detail::mix({{14 + 6 * k, 2.0}, {40 + 28 * k, 1.5}}, 1);
  }
  p.m2s_fraction = 0.35 + 0.04 * kd;
  p.burst.bursts = {4.0 + kd, false};
  p.burst.packets = {5.0 + 2.0 * static_cast<double>(k % 3), false};
  p.burst.intra_gap_s = 0.003 * (1.0 + kd);
  p.burst.inter_gap_s = 1.5 + 0.4 * kd;
  p.meta_rate = 0.2 + 0.05 * static_cast<double>(k % 4);
  return p;
}

inline std::vector<Profile> device_pack() {
  std::vector<Profile> out;
  for (std::size_t i = 0; i < devices().size(); ++i) out.push_back(device_profile(i));
  return out;
}

/// 4 actions on the first three devices of each flavor, 3 on the rest: 49.
inline std::vector<Profile> wide_pack() {
  static const std::vector<std::string> actions = {"Open", "Workout", "HeartRate", "SMSReceived"};
  Rng rng(derive_seed(detail::kDesignSeed, 1));
  std::set<std::uint32_t> taken;
  std::vector<Profile> out;
  for (std::size_t i = 0; i < devices().size(); ++i) {
    const auto base = device_profile(i);
    const bool classic = base.flavor == Flavor::Classic;
    const std::size_t n_actions = (i % 7) < 3 ? 4 : 3;
    for (std::size_t a = 0; a < n_actions; ++a) {
      Profile p = base;
      const auto& dev = devices()[i].name;
      p.name = dev + (classic ? "_Classic_" : "_LE_") + actions[a];
      p.labels = detail::make_labels(dev, "", dev + "_" + actions[a]);
      const auto sig = detail::distinct_sizes(rng, 2, 46, classic ? 1000 : 250, taken);
      p.s2m_sizes.atoms.push_back({sig[0], 1.2});
      p.m2s_sizes.atoms.push_back({sig[1], 0.6});
      p.burst.bursts.mean += static_cast<double>(a);
      p.burst.intra_gap_s *= 1.0 + 0.5 * static_cast<double>(a);
      out.push_back(std::move(p));
    }
  }
  return out;
}

inline const std::vector<std::string>& high_volume_apps() {
  static const std::vector<std::string> v = {
      "AppInTheAir", "Bring",      "Calm",        "ChinaDaily", "Citymapper", "DCLMRadio",  "DiabetesM",
      "Endomondo",   "FITIVPlus",  "FindMyPhone", "Fit",        "FitBreathe", "FitWorkout", "Foursquare",
      "Glide",       "KeepNotes",  "Krone",       "Lifesum",    "MapMyRun",   "Maps",       "Meduza",
      "Mobills",     "Outlook",    "PlayStore",   "Running",    "SalatTime",  "Shazam",     "SleepTracking",
      "SmokingLog",  "Spotify",    "Strava",      "Telegram",   "Translate",  "WashPost",   "Weather",
      "Qardio",      "HealthyRecipes", "Medisafe"};
  return v;
}

inline const std::vector<std::string>& low_volume_apps() {
  static const std::vector<std::string> v = {
      "20Min",        "ASB",     "Alarm",     "AthanPro",   "Battery",  "Camera",
      "DailyTracking", "Flashlight", "GooglePay", "HeartRate", "Music",    "NYT",
      "PhotoApp",     "PillReminder", "Reminders", "Sleep",   "Timer",    "WearCasts"};
  return v;
}

/// High-volume apps come in pairs sharing a size signature; the two members
/// differ only in intra-burst pacing (1 ms vs 100 ms). Signatures also set
/// one of five fixed burst counts. Low-volume apps all draw from one small
/// packet distribution and stay under 200 B per capture.
inline std::vector<Profile> deep_pack(bool include_high = true, bool include_low = true) {
  std::vector<Profile> out;
  const std::string dev = "HuaweiWatch2";
  if (include_high) {
    Rng rng(derive_seed(detail::kDesignSeed, 2));
    std::set<std::uint32_t> taken;
    const auto& apps = high_volume_apps();
    const std::size_t n_sig = apps.size() / 2;
    std::vector<std::vector<std::uint32_t>> sig;
    for (std::size_t s = 0; s < n_sig; ++s) sig.push_back(detail::distinct_sizes(rng, 3, 60, 1000, taken));
    for (std::size_t i = 0; i < apps.size(); ++i) {
      const std::size_t s = i / 2;
      const bool slow = i % 2 == 1;
      Profile p;
      p.name = apps[i];
      p.flavor = Flavor::Classic;
      p.labels = detail::make_labels(dev, apps[i], "Open");
      p.m2s_fraction = 0.45;
      p.m2s_sizes = detail::mix({{12, 3.0}, {sig[s][2], 0.5}});
      p.s2m_sizes = detail::mix({{17, 2.5}, {27, 1.5}, {sig[s][0], 1.0}, {sig[s][1], 0.7}});
      p.burst.bursts = {2.0 + 2.0 * static_cast<double>(s % 5), true};
      p.burst.packets = {8.0, false};
      p.burst.intra_gap_s = slow ? 0.1 : 0.001;
      p.burst.inter_gap_s = 2.0;
      p.meta_rate = 0.3;
      out.push_back(std::move(p));
    }
  }
  if (include_low) {
    const auto& apps = low_volume_apps();
    for (std::size_t i = 0; i < apps.size(); ++i) {
      const double jitter = 1.0 + 0.01 * static_cast<double>(i % 3);
      Profile p;
      p.name = apps[i];
      p.flavor = Flavor::Classic;
      p.labels = detail::make_labels(dev, apps[i], "Open");
      p.m2s_fraction = 0.5;
      p.m2s_sizes = detail::mix({{9, 1.0}, {12, 1.0}});
      p.s2m_sizes = detail::mix({{17, 2.0}, {23, 1.0}, {31, 1.0}});
      p.burst.bursts = {1.5, false};
      p.burst.packets = {3.0, false};
      p.burst.intra_gap_s = 0.01 * jitter;
      p.burst.inter_gap_s = 5.0 * jitter;
      p.meta_rate = 0.4;
      out.push_back(std::move(p));
    }
  }
  return out;
}

/// Six meal-logging actions of one app. Neighbouring actions share one of
/// their two signature sizes, so they are only partly separable.
inline std::vector<Profile> diabetes_pack() {
  static const std::vector<std::string> actions = {"AddCalorie", "AddCarbs", "AddFat",
                                                   "AddFood",    "AddProteins", "AddWater"};
  Rng rng(derive_seed(detail::kDesignSeed, 3));
  std::set<std::uint32_t> taken;
  const auto sizes = detail::distinct_sizes(rng, actions.size(), 80, 900, taken);
  std::vector<Profile> out;
  for (std::size_t a = 0; a < actions.size(); ++a) {
    Profile p;
    p.name = "DiabetesM_" + actions[a];
    p.flavor = Flavor::Classic;
    p.labels = detail::make_labels("HuaweiWatch2", "DiabetesM", p.name);
    p.m2s_fraction = 0.45;
    p.m2s_sizes = detail::mix({{12, 3.0}, {sizes[(a + 1) % sizes.size()], 0.4}});
    p.s2m_sizes = detail::mix({{17, 2.5}, {27, 1.5}, {sizes[a], 0.6}, {312, 1.0}});
    p.burst.bursts = {6.0, false};
    p.burst.packets = {7.0, false};
    p.burst.intra_gap_s = 0.01;
    p.burst.inter_gap_s = 1.5;
    p.meta_rate = 0.3;
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Day-long persistent adversary

inline const std::vector<std::string>& day_actions() {
  static const std::vector<std::string> v = {
      "DiabetesM_AddCalorie",      "DiabetesM_AddCarbs",        "DiabetesM_AddFat",
      "DiabetesM_AddGlucose",      "DiabetesM_AddInsulin",      "DiabetesM_AddProteins",
      "Endomondo_BrowseMap",       "Endomondo_Running",         "Foursquare_Coffees",
      "Foursquare_Leisure",        "Foursquare_NightLife",      "Foursquare_Restaurants",
      "Foursquare_Shopping",       "HealthyRecipes_SearchRecipe", "Lifesum_AddFood",
      "Lifesum_AddWater",          "PlayStore_Browse"};
  return v;
}

inline Profile background_profile() {
  Profile p;
  p.name = "NoApp";
  p.flavor = Flavor::Classic;
  p.labels = detail::make_labels("HuaweiWatch2", "NoApp", "NoApp");
  p.m2s_fraction = 0.5;
  p.m2s_sizes = detail::mix({{11, 2.0}, {19, 1.0}});
  p.s2m_sizes = detail::mix({{19, 2.0}, {27, 1.0}, {35, 1.0}});
  p.burst.bursts = {2.0, false};
  p.burst.packets = {3.0, false};
  p.burst.intra_gap_s = 0.02;
  p.burst.inter_gap_s = 8.0;
  p.meta_rate = 0.5;
  return p;
}

/// The 17 actions, one Close event per distinct app, and NoApp.
inline std::vector<Profile> day_pack() {
  std::vector<Profile> out;
  Rng rng(derive_seed(detail::kDesignSeed, 4));
  std::set<std::uint32_t> taken;
  std::set<std::string> apps;
  for (std::size_t i = 0; i < day_actions().size(); ++i) {
    const auto& name = day_actions()[i];
    const auto app = name.substr(0, name.find('_'));
    apps.insert(app);
    const auto sig = detail::distinct_sizes(rng, 3, 60, 1000, taken);
    Profile p;
    p.name = name;
    p.flavor = Flavor::Classic;
    p.labels = detail::make_labels("HuaweiWatch2", app, name);
    p.m2s_fraction = 0.45;
    p.m2s_sizes = detail::mix({{12, 3.0}, {sig[2], 0.5}});
    p.s2m_sizes = detail::mix({{17, 2.5}, {27, 1.5}, {sig[0], 1.0}, {sig[1], 0.7}});
    p.burst.bursts = {4.0 + static_cast<double>(i % 3), false};
    p.burst.packets = {8.0, false};
    p.burst.intra_gap_s = 0.01;
    p.burst.inter_gap_s = 1.5;
    p.meta_rate = 0.3;
    p.active_s = 10.0 + static_cast<double>((i * 7) % 11);  // 10..20 s
    out.push_back(std::move(p));
  }
  for (const auto& app : apps) {
    Profile p;
    p.name = app + "_Close";
    p.flavor = Flavor::Classic;
    p.labels = detail::make_labels("HuaweiWatch2", app, p.name);
    p.m2s_fraction = 0.5;
    p.m2s_sizes = detail::mix({{12, 1.0}});
    p.s2m_sizes = detail::mix({{17, 2.0}, {27, 1.0}, {48, 0.5}});
    p.burst.bursts = {1.0, false};
    p.burst.packets = {4.0, false};
    p.burst.intra_gap_s = 0.01;
    p.burst.inter_gap_s = 2.0;
    p.meta_rate = 0.3;
    p.active_s = 5.0;
    out.push_back(std::move(p));
  }
  out.push_back(background_profile());
  return out;
}

/// Labels that stand for "no user action" when scoring the day trace.
inline std::set<std::string> day_noise_labels() {
  std::set<std::string> s = {"NoApp"};
  for (const auto& p : day_pack()) {
    if (p.name.ends_with("_Close")) s.insert(p.name);
  }
  return s;
}

/// Two-level day: hours 8..21 weigh 8x the night hours.
inline DayPlan default_day_plan() {
  DayPlan plan;
  plan.hourly_weights.assign(24, 1.0);
  for (std::size_t h = 8; h <= 21; ++h) plan.hourly_weights[h] = 8.0;
  static const std::set<std::string> popular = {"DiabetesM_AddInsulin", "Endomondo_Running", "Foursquare_Restaurants",
                                                "Lifesum_AddWater", "PlayStore_Browse"};
  for (const auto& a : day_actions()) plan.catalog.push_back({a, popular.count(a) > 0});
  return plan;
}

inline std::map<std::string, Profile> by_name(const std::vector<Profile>& pack) {
  std::map<std::string, Profile> m;
  for (const auto& p : pack) m[p.name] = p;
  return m;
}

/// Copy of `pack` with every gap mean scaled by an independent factor in
/// [1 - rel, 1 + rel] and the given label overrides applied.
inline std::vector<Profile> perturb(std::vector<Profile> pack, double rel, std::uint64_t seed,
                                    const Labels& overrides = {}) {
  Rng rng(seed);
  for (auto& p : pack) {
    p.burst.intra_gap_s *= rng.uniform(1.0 - rel, 1.0 + rel);
    p.burst.inter_gap_s *= rng.uniform(1.0 - rel, 1.0 + rel);
    for (const auto& [k, v] : overrides) p.labels[k] = v;
  }
  return pack;
}

}  // namespace btlab::packs
