#pragma once

// The batch experiments. Each run is a pure function of (name, config,
// seed) returning report files by name plus console lines; the CLI only
// writes them out.
//
// Configs are JSON objects. Keys not given fall back to per-experiment
// defaults; unknown keys or mistyped values are rejected. Every report
// begins with "# " provenance lines: tool version, experiment, seed and
// the FNV-1a digest of the resolved config.
//
// Seed derivation from the root seed s:
//   derive_seed(s, 1)  simulated datasets
//   derive_seed(s, 2)  fold / split assignment
//   derive_seed(s, 3)  forest
//   derive_seed(s, 4)  defenses
//   derive_seed(s, 5)  packet loss
//   derive_seed(s, 6)  pack perturbation, day trace

#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "btlab/defenses.hpp"
#include "btlab/eval.hpp"
#include "btlab/features.hpp"
#include "btlab/packs.hpp"
#include "btlab/stream.hpp"
#include "btlab/synth.hpp"

namespace btlab::experiments {

using json = nlohmann::json;

inline constexpr std::string_view kToolVersion = "btlab 1.0.0";

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct Output {
  std::map<std::string, std::string> files;
  std::vector<std::string> console;
};

inline const std::vector<std::string>& names() {
  static const std::vector<std::string> n = {"device-id", "chipset-id", "action-wide", "app-deep", "diabetes",
                                             "transfer",  "aging",      "loss-sweep",  "defense",  "stream"};
  return n;
}

// ---------------------------------------------------------------------------
// Config

namespace detail {

inline json learning_defaults(std::size_t n, std::size_t trees, std::size_t keep, std::string_view schema) {
  return {{"samples_per_class", n}, {"duration_s", 30.0}, {"folds", 10},     {"trees", trees},
          {"rfe_keep", keep},       {"rfe_step", 0.5},    {"threads", 1},    {"schema", schema},
          {"manifest", ""},         {"pack", ""}};
}

inline json thresholds_default() {
  json t = json::array();
  for (int k = 0; k <= 12; ++k) t.push_back(k / 20.0);
  t.push_back(1.0);
  return t;
}

inline bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return !(a.is_number_integer() && b.is_number_float());
  return a.type() == b.type();
}

}  // namespace detail

inline json default_config(std::string_view name) {
  using detail::learning_defaults;
  if (name == "device-id") return learning_defaults(25, 10, 10, "device32");
  if (name == "chipset-id") {
    auto j = learning_defaults(25, 10, 10, "device32");
    j["chipsets"] = packs::chipset_map();
    return j;
  }
  if (name == "action-wide") return learning_defaults(25, 30, 50, "action997");
  if (name == "app-deep") {
    auto j = learning_defaults(40, 30, 50, "action997");
    j["low_volume_bytes"] = 200.0;
    return j;
  }
  if (name == "diabetes") return learning_defaults(40, 30, 50, "action997");
  if (name == "transfer" || name == "aging") {
    auto j = learning_defaults(40, 30, 50, "action997");
    const bool t = name == "transfer";
    j["holdout_key"] = t ? "pair" : "day";
    j["train_values"] = json::array({t ? "P1" : "0"});
    j["test_values"] = json::array({t ? "P2" : "1"});
    j["perturb"] = 0.1;
    j["label_key"] = "app";
    return j;
  }
  if (name == "loss-sweep") {
    auto j = learning_defaults(40, 30, 50, "action997");
    j["folds"] = 5;
    j["rates"] = {0.0, 0.25, 0.5, 0.75, 1.0};
    j["repeats"] = 2;
    j["label_key"] = "app";
    return j;
  }
  if (name == "defense") {
    auto j = learning_defaults(40, 30, 50, "action997");
    j["folds"] = 5;
    j["defenses"] = {"pad", "delay_group", "add_dummies"};
    j["dummy_mean_s"] = 6.0;
    j["dummies"] = 300;
    j["dummy_count_uniform"] = false;
    j["label_key"] = "app";
    return j;
  }
  if (name == "stream") {
    auto j = learning_defaults(30, 30, 50, "action997");
    j.erase("folds");
    j["plan"] = "";
    j["window_s"] = 30.0;
    j["stride_s"] = 1.0;
    j["byte_threshold"] = 200.0;
    j["merge"] = true;
    j["thresholds"] = detail::thresholds_default();
    j["threshold"] = 0.25;
    return j;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

/// Defaults overlaid with `overrides`; rejects unknown keys and type changes.
inline json resolve_config(std::string_view name, const json& overrides) {
  auto cfg = default_config(name);
  if (overrides.is_null()) return cfg;
  if (!overrides.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [k, v] : overrides.items()) {
    if (!cfg.contains(k)) throw ConfigError("config: unknown key '" + k + "' for experiment " + std::string(name));
    if (!detail::same_kind(cfg[k], v)) {
      throw ConfigError("config: key '" + k + "' expects " + std::string(cfg[k].type_name()) + ", got " +
                        std::string(v.type_name()));
    }
    cfg[k] = v;
  }
  return cfg;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Digest of the canonical (sorted-key, compact) JSON dump.
inline std::string config_digest(const json& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(cfg.dump())));
  return buf;
}

inline std::string provenance_header(std::string_view name, std::uint64_t seed, const json& cfg) {
  return "# tool " + std::string(kToolVersion) + "\n# experiment " + std::string(name) + "\n# seed " +
         std::to_string(seed) + "\n# config fnv1a64:" + config_digest(cfg) + "\n";
}

// ---------------------------------------------------------------------------
// Report writers

inline std::string fmt(double v) {
  std::string s;
  btlab::detail::append_fixed6(s, v);
  return s;
}

inline std::string report_csv(const EvalReport& r) {
  std::string out = "label,precision,recall,f1,support\n";
  std::size_t total = 0;
  for (const auto& c : r.classes) {
    out += c.label + ',' + fmt(c.precision) + ',' + fmt(c.recall) + ',' + fmt(c.f1) + ',' +
           std::to_string(c.support) + '\n';
    total += c.support;
  }
  out += "macro," + fmt(r.macro_precision) + ',' + fmt(r.macro_recall) + ',' + fmt(r.macro_f1) + ',' +
         std::to_string(total) + '\n';
  return out;
}

/// Normalized per true label; header row is the label order.
inline std::string confusion_csv(const EvalReport& r) {
  std::string out = "true";
  for (const auto& l : r.labels) out += ',' + l;
  out += '\n';
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    out += r.labels[i];
    for (double v : r.confusion_normalized[i]) out += ',' + fmt(v);
    out += '\n';
  }
  return out;
}

/// Sorted by decreasing importance, ties by feature order.
inline std::string importance_csv(const std::vector<std::string>& names, const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] > values[b]; });
  std::string out = "rank,feature,importance\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    out += std::to_string(r + 1) + ',' + names[order[r]] + ',' + fmt(values[order[r]]) + '\n';
  }
  return out;
}

inline std::string cv_summary_csv(const CvReport& r) {
  std::string out = "metric,mean,std\n";
  auto row = [&](std::string_view n, const MeanStd& m) { out += std::string(n) + ',' + fmt(m.mean) + ',' + fmt(m.std) + '\n'; };
  row("macro_precision", r.macro_precision);
  row("macro_recall", r.macro_recall);
  row("macro_f1", r.macro_f1);
  row("accuracy", r.accuracy);
  out += "folds," + std::to_string(r.folds) + ",0.000000\n";
  return out;
}

inline std::string cost_table_csv(const std::vector<DefenseCostRow>& rows) {
  std::string out = "defense,accuracy_pct,delay_per_packet_s,extra_duration_s,padding_kb,dummy_kb,overhead_pct\n";
  for (const auto& r : rows) {
    out += r.defense + ',' + fmt(r.accuracy_pct) + ',' + fmt(r.delay_per_packet_s) + ',' + fmt(r.extra_duration_s) +
           ',' + fmt(r.padding_kb) + ',' + fmt(r.dummy_kb) + ',' + fmt(r.overhead_pct) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runner

/// Result of one cross-validated block, kept for callers that inspect it.
struct Block {
  std::string prefix;
  CvReport cv;
};

struct Run {
  std::string name;
  json cfg;
  std::uint64_t seed = 0;
  Output out;
  std::vector<Block> blocks;
  std::vector<DefenseCostRow> costs;
  std::vector<SweepRow> sweep;

  void file(const std::string& fname, const std::string& body) {
    out.files[fname] = provenance_header(name, seed, cfg) + body;
  }
  void say(std::string line) { out.console.push_back(std::move(line)); }

  FeatureSchema schema() const {
    const auto s = cfg.at("schema").get<std::string>();
    if (s == "device32") return FeatureSchema::Device32;
    if (s == "action997") return FeatureSchema::Action997;
    throw ConfigError("config: schema must be device32 or action997, got '" + s + "'");
  }

  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.schema = schema();
    p.forest.n_trees = cfg.at("trees").get<std::size_t>();
    p.forest.threads = cfg.at("threads").get<std::size_t>();
    p.forest.seed = derive_seed(seed, 3);
    p.rfe_keep = cfg.at("rfe_keep").get<std::size_t>();
    p.rfe_step = cfg.at("rfe_step").get<double>();
    return p;
  }

  std::vector<Profile> pack_or(std::vector<Profile> builtin) const {
    const auto path = cfg.at("pack").get<std::string>();
    if (path.empty()) return builtin;
    return parse_profile_pack(btlab::detail::read_file(path), path);
  }

  /// The manifest's dataset when configured, else a simulation of `pack`.
  Dataset dataset(const std::vector<Profile>& builtin) const {
    const auto manifest = cfg.at("manifest").get<std::string>();
    if (!manifest.empty()) return load_dataset(manifest);
    return generate_dataset(pack_or(builtin), cfg.at("samples_per_class").get<std::size_t>(),
                            cfg.at("duration_s").get<double>(), derive_seed(seed, 1));
  }

  std::size_t folds() const { return cfg.at("folds").get<std::size_t>(); }

  CvReport cross_validate_block(const std::string& prefix, const Dataset& ds, std::string_view key,
                                std::size_t k = 0) {
    if (ds.empty()) throw Error(prefix + ": empty dataset");
    const auto p = pipeline();
    auto cv = cross_validate(feature_matrix(ds, p.schema), labels_for(ds, key), k ? k : folds(), p,
                             derive_seed(seed, 2));
    file(prefix + "_report.csv", report_csv(cv.pooled));
    file(prefix + "_confusion.csv", confusion_csv(cv.pooled));
    file(prefix + "_importance.csv", importance_csv(feature_names(p.schema), cv.importance));
    file(prefix + "_summary.csv", cv_summary_csv(cv));
    for (const auto& w : cv.warnings) say(prefix + ": warning: " + w);
    say(prefix + ": classes=" + std::to_string(cv.pooled.labels.size()) + " samples=" + std::to_string(ds.size()) +
        " macro_f1=" + fmt(cv.macro_f1.mean) + " (std " + fmt(cv.macro_f1.std) + ") accuracy=" +
        fmt(cv.accuracy.mean));
    blocks.push_back({prefix, cv});
    return cv;
  }

  EvalReport holdout_block(const std::string& prefix, const Dataset& train_ds, const Dataset& test_ds,
                           std::string_view key) {
    const auto p = pipeline();
    auto r = train_and_score(feature_matrix(train_ds, p.schema), labels_for(train_ds, key),
                             feature_matrix(test_ds, p.schema), labels_for(test_ds, key), p);
    file(prefix + "_report.csv", report_csv(r.report));
    file(prefix + "_confusion.csv", confusion_csv(r.report));
    file(prefix + "_importance.csv",
         importance_csv(feature_names(p.schema), feature_importance(r.model.forest).values));
    say(prefix + ": train=" + std::to_string(train_ds.size()) + " test=" + std::to_string(test_ds.size()) +
        " macro_f1=" + fmt(r.report.macro_f1) + " accuracy=" + fmt(r.report.accuracy));
    const auto unseen = unseen_labels(train_ds, test_ds, key);
    if (!unseen.empty()) say(prefix + ": " + std::to_string(unseen.size()) + " test labels never seen in training");
    return r.report;
  }
};

namespace detail {

inline void per_flavor(Run& run, const Dataset& ds, std::string_view key, const std::string& stem) {
  const auto [classic, le] = split_by_flavor(ds);
  if (!classic.empty()) run.cross_validate_block(stem + "_classic", classic, key);
  if (!le.empty()) run.cross_validate_block(stem + "_le", le, key);
}

inline void device_id(Run& run) { per_flavor(run, run.dataset(packs::device_pack()), label::kDevice, "device-id"); }

inline void chipset_id(Run& run) {
  auto ds = run.dataset(packs::device_pack());
  const auto map = run.cfg.at("chipsets").get<std::map<std::string, std::string>>();
  for (auto& s : ds.samples) {
    const auto dev = s.label(label::kDevice);
    auto it = map.find(dev);
    if (it == map.end()) throw ConfigError("config: chipsets has no entry for device '" + dev + "'");
    s.labels["chipset"] = it->second;
  }
  per_flavor(run, ds, "chipset", "chipset-id");
}

inline void action_wide(Run& run) { per_flavor(run, run.dataset(packs::wide_pack()), label::kAction, "action-wide"); }

/// Splits classes into (high, low) volume by mean non-meta bytes per sample.
inline std::pair<Dataset, Dataset> volume_split(const Dataset& ds, std::string_view key, double threshold) {
  std::map<std::string, std::pair<double, std::size_t>> bytes;
  for (const auto& s : ds.samples) {
    auto& b = bytes[s.label(key)];
    b.first += static_cast<double>(payload_bytes(s));
    ++b.second;
  }
  std::vector<std::size_t> hi, lo;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& b = bytes[ds.samples[i].label(key)];
    (b.first / static_cast<double>(b.second) < threshold ? lo : hi).push_back(i);
  }
  return {subset(ds, hi), subset(ds, lo)};
}

inline void app_deep(Run& run) {
  const auto ds = run.dataset(packs::deep_pack());
  const auto [hi, lo] = volume_split(ds, label::kApp, run.cfg.at("low_volume_bytes").get<double>());
  if (!hi.empty()) run.cross_validate_block("app-deep_high", hi, label::kApp);
  if (!lo.empty()) run.cross_validate_block("app-deep_low", lo, label::kApp);
  run.cross_validate_block("app-deep_all", ds, label::kApp);
}

inline void diabetes(Run& run) { run.cross_validate_block("diabetes", run.dataset(packs::diabetes_pack()), label::kAction); }

/// Transfer and aging: train on one metadata value, test on another. The
/// simulated variant draws the test partition from a perturbed pack.
inline void holdout(Run& run) {
  const auto key = run.cfg.at("holdout_key").get<std::string>();
  const auto train_v = run.cfg.at("train_values").get<std::vector<std::string>>();
  const auto test_v = run.cfg.at("test_values").get<std::vector<std::string>>();
  if (train_v.empty() || test_v.empty()) throw ConfigError("config: train_values and test_values must be non-empty");
  Dataset ds;
  if (!run.cfg.at("manifest").get<std::string>().empty()) {
    ds = run.dataset({});
  } else {
    const auto pack = run.pack_or(packs::deep_pack(true, false));
    const auto n = run.cfg.at("samples_per_class").get<std::size_t>();
    const auto dur = run.cfg.at("duration_s").get<double>();
    const auto rel = run.cfg.at("perturb").get<double>();
    std::vector<std::string> values = train_v;
    values.insert(values.end(), test_v.begin(), test_v.end());
    for (std::size_t v = 0; v < values.size(); ++v) {
      const Labels tag = {{key, values[v]}};
      auto variant = v == 0 ? packs::perturb(pack, 0.0, 0, tag)
                            : packs::perturb(pack, rel, derive_seed(derive_seed(run.seed, 6, v), fnv1a64(key)), tag);
      auto part = generate_dataset(variant, n, dur, derive_seed(run.seed, 1, v));
      ds.samples.insert(ds.samples.end(), part.samples.begin(), part.samples.end());
    }
  }
  const std::set<std::string> tr(train_v.begin(), train_v.end()), te(test_v.begin(), test_v.end());
  const auto [train_ds, test_ds] = holdout_by_key(ds, key, tr, te);
  const auto label_key = run.cfg.at("label_key").get<std::string>();
  run.cross_validate_block(run.name + "_within", train_ds, label_key);
  run.holdout_block(run.name + "_cross", train_ds, test_ds, label_key);
}

inline void loss_sweep(Run& run) {
  const auto ds = run.dataset(packs::deep_pack(true, false));
  const auto rates = run.cfg.at("rates").get<std::vector<double>>();
  const auto repeats = run.cfg.at("repeats").get<std::size_t>();
  const auto key = run.cfg.at("label_key").get<std::string>();
  if (repeats < 1) throw ConfigError("config: repeats must be >= 1");
  std::string table = "rate,accuracy_mean,accuracy_std,macro_f1_mean,macro_f1_std\n";
  for (std::size_t r = 0; r < rates.size(); ++r) {
    std::vector<double> acc, f1;
    for (std::size_t k = 0; k < repeats; ++k) {
      const auto lossy = apply_packet_loss(ds, rates[r], derive_seed(run.seed, 5, r * repeats + k));
      const auto p = run.pipeline();
      const auto cv = cross_validate(feature_matrix(lossy, p.schema), labels_for(lossy, key), run.folds(), p,
                                     derive_seed(run.seed, 2, k));
      acc.push_back(cv.pooled.accuracy);
      f1.push_back(cv.pooled.macro_f1);
      if (r == 0 && k == 0) {
        run.blocks.push_back({"loss-sweep_rate0", cv});
        run.file("loss-sweep_report.csv", report_csv(cv.pooled));
        run.file("loss-sweep_confusion.csv", confusion_csv(cv.pooled));
        run.file("loss-sweep_importance.csv", importance_csv(feature_names(p.schema), cv.importance));
      }
    }
    const auto a = mean_std(acc), f = mean_std(f1);
    table += fmt(rates[r]) + ',' + fmt(a.mean) + ',' + fmt(a.std) + ',' + fmt(f.mean) + ',' + fmt(f.std) + '\n';
    run.say("loss-sweep: rate=" + fmt(rates[r]) + " accuracy=" + fmt(a.mean) + " macro_f1=" + fmt(f.mean));
  }
  run.file("loss-sweep.csv", table);
}

inline Dataset defend(const Dataset& ds, const std::string& name, const Run& run, std::vector<DefenseCost>& costs) {
  Dataset out;
  out.schema_note = ds.schema_note;
  costs.clear();
  const auto src = SizeSource::from_dataset(ds);
  DummyConfig dc;
  dc.mean_s = run.cfg.at("dummy_mean_s").get<double>();
  dc.n_dummies = run.cfg.at("dummies").get<std::size_t>();
  dc.uniform_count = run.cfg.at("dummy_count_uniform").get<bool>();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Defended d;
    if (name == "pad") {
      d = pad(ds.samples[i]);
    } else if (name == "delay_group") {
      d = delay_group(ds.samples[i]);
    } else if (name == "add_dummies") {
      d = add_dummies(ds.samples[i], dc, src, derive_seed(run.seed, 4, i));
    } else {
      throw ConfigError("config: unknown defense '" + name + "'");
    }
    out.samples.push_back(std::move(d.sample));
    costs.push_back(d.cost);
  }
  return out;
}

inline void defense(Run& run) {
  const auto ds = run.dataset(packs::deep_pack(true, false));
  const auto key = run.cfg.at("label_key").get<std::string>();
  const auto base = run.cross_validate_block("defense_none", ds, key);
  std::vector<DefenseCost> none(ds.size());
  run.costs.push_back(defense_cost_summary("none", ds, ds, none, base.pooled.accuracy));
  for (const auto& name : run.cfg.at("defenses").get<std::vector<std::string>>()) {
    std::vector<DefenseCost> costs;
    const auto defended = defend(ds, name, run, costs);
    const auto cv = run.cross_validate_block("defense_" + name, defended, key);
    run.costs.push_back(defense_cost_summary(name, ds, defended, costs, cv.pooled.accuracy));
  }
  run.file("defense_costs.csv", cost_table_csv(run.costs));
}

inline void stream(Run& run) {
  const auto pack = run.pack_or(packs::day_pack());
  const auto plan_path = run.cfg.at("plan").get<std::string>();
  const auto plan =
      plan_path.empty() ? packs::default_day_plan() : parse_day_plan(btlab::detail::read_file(plan_path), plan_path);
  const auto profiles = packs::by_name(pack);
  const Profile* background = nullptr;
  if (!plan.background.empty()) {
    auto it = profiles.find(plan.background);
    if (it == profiles.end()) throw SchemaError("day plan: no background profile '" + plan.background + "'");
    background = &it->second;
  }

  // Training captures: every profile, with the background underneath.
  const auto n = run.cfg.at("samples_per_class").get<std::size_t>();
  const auto dur = run.cfg.at("duration_s").get<double>();
  Dataset train_ds;
  for (std::size_t p = 0; p < pack.size(); ++p) {
    const Profile* bg = background && pack[p].name != background->name ? background : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      auto s = generate_capture(pack[p], bg, dur, derive_seed(derive_seed(run.seed, 1), p, i));
      s.labels[std::string(label::kAction)] = pack[p].name;
      train_ds.samples.push_back(std::move(s));
    }
  }
  std::set<std::string> noise;
  for (const auto& p : pack) {
    if (p.name == plan.background || p.name.ends_with("_Close")) noise.insert(p.name);
  }

  const auto pc = run.pipeline();
  const auto x = feature_matrix(train_ds, pc.schema);
  const auto y = labels_for(train_ds, label::kAction);
  const auto split = stratified_split_indices(y, 0.8, derive_seed(run.seed, 2));
  {
    std::vector<std::string> ytr, yte;
    for (auto i : split.train) ytr.push_back(y[i]);
    for (auto i : split.test) yte.push_back(y[i]);
    const auto r = train_and_score(x.select_rows(split.train), ytr, x.select_rows(split.test), yte, pc);
    run.file("stream_training_report.csv", report_csv(r.report));
    run.file("stream_training_confusion.csv", confusion_csv(r.report));
    run.say("stream: training split macro_f1=" + fmt(r.report.macro_f1));
  }
  const auto model = fit(x, y, pc);
  run.file("stream_importance.csv", importance_csv(feature_names(pc.schema), feature_importance(model.forest).values));

  const auto day = generate_day(plan, profiles, derive_seed(run.seed, 6));
  Segmenter seg;
  seg.window_length = run.cfg.at("window_s").get<double>();
  seg.stride = run.cfg.at("stride_s").get<double>();
  seg.byte_threshold = run.cfg.at("byte_threshold").get<double>();
  seg.merge = run.cfg.at("merge").get<bool>();
  const auto spans = find_active_windows(day.trace, seg);
  const auto scores = score_segments(day.trace, spans, model.forest, pc.schema);
  run.sweep = threshold_sweep(scores, day.truth, run.cfg.at("thresholds").get<std::vector<double>>(), noise);
  const double t = run.cfg.at("threshold").get<double>();
  if (t < 0 || t > 1) throw ConfigError("config: threshold must be in [0,1]");
  run.file("stream_sweep.csv", write_sweep_csv(run.sweep));
  run.file("stream_predictions.csv", write_predictions_csv(apply_threshold(scores, t)));
  run.file("stream_truth.csv", write_intervals_csv(day.truth));
  run.say("stream: packets=" + std::to_string(day.trace.packets.size()) + " actions=" +
          std::to_string(day.truth.size()) + " segments=" + std::to_string(spans.size()));
  for (const auto& r : run.sweep) {
    run.say("stream: T=" + fmt(r.threshold) + " precision=" + fmt(r.score.precision) + " recall=" +
            fmt(r.score.recall) + " f1=" + fmt(r.score.f1));
  }
}

}  // namespace detail

/// Runs `name` and keeps the intermediate results for inspection.
inline Run run_detailed(std::string_view name, const json& overrides, std::uint64_t seed) {
  Run run{std::string(name), resolve_config(name, overrides), seed, {}, {}, {}, {}};
  static const std::map<std::string, std::function<void(Run&)>, std::less<>> table = {
      {"device-id", detail::device_id}, {"chipset-id", detail::chipset_id}, {"action-wide", detail::action_wide},
      {"app-deep", detail::app_deep},   {"diabetes", detail::diabetes},     {"transfer", detail::holdout},
      {"aging", detail::holdout},       {"loss-sweep", detail::loss_sweep}, {"defense", detail::defense},
      {"stream", detail::stream}};
  table.find(name)->second(run);
  return run;
}

inline Output run(std::string_view name, const json& overrides, std::uint64_t seed) {
  return run_detailed(name, overrides, seed).out;
}

}  // namespace btlab::experiments
