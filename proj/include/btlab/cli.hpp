#pragma once

// Command-line front end. run_cli() is the whole program minus process
// plumbing so it can be driven in-process.
//
//   simulate    profile pack (+ day plan) -> trace CSVs + manifest
//   extract     manifest -> feature CSV
//   train       manifest -> saved forest
//   predict     saved forest + manifest -> predictions CSV
//   defend      manifest -> defended traces + manifest + per-sample costs
//   experiment  named experiment -> report files
//
// Common flags: --seed, --out, --config. For `experiment` the config file
// holds experiment parameters; elsewhere its keys are long option names
// and act as defaults that explicit flags override.
//
// Failures print one line "error: <category>: <message>" on stderr and
// return 1 (2 for usage errors).

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "btlab/defenses.hpp"
#include "btlab/eval.hpp"
#include "btlab/experiments.hpp"
#include "btlab/features.hpp"
#include "btlab/forest.hpp"
#include "btlab/ingest.hpp"
#include "btlab/packs.hpp"
#include "btlab/synth.hpp"

namespace btlab::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

class UsageError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void write_file(const fs::path& path, std::string_view body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw Error("write failed: " + path.string());
}

inline std::string file_stem(std::string_view name) {
  std::string s(name);
  for (auto& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

inline std::string numbered(std::string_view stem, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%04zu.csv", i);
  return std::string(stem) + buf;
}

/// Option registry that also accepts values from a JSON config object.
class Binder {
 public:
  explicit Binder(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* opt(const std::string& name, T& var, const std::string& desc, const std::string& alias = "") {
    auto* o = app_->add_option((alias.empty() ? "" : "-" + alias + ",") + "--" + name, var, desc);
    setters_[name] = [&var, o](const json& j) {
      if (o->count() == 0) var = j.get<T>();
    };
    return o;
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& desc) {
    auto* o = app_->add_flag("--" + name, var, desc);
    setters_[name] = [&var, o](const json& j) {
      if (o->count() == 0) var = j.get<bool>();
    };
    return o;
  }

  void apply(const std::string& path) const {
    if (path.empty()) return;
    const auto j = btlab::detail::parse_json_text(btlab::detail::read_file(path), path);
    if (!j.is_object()) throw experiments::ConfigError(path + ": expected a JSON object");
    for (const auto& [k, v] : j.items()) {
      auto it = setters_.find(k);
      if (it == setters_.end() || k == "config") {
        throw experiments::ConfigError(path + ": unknown option '" + k + "' for " + app_->get_name());
      }
      try {
        it->second(v);
      } catch (const json::exception&) {
        throw experiments::ConfigError(path + ": option '" + k + "' has the wrong type");
      }
    }
  }

 private:
  CLI::App* app_;
  std::map<std::string, std::function<void(const json&)>> setters_;
};

struct Common {
  std::uint64_t seed = 1;
  std::string out;
  std::string config;
};

inline void add_common(Binder& b, Common& c) {
  b.opt("seed", c.seed, "root seed");
  b.opt("out", c.out, "output path (required)");
  b.opt("config", c.config, "JSON config file");
}

/// Required values may come from the config file, so they are checked
/// after it is applied rather than by the parser.
inline void need(const std::string& value, std::string_view flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

inline std::vector<Profile> builtin_pack(const std::string& name) {
  if (name == "device") return packs::device_pack();
  if (name == "wide") return packs::wide_pack();
  if (name == "deep") return packs::deep_pack();
  if (name == "deep-high") return packs::deep_pack(true, false);
  if (name == "deep-low") return packs::deep_pack(false, true);
  if (name == "diabetes") return packs::diabetes_pack();
  if (name == "day") return packs::day_pack();
  return btlab::parse_profile_pack(btlab::detail::read_file(name), name);
}

inline FeatureSchema parse_schema(const std::string& s) {
  if (s == "device32") return FeatureSchema::Device32;
  if (s == "action997") return FeatureSchema::Action997;
  throw UsageError("schema must be device32 or action997, got '" + s + "'");
}

inline std::string category(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return "parse";
  if (dynamic_cast<const LoadError*>(&e)) return "load";
  if (dynamic_cast<const SchemaError*>(&e)) return "schema";
  if (dynamic_cast<const experiments::ConfigError*>(&e)) return "config";
  if (dynamic_cast<const TrainingError*>(&e)) return "training";
  if (dynamic_cast<const UsageError*>(&e)) return "usage";
  if (dynamic_cast<const Error*>(&e)) return "runtime";
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return "io";
  return "internal";
}

inline std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bluetooth traffic-analysis lab", "btlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(experiments::kToolVersion));

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate traces and a manifest from a profile pack");
  detail::Binder sim_b(sim);
  detail::Common sim_c;
  std::string sim_pack = "device", sim_plan;
  std::size_t sim_n = 25;
  double sim_duration = 30.0;
  bool sim_export = false;
  detail::add_common(sim_b, sim_c);
  sim_b.opt("pack", sim_pack, "built-in pack (device, wide, deep, deep-high, deep-low, diabetes, day) or JSON file");
  sim_b.opt("plan", sim_plan, "day plan: 'default' or a JSON file; switches to day-trace mode");
  sim_b.opt("n", sim_n, "captures per profile", "n");
  sim_b.opt("duration", sim_duration, "capture length in seconds");
  sim_b.flag("export-pack", sim_export, "also write the pack (and plan) as JSON");

  // extract
  auto* ext = app.add_subcommand("extract", "compute feature vectors for a manifest");
  detail::Binder ext_b(ext);
  detail::Common ext_c;
  std::string ext_manifest, ext_schema = "device32";
  detail::add_common(ext_b, ext_c);
  ext_b.opt("manifest", ext_manifest, "manifest CSV (required)");
  ext_b.opt("schema", ext_schema, "device32 or action997");

  // train
  auto* trn = app.add_subcommand("train", "fit a forest (with RFE) on a manifest");
  detail::Binder trn_b(trn);
  detail::Common trn_c;
  std::string trn_manifest, trn_key = "device", trn_schema = "device32";
  std::size_t trn_trees = 10, trn_keep = 10, trn_threads = 1;
  double trn_step = 0.5;
  detail::add_common(trn_b, trn_c);
  trn_b.opt("manifest", trn_manifest, "manifest CSV (required)");
  trn_b.opt("key", trn_key, "label column to learn");
  trn_b.opt("schema", trn_schema, "device32 or action997");
  trn_b.opt("trees", trn_trees, "number of trees");
  trn_b.opt("rfe-keep", trn_keep, "features kept by RFE (0 disables)");
  trn_b.opt("rfe-step", trn_step, "fraction eliminated per RFE round");
  trn_b.opt("threads", trn_threads, "worker threads");

  // predict
  auto* prd = app.add_subcommand("predict", "label traces with a saved forest");
  detail::Binder prd_b(prd);
  detail::Common prd_c;
  std::string prd_model, prd_manifest, prd_key;
  detail::add_common(prd_b, prd_c);
  prd_b.opt("model", prd_model, "saved forest (required)");
  prd_b.opt("manifest", prd_manifest, "manifest CSV (required)");
  prd_b.opt("key", prd_key, "label column to score against (optional)");

  // defend
  auto* dfd = app.add_subcommand("defend", "apply a defense to every trace of a manifest");
  detail::Binder dfd_b(dfd);
  detail::Common dfd_c;
  std::string dfd_manifest, dfd_defense = "pad";
  double dfd_mean = 6.0;
  std::size_t dfd_n = 300;
  bool dfd_uniform = false;
  detail::add_common(dfd_b, dfd_c);
  dfd_b.opt("manifest", dfd_manifest, "manifest CSV (required)");
  dfd_b.opt("defense", dfd_defense, "pad, delay_group or add_dummies");
  dfd_b.opt("dummy-mean", dfd_mean, "mean of the Rayleigh offset in seconds");
  dfd_b.opt("dummies", dfd_n, "dummy packets per trace");
  dfd_b.flag("uniform-count", dfd_uniform, "draw the dummy count uniformly from [1, dummies]");

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a named experiment");
  detail::Common exp_c;
  std::string exp_name;
  exp->add_option("name", exp_name, "experiment name")->required()->check(CLI::IsMember(experiments::names()));
  exp->add_option("--seed", exp_c.seed, "root seed");
  exp->add_option("--out", exp_c.out, "output directory")->required();
  exp->add_option("--config", exp_c.config, "JSON experiment parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << detail::one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*sim) {
      sim_b.apply(sim_c.config);
      detail::need(sim_c.out, "--out");
      const fs::path root = sim_c.out;
      if (!sim_plan.empty()) {
        const auto pack = sim->count("--pack") || sim_pack != "device" ? detail::builtin_pack(sim_pack)
                                                                        : packs::day_pack();
        const auto plan = sim_plan == "default" ? packs::default_day_plan()
                                                : parse_day_plan(btlab::detail::read_file(sim_plan), sim_plan);
        const auto day = generate_day(plan, packs::by_name(pack), sim_c.seed);
        detail::write_file(root / "day_trace.csv", write_trace_csv(day.trace));
        detail::write_file(root / "day_truth.csv", write_intervals_csv(day.truth));
        if (sim_export) {
          detail::write_file(root / "pack.json", write_profile_pack(pack));
          detail::write_file(root / "plan.json", write_day_plan(plan));
        }
        out << "simulate: packets=" << day.trace.packets.size() << " actions=" << day.truth.size() << "\n";
        return 0;
      }
      const auto pack = detail::builtin_pack(sim_pack);
      const auto ds = generate_dataset(pack, sim_n, sim_duration, sim_c.seed);
      Manifest m;
      for (std::size_t p = 0; p < pack.size(); ++p) {
        const auto stem = detail::file_stem(pack[p].name);
        for (std::size_t i = 0; i < sim_n; ++i) {
          const auto& s = ds.samples[p * sim_n + i];
          const auto rel = "traces/" + detail::numbered(stem, i);
          detail::write_file(root / rel, write_trace_csv(s));
          m.push_back(manifest_row_for(s, rel));
        }
      }
      detail::write_file(root / "manifest.csv", write_manifest_csv(m));
      if (sim_export) detail::write_file(root / "pack.json", write_profile_pack(pack));
      out << "simulate: profiles=" << pack.size() << " traces=" << m.size() << "\n";
      return 0;
    }

    if (*ext) {
      ext_b.apply(ext_c.config);
      detail::need(ext_c.out, "--out");
      detail::need(ext_manifest, "--manifest");
      const auto schema = detail::parse_schema(ext_schema);
      const auto manifest = parse_manifest_csv(btlab::detail::read_file(ext_manifest));
      const auto ds = load_dataset(manifest, fs::path(ext_manifest).parent_path());
      std::string csv = "file";
      for (const auto& n : feature_names(schema)) csv += ',' + n;
      csv += '\n';
      for (std::size_t i = 0; i < ds.size(); ++i) {
        csv += manifest[i].file;
        for (double v : extract(ds.samples[i], schema).values) {
          csv += ',';
          btlab::detail::append_fixed6(csv, v);
        }
        csv += '\n';
      }
      detail::write_file(ext_c.out, csv);
      out << "extract: samples=" << ds.size() << " features=" << schema_size(schema) << "\n";
      return 0;
    }

    if (*trn) {
      trn_b.apply(trn_c.config);
      detail::need(trn_c.out, "--out");
      detail::need(trn_manifest, "--manifest");
      PipelineConfig cfg;
      cfg.schema = detail::parse_schema(trn_schema);
      cfg.forest.n_trees = trn_trees;
      cfg.forest.threads = trn_threads;
      cfg.forest.seed = trn_c.seed;
      cfg.rfe_keep = trn_keep;
      cfg.rfe_step = trn_step;
      const auto ds = load_dataset(trn_manifest);
      const auto y = labels_for(ds, trn_key);
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i].empty()) throw UsageError("manifest row " + std::to_string(i + 1) + " has no '" + trn_key + "' label");
      }
      const auto model = fit(feature_matrix(ds, cfg.schema), y, cfg);
      detail::write_file(trn_c.out, save_to_string(model.forest));
      out << "train: samples=" << ds.size() << " classes=" << model.forest.labels.size()
          << " features=" << std::count(model.forest.feature_mask.begin(), model.forest.feature_mask.end(), true)
          << " rfe_rounds=" << model.rfe_rounds << "\n";
      return 0;
    }

    if (*prd) {
      prd_b.apply(prd_c.config);
      detail::need(prd_c.out, "--out");
      detail::need(prd_model, "--model");
      detail::need(prd_manifest, "--manifest");
      const auto forest = load_forest_from_string(btlab::detail::read_file(prd_model));
      const auto schema =
          forest.n_features() == kDevice32Size ? FeatureSchema::Device32 : FeatureSchema::Action997;
      if (forest.n_features() != schema_size(schema)) {
        throw Error("model has " + std::to_string(forest.n_features()) + " features; no known schema matches");
      }
      const auto manifest = parse_manifest_csv(btlab::detail::read_file(prd_manifest));
      const auto ds = load_dataset(manifest, fs::path(prd_manifest).parent_path());
      std::string csv = "file,label,confidence\n";
      std::vector<std::string> pred;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto p = predict_proba(forest, extract(ds.samples[i], schema).values);
        const auto k = argmax(p);
        pred.push_back(forest.labels[k]);
        csv += manifest[i].file + ',' + forest.labels[k] + ',';
        btlab::detail::append_fixed6(csv, p[k]);
        csv += '\n';
      }
      detail::write_file(prd_c.out, csv);
      out << "predict: samples=" << ds.size() << "\n";
      if (!prd_key.empty() && !ds.empty()) {
        const auto r = score(labels_for(ds, prd_key), pred);
        out << "predict: macro_f1=" << experiments::fmt(r.macro_f1) << " accuracy=" << experiments::fmt(r.accuracy)
            << "\n";
      }
      return 0;
    }

    if (*dfd) {
      dfd_b.apply(dfd_c.config);
      detail::need(dfd_c.out, "--out");
      detail::need(dfd_manifest, "--manifest");
      const auto manifest = parse_manifest_csv(btlab::detail::read_file(dfd_manifest));
      const auto ds = load_dataset(manifest, fs::path(dfd_manifest).parent_path());
      const fs::path root = dfd_c.out;
      const auto src = SizeSource::from_dataset(ds);
      DummyConfig dc{dfd_mean, dfd_n, dfd_uniform};
      Dataset after;
      std::vector<DefenseCost> costs;
      std::string cost_csv = "file,delay_per_packet_s,extra_duration_s,padding_bytes,dummy_bytes,overhead_pct\n";
      for (std::size_t i = 0; i < ds.size(); ++i) {
        Defended d;
        if (dfd_defense == "pad") {
          d = pad(ds.samples[i]);
        } else if (dfd_defense == "delay_group") {
          d = delay_group(ds.samples[i]);
        } else if (dfd_defense == "add_dummies") {
          d = add_dummies(ds.samples[i], dc, src, derive_seed(dfd_c.seed, i));
        } else {
          throw UsageError("defense must be pad, delay_group or add_dummies, got '" + dfd_defense + "'");
        }
        const auto& row = manifest[i];
        detail::write_file(root / row.file, write_trace_csv(d.sample));
        cost_csv += row.file;
        for (double v : {d.cost.mean_delay_per_packet, d.cost.extra_duration, d.cost.padding_bytes,
                         d.cost.dummy_bytes, d.cost.overhead_pct}) {
          cost_csv += ',';
          btlab::detail::append_fixed6(cost_csv, v);
        }
        cost_csv += '\n';
        after.samples.push_back(std::move(d.sample));
        costs.push_back(d.cost);
      }
      detail::write_file(root / "manifest.csv", write_manifest_csv(manifest));
      detail::write_file(root / "costs.csv", cost_csv);
      const auto row = defense_cost_summary(dfd_defense, ds, after, costs, 0.0);
      out << "defend: " << dfd_defense << " samples=" << ds.size()
          << " delay_per_packet_s=" << experiments::fmt(row.delay_per_packet_s)
          << " padding_kb=" << experiments::fmt(row.padding_kb) << " dummy_kb=" << experiments::fmt(row.dummy_kb)
          << " overhead_pct=" << experiments::fmt(row.overhead_pct) << "\n";
      return 0;
    }

    if (*exp) {
      json overrides;
      if (!exp_c.config.empty()) {
        overrides = btlab::detail::parse_json_text(btlab::detail::read_file(exp_c.config), exp_c.config);
      }
      const auto result = experiments::run(exp_name, overrides, exp_c.seed);
      for (const auto& [name, body] : result.files) detail::write_file(fs::path(exp_c.out) / name, body);
      for (const auto& line : result.console) out << line << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << detail::category(e) << ": " << detail::one_line(e.what()) << "\n";
    return dynamic_cast<const UsageError*>(&e) ? 2 : 1;
  }
  return 0;
}

}  // namespace btlab::cli
