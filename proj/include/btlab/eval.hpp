#pragma once

// Evaluation: stratified splits and folds, the train/predict pipeline,
// cross-validation, per-class and macro scores, confusion matrices,
// metadata holdouts and simulated packet loss.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "btlab/forest.hpp"
#include "btlab/ingest.hpp"
#include "btlab/matrix.hpp"

namespace btlab {

struct ClassScore {
  std::string label;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;  // true occurrences
};

struct EvalReport {
  std::vector<std::string> labels;  // confusion axis order
  std::vector<ClassScore> classes;
  double macro_precision = 0;
  double macro_recall = 0;  // also the class-averaged accuracy
  double macro_f1 = 0;
  double accuracy = 0;  // fraction of correct predictions
  std::vector<std::vector<std::size_t>> confusion;  // [true][pred]
  std::vector<std::vector<double>> confusion_normalized;
};

/// Scores predictions against truth. The label axis is `labels` when given,
/// otherwise the sorted union of both vectors. Zero denominators give 0.
inline EvalReport score(const std::vector<std::string>& truth, const std::vector<std::string>& pred,
                        std::vector<std::string> labels = {}) {
  if (truth.size() != pred.size()) throw Error("score: label vectors differ in length");
  if (truth.empty()) throw Error("score: no labels");
  if (labels.empty()) {
    std::set<std::string> all(truth.begin(), truth.end());
    all.insert(pred.begin(), pred.end());
    labels.assign(all.begin(), all.end());
  }
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < labels.size(); ++i) pos[labels[i]] = i;
  for (const auto* v : {&truth, &pred}) {
    for (const auto& l : *v) {
      if (!pos.count(l)) throw Error("score: label '" + l + "' missing from label axis");
    }
  }

  EvalReport r;
  r.labels = labels;
  const std::size_t k = labels.size();
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = pos[truth[i]], p = pos[pred[i]];
    ++r.confusion[t][p];
    correct += t == p;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

  r.confusion_normalized.assign(k, std::vector<double>(k, 0.0));
  std::size_t supported = 0;
  for (std::size_t c = 0; c < k; ++c) {
    ClassScore s;
    s.label = labels[c];
    std::size_t tp = r.confusion[c][c], row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += r.confusion[c][j];
      col += r.confusion[j][c];
    }
    s.support = row;
    s.precision = col ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    s.recall = row ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    if (row) {
      for (std::size_t j = 0; j < k; ++j) {
        r.confusion_normalized[c][j] = static_cast<double>(r.confusion[c][j]) / static_cast<double>(row);
      }
      r.macro_precision += s.precision;
      r.macro_recall += s.recall;
      r.macro_f1 += s.f1;
      ++supported;
    }
    r.classes.push_back(s);
  }
  if (supported) {
    r.macro_precision /= static_cast<double>(supported);
    r.macro_recall /= static_cast<double>(supported);
    r.macro_f1 /= static_cast<double>(supported);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Splits

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per class: shuffle, put round(train_frac * n) in train (at least one
/// sample on each side). Indices come back sorted.
inline SplitIndices stratified_split_indices(const std::vector<std::string>& y, double train_frac,
                                             std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw Error("stratified_split: train_frac must be in (0,1)");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < y.size(); ++i) groups[y[i]].push_back(i);
  SplitIndices out;
  std::uint64_t cls = 0;
  for (auto& [label, idx] : groups) {
    if (idx.size() < 2) throw Error("stratified_split: class '" + label + "' has fewer than 2 samples");
    Rng rng(derive_seed(seed, cls++));
    rng.shuffle(idx.begin(), idx.end());
    auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(idx.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, std::string_view key, double train_frac,
                                                    std::uint64_t seed) {
  const auto s = stratified_split_indices(labels_for(ds, key), train_frac, seed);
  return {subset(ds, s.train), subset(ds, s.test)};
}

/// Fold id per sample. Each class is shuffled and dealt round-robin, the
/// dealing position carrying over between classes so fold sizes stay even.
inline std::vector<std::size_t> stratified_folds(const std::vector<std::string>& y, std::size_t k,
                                                 std::uint64_t seed) {
  if (k < 2) throw Error("stratified_folds: k must be >= 2");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < y.size(); ++i) groups[y[i]].push_back(i);
  std::vector<std::size_t> fold(y.size(), 0);
  std::size_t deal = 0;
  std::uint64_t cls = 0;
  for (auto& [_, idx] : groups) {
    Rng rng(derive_seed(seed, cls++));
    rng.shuffle(idx.begin(), idx.end());
    for (auto i : idx) fold[i] = deal++ % k;
  }
  return fold;
}

/// Partition on a metadata label: train gets samples whose `key` is in
/// `train_values`, test those in `test_values`.
inline std::pair<Dataset, Dataset> holdout_by_key(const Dataset& ds, std::string_view key,
                                                  const std::set<std::string>& train_values,
                                                  const std::set<std::string>& test_values) {
  for (const auto& v : train_values) {
    if (test_values.count(v)) throw Error("holdout_by_key: value '" + v + "' is in both train and test");
  }
  std::pair<Dataset, Dataset> out;
  for (const auto& s : ds.samples) {
    const auto& v = s.label(key);
    if (train_values.count(v)) out.first.samples.push_back(s);
    if (test_values.count(v)) out.second.samples.push_back(s);
  }
  if (out.first.empty() || out.second.empty()) throw Error("holdout_by_key: empty partition");
  return out;
}

/// Labels of `key` that occur in test but never in train.
inline std::vector<std::string> unseen_labels(const Dataset& train, const Dataset& test, std::string_view key) {
  std::set<std::string> seen;
  for (const auto& s : train.samples) seen.insert(s.label(key));
  std::set<std::string> out;
  for (const auto& s : test.samples) {
    if (!seen.count(s.label(key))) out.insert(s.label(key));
  }
  return {out.begin(), out.end()};
}

/// Drops each packet independently with probability `rate`.
inline TraceSample apply_packet_loss(const TraceSample& sample, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error("apply_packet_loss: rate must be in [0,1]");
  TraceSample out;
  out.labels = sample.labels;
  out.flavor = sample.flavor;
  Rng rng(seed);
  for (const auto& p : sample.packets) {
    if (!rng.bernoulli(rate)) out.packets.push_back(p);
  }
  return out;
}

inline Dataset apply_packet_loss(const Dataset& ds, double rate, std::uint64_t seed) {
  Dataset out;
  out.schema_note = ds.schema_note;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.samples.push_back(apply_packet_loss(ds.samples[i], rate, derive_seed(seed, i)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

struct PipelineConfig {
  FeatureSchema schema = FeatureSchema::Device32;
  ForestConfig forest;
  std::size_t rfe_keep = 10;  // 0 disables RFE
  double rfe_step = 0.5;
};

struct FittedModel {
  TrainedForest forest;
  std::size_t rfe_rounds = 0;
};

inline FittedModel fit(const Matrix& x, const std::vector<std::string>& y, const PipelineConfig& cfg) {
  if (cfg.rfe_keep == 0 || cfg.rfe_keep >= x.cols()) {
    return {train(x, y, cfg.forest), 1};
  }
  auto r = rfe(x, y, cfg.forest, cfg.rfe_keep, cfg.rfe_step);
  return {std::move(r.forest), r.rounds};
}

struct TrainTestResult {
  EvalReport report;
  FittedModel model;
};

inline TrainTestResult train_and_score(const Matrix& x_train, const std::vector<std::string>& y_train,
                                       const Matrix& x_test, const std::vector<std::string>& y_test,
                                       const PipelineConfig& cfg) {
  auto model = fit(x_train, y_train, cfg);
  std::set<std::string> axis(y_train.begin(), y_train.end());
  axis.insert(y_test.begin(), y_test.end());
  auto rep = score(y_test, predict(model.forest, x_test), {axis.begin(), axis.end()});
  return {std::move(rep), std::move(model)};
}

struct MeanStd {
  double mean = 0;
  double std = 0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
  if (v.empty()) return {};
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

struct CvReport {
  std::size_t folds = 0;
  std::vector<EvalReport> per_fold;
  EvalReport pooled;  // all held-out predictions scored together
  MeanStd macro_precision, macro_recall, macro_f1, accuracy;
  std::vector<double> importance;  // mean over folds, full feature width
  std::vector<std::string> warnings;
  std::vector<std::size_t> fold_of;  // fold id per sample
};

/// k-fold stratified cross-validation. RFE and training are fitted on the
/// training folds only. When a class has fewer than k samples, `strict`
/// raises; otherwise k drops to the smallest class count and a warning is
/// recorded.
inline CvReport cross_validate(const Matrix& x, const std::vector<std::string>& y, std::size_t k,
                               const PipelineConfig& cfg, std::uint64_t seed, bool strict = false) {
  if (x.rows() != y.size()) throw Error("cross_validate: row/label count mismatch");
  std::map<std::string, std::size_t> counts;
  for (const auto& l : y) ++counts[l];
  std::size_t smallest = y.size();
  std::string smallest_label;
  for (const auto& [l, c] : counts) {
    if (c < smallest) {
      smallest = c;
      smallest_label = l;
    }
  }
  CvReport rep;
  if (smallest < k) {
    const std::string msg = "class '" + smallest_label + "' has " + std::to_string(smallest) +
                            " samples, fewer than k=" + std::to_string(k);
    if (strict || smallest < 2) throw Error("cross_validate: " + msg);
    rep.warnings.push_back(msg + "; using k=" + std::to_string(smallest));
    k = smallest;
  }
  rep.folds = k;
  rep.fold_of = stratified_folds(y, k, seed);
  std::vector<std::string> axis;
  for (const auto& [l, _] : counts) axis.push_back(l);

  std::vector<std::string> pooled_pred(y.size());
  std::vector<double> mp, mr, mf, acc;
  rep.importance.assign(x.cols(), 0.0);
  for (std::size_t fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < y.size(); ++i) (rep.fold_of[i] == fold ? te : tr).push_back(i);
    std::vector<std::string> ytr, yte;
    for (auto i : tr) ytr.push_back(y[i]);
    for (auto i : te) yte.push_back(y[i]);
    PipelineConfig fold_cfg = cfg;
    fold_cfg.forest.seed = derive_seed(cfg.forest.seed, fold);
    const auto model = fit(x.select_rows(tr), ytr, fold_cfg);
    const auto xte = x.select_rows(te);
    const auto pred = predict(model.forest, xte);
    for (std::size_t j = 0; j < te.size(); ++j) pooled_pred[te[j]] = pred[j];
    auto fr = score(yte, pred, axis);
    mp.push_back(fr.macro_precision);
    mr.push_back(fr.macro_recall);
    mf.push_back(fr.macro_f1);
    acc.push_back(fr.accuracy);
    rep.per_fold.push_back(std::move(fr));
    const auto imp = feature_importance(model.forest);
    for (std::size_t j = 0; j < x.cols(); ++j) rep.importance[j] += imp.values[j] / static_cast<double>(k);
  }
  rep.pooled = score(y, pooled_pred, axis);
  rep.macro_precision = mean_std(mp);
  rep.macro_recall = mean_std(mr);
  rep.macro_f1 = mean_std(mf);
  rep.accuracy = mean_std(acc);
  return rep;
}

inline CvReport cross_validate(const Dataset& ds, std::string_view key, std::size_t k, const PipelineConfig& cfg,
                               std::uint64_t seed, bool strict = false) {
  return cross_validate(feature_matrix(ds, cfg.schema), labels_for(ds, key), k, cfg, seed, strict);
}

}  // namespace btlab
