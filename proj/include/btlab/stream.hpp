#pragma once

// Long-capture attack: locate activity with a sliding byte-count window,
// classify each active segment, emit a label only above a confidence
// threshold, and score predictions against ground-truth intervals by
// same-label overlap.

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "btlab/features.hpp"
#include "btlab/forest.hpp"
#include "btlab/synth.hpp"

namespace btlab {

inline constexpr std::string_view kNoAction = "NoAction";

/// Window w(t) covers [t - L/2, t + L/2) for grid times t = 0, stride,
/// 2*stride, ... A grid time is active when the non-meta bytes inside its
/// window exceed the threshold.
struct Segmenter {
  double window_length = 30.0;
  double stride = 1.0;
  double byte_threshold = 200.0;
  bool merge = true;  // false: one segment per active grid time

  void validate() const {
    if (!(window_length > 0)) throw Error("segmenter: window_length must be > 0");
    if (!(stride > 0) || stride > window_length) throw Error("segmenter: stride must be in (0, window_length]");
    if (byte_threshold < 0) throw Error("segmenter: byte_threshold must be >= 0");
  }
};

struct TimeSpan {
  double start = 0;
  double end = 0;

  friend bool operator==(const TimeSpan&, const TimeSpan&) = default;
};

/// Active grid times, as indices k (t = k * stride).
inline std::vector<std::size_t> active_grid_points(const TraceSample& trace, const Segmenter& seg) {
  seg.validate();
  std::vector<std::size_t> out;
  const auto& pk = trace.packets;
  if (pk.empty()) return out;
  const double half = seg.window_length / 2.0;
  const auto n_points = static_cast<std::size_t>(std::floor((pk.back().timestamp + half) / seg.stride)) + 1;
  std::size_t lo = 0, hi = 0;
  double bytes = 0;
  for (std::size_t k = 0; k < n_points; ++k) {
    const double t = static_cast<double>(k) * seg.stride;
    while (hi < pk.size() && pk[hi].timestamp < t + half) {
      if (!pk[hi].is_meta) bytes += pk[hi].size;
      ++hi;
    }
    while (lo < hi && pk[lo].timestamp < t - half) {
      if (!pk[lo].is_meta) bytes -= pk[lo].size;
      ++lo;
    }
    if (bytes > seg.byte_threshold) out.push_back(k);
  }
  return out;
}

/// Runs of consecutive active grid times, each as [first, last + stride).
inline std::vector<TimeSpan> find_active_windows(const TraceSample& trace, const Segmenter& seg) {
  const auto pts = active_grid_points(trace, seg);
  std::vector<TimeSpan> out;
  for (std::size_t i = 0; i < pts.size();) {
    std::size_t j = i;
    if (seg.merge) {
      while (j + 1 < pts.size() && pts[j + 1] == pts[j] + 1) ++j;
    }
    out.push_back({static_cast<double>(pts[i]) * seg.stride, static_cast<double>(pts[j] + 1) * seg.stride});
    i = j + 1;
  }
  return out;
}

/// Packets with timestamp in [span.start, span.end), re-zeroed to span.start.
inline TraceSample slice(const TraceSample& trace, const TimeSpan& span) {
  TraceSample s;
  s.flavor = trace.flavor;
  s.labels = trace.labels;
  auto cmp = [](const PacketRecord& p, double t) { return p.timestamp < t; };
  auto first = std::lower_bound(trace.packets.begin(), trace.packets.end(), span.start, cmp);
  auto last = std::lower_bound(first, trace.packets.end(), span.end, cmp);
  for (auto it = first; it != last; ++it) {
    auto p = *it;
    p.timestamp = quantize_us(p.timestamp - span.start);
    s.packets.push_back(p);
  }
  return s;
}

struct Prediction {
  double start = 0;
  double end = 0;
  std::string label;  // kNoAction when below threshold
  double confidence = 0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Class probabilities of every segment, computed once and thresholded later.
struct SegmentScores {
  std::vector<TimeSpan> segments;
  std::vector<std::vector<double>> proba;
  std::vector<std::string> labels;
};

inline SegmentScores score_segments(const TraceSample& trace, const std::vector<TimeSpan>& segments,
                                    const TrainedForest& model, FeatureSchema schema) {
  if (schema_size(schema) != model.n_features()) throw Error("classify_stream: model and feature schema disagree");
  SegmentScores s{segments, {}, model.labels};
  for (const auto& span : segments) {
    const auto fv = extract(slice(trace, span), schema);
    s.proba.push_back(predict_proba(model, fv.values));
  }
  return s;
}

/// Emits the argmax label when its probability exceeds `threshold`,
/// otherwise NoAction. Confidence is the argmax probability either way.
inline std::vector<Prediction> apply_threshold(const SegmentScores& s, double threshold) {
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    const auto k = argmax(s.proba[i]);
    const double conf = s.proba[i][k];
    out.push_back({s.segments[i].start, s.segments[i].end,
                   conf > threshold ? s.labels[k] : std::string(kNoAction), conf});
  }
  return out;
}

inline std::vector<Prediction> classify_stream(const TraceSample& trace, const std::vector<TimeSpan>& segments,
                                               const TrainedForest& model, FeatureSchema schema, double threshold) {
  return apply_threshold(score_segments(trace, segments, model, schema), threshold);
}

struct IntervalScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

inline bool overlaps(double a0, double a1, double b0, double b1) { return a0 < b1 && b0 < a1; }

/// One-to-one matching of truths to same-label overlapping predictions.
/// Truths are taken in start order; each takes the unmatched candidate that
/// ends first (earlier start, then lower index, on ties). Labels in
/// `noise_labels` count as NoAction.
inline IntervalScore score_intervals(const std::vector<Prediction>& predictions, const std::vector<Interval>& truth,
                                     const std::set<std::string>& noise_labels = {}) {
  auto is_silent = [&](const std::string& l) { return l == kNoAction || noise_labels.count(l) > 0; };
  std::vector<std::size_t> emitted;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!is_silent(predictions[i].label)) emitted.push_back(i);
  }
  std::vector<std::size_t> order(truth.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return truth[a].start < truth[b].start; });

  std::vector<bool> used(predictions.size(), false);
  IntervalScore s;
  for (auto ti : order) {
    const auto& t = truth[ti];
    std::optional<std::size_t> best;
    for (auto pi : emitted) {
      const auto& p = predictions[pi];
      if (used[pi] || p.label != t.label || !overlaps(p.start, p.end, t.start, t.end)) continue;
      if (!best || p.end < predictions[*best].end ||
          (p.end == predictions[*best].end && p.start < predictions[*best].start)) {
        best = pi;
      }
    }
    if (best) {
      used[*best] = true;
      ++s.tp;
    } else {
      ++s.fn;
    }
  }
  s.fp = emitted.size() - s.tp;
  s.precision = s.tp + s.fp ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp) : 0.0;
  s.recall = s.tp + s.fn ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

struct SweepRow {
  double threshold = 0;
  IntervalScore score;
  std::size_t emissions = 0;  // non-NoAction predictions after noise mapping
};

inline std::vector<SweepRow> threshold_sweep(const SegmentScores& scores, const std::vector<Interval>& truth,
                                             const std::vector<double>& thresholds,
                                             const std::set<std::string>& noise_labels = {}) {
  std::vector<SweepRow> rows;
  for (double t : thresholds) {
    if (t < 0 || t > 1) throw Error("threshold_sweep: thresholds must be in [0,1]");
    const auto preds = apply_threshold(scores, t);
    SweepRow r{t, score_intervals(preds, truth, noise_labels), 0};
    for (const auto& p : preds) r.emissions += p.label != kNoAction && !noise_labels.count(p.label);
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<SweepRow> threshold_sweep(const TraceSample& trace, const std::vector<Interval>& truth,
                                             const TrainedForest& model, FeatureSchema schema,
                                             const Segmenter& seg, const std::vector<double>& thresholds,
                                             const std::set<std::string>& noise_labels = {}) {
  return threshold_sweep(score_segments(trace, find_active_windows(trace, seg), model, schema), truth, thresholds,
                         noise_labels);
}

inline std::string write_predictions_csv(const std::vector<Prediction>& preds) {
  std::string out = "start_s,end_s,label,confidence\n";
  for (const auto& p : preds) {
    detail::append_fixed6(out, p.start);
    out += ',';
    detail::append_fixed6(out, p.end);
    out += ',' + p.label + ',';
    detail::append_fixed6(out, p.confidence);
    out += '\n';
  }
  return out;
}

inline std::string write_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "threshold,precision,recall,f1\n";
  for (const auto& r : rows) {
    detail::append_fixed6(out, r.threshold);
    out += ',';
    detail::append_fixed6(out, r.score.precision);
    out += ',';
    detail::append_fixed6(out, r.score.recall);
    out += ',';
    detail::append_fixed6(out, r.score.f1);
    out += '\n';
  }
  return out;
}

}  // namespace btlab
