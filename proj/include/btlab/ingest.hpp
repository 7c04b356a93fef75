#pragma once

// Trace and manifest CSV formats, dataset loading, flavor split and
// per-label class balancing.
//
// Trace CSV (one capture per file):
//   timestamp_s,direction,size_bytes,is_meta
//   0.000000,M2S,120,0
// Timestamps are written with exactly six decimals.
//
// Manifest CSV (one row per capture):
//   file,device,app,action,flavor,pair,day

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "btlab/core.hpp"
#include "btlab/rng.hpp"

namespace btlab {

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::string_view kTraceHeader = "timestamp_s,direction,size_bytes,is_meta";
inline constexpr std::string_view kManifestHeader = "file,device,app,action,flavor,pair,day";

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Splits on '\n'. A single trailing newline does not produce an empty line.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = pos + 1;
  }
  return lines;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

inline void append_fixed6(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  out.append(buf, ptr);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Rounds to the microsecond grid used by the trace format.
inline double quantize_us(double t) { return std::round(t * 1e6) / 1e6; }

/// Parses a trace CSV. Labels are left empty; they come from the manifest.
inline TraceSample parse_trace_csv(std::string_view content) {
  auto lines = detail::split_lines(content);
  if (lines.empty() || lines[0] != kTraceHeader) {
    throw ParseError(1, "expected header '" + std::string(kTraceHeader) + "'");
  }
  TraceSample s;
  s.packets.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    auto f = detail::split_fields(lines[i]);
    if (f.size() != 4) throw ParseError(lineno, "expected 4 fields, got " + std::to_string(f.size()));
    PacketRecord p;
    if (!detail::parse_number(f[0], p.timestamp) || !std::isfinite(p.timestamp)) {
      throw ParseError(lineno, "non-numeric timestamp '" + std::string(f[0]) + "'");
    }
    if (p.timestamp < 0) throw ParseError(lineno, "negative timestamp");
    auto dir = parse_direction(f[1]);
    if (!dir) throw ParseError(lineno, "bad direction '" + std::string(f[1]) + "'");
    p.direction = *dir;
    if (!f[2].empty() && f[2][0] == '-') throw ParseError(lineno, "negative size");
    if (!detail::parse_number(f[2], p.size)) {
      throw ParseError(lineno, "non-numeric size '" + std::string(f[2]) + "'");
    }
    if (f[3] == "0") {
      p.is_meta = false;
    } else if (f[3] == "1") {
      p.is_meta = true;
    } else {
      throw ParseError(lineno, "is_meta must be 0 or 1");
    }
    if (p.is_meta && p.size != 0) throw ParseError(lineno, "meta packet with nonzero size");
    if (!s.packets.empty() && p.timestamp < s.packets.back().timestamp) {
      throw ParseError(lineno, "decreasing timestamp");
    }
    s.packets.push_back(p);
  }
  return s;
}

inline std::string write_trace_csv(const TraceSample& sample) {
  std::string out;
  out.reserve(24 * (sample.packets.size() + 2));
  out += kTraceHeader;
  out += '\n';
  for (const auto& p : sample.packets) {
    detail::append_fixed6(out, p.timestamp);
    out += ',';
    out += to_string(p.direction);
    out += ',';
    out += std::to_string(p.size);
    out += p.is_meta ? ",1\n" : ",0\n";
  }
  return out;
}

struct ManifestRow {
  std::string file;
  std::string device;
  std::string app;
  std::string action;
  Flavor flavor = Flavor::Classic;
  std::string pair;
  std::uint32_t day = 0;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

using Manifest = std::vector<ManifestRow>;

inline Labels labels_of(const ManifestRow& row) {
  return {{std::string(label::kDevice), row.device},
          {std::string(label::kApp), row.app},
          {std::string(label::kAction), row.action},
          {std::string(label::kFlavor), std::string(to_string(row.flavor))},
          {std::string(label::kPair), row.pair},
          {std::string(label::kDay), std::to_string(row.day)}};
}

inline Manifest parse_manifest_csv(std::string_view content) {
  auto lines = detail::split_lines(content);
  if (lines.empty() || lines[0] != kManifestHeader) {
    throw ParseError(1, "expected header '" + std::string(kManifestHeader) + "'");
  }
  Manifest m;
  std::set<std::string, std::less<>> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    auto f = detail::split_fields(lines[i]);
    if (f.size() != 7) throw ParseError(lineno, "expected 7 fields, got " + std::to_string(f.size()));
    ManifestRow r;
    r.file = f[0];
    if (r.file.empty()) throw ParseError(lineno, "empty file path");
    if (!seen.insert(r.file).second) throw ParseError(lineno, "duplicate path '" + r.file + "'");
    r.device = f[1];
    r.app = f[2];
    r.action = f[3];
    auto fl = parse_flavor(f[4]);
    if (!fl) throw ParseError(lineno, "flavor must be Classic or LowEnergy");
    r.flavor = *fl;
    r.pair = f[5];
    if (!detail::parse_number(f[6], r.day)) throw ParseError(lineno, "day must be a non-negative integer");
    m.push_back(std::move(r));
  }
  return m;
}

inline std::string write_manifest_csv(const Manifest& manifest) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& r : manifest) {
    for (const std::string* field : {&r.file, &r.device, &r.app, &r.action, &r.pair}) {
      if (field->find_first_of(",\n") != std::string::npos) {
        throw Error("manifest field contains a separator: '" + *field + "'");
      }
    }
    out += r.file + ',' + r.device + ',' + r.app + ',' + r.action + ',';
    out += to_string(r.flavor);
    out += ',' + r.pair + ',' + std::to_string(r.day) + '\n';
  }
  return out;
}

/// Builds a manifest row from a sample's labels.
inline ManifestRow manifest_row_for(const TraceSample& s, std::string file) {
  ManifestRow r;
  r.file = std::move(file);
  r.device = s.label(label::kDevice);
  r.app = s.label(label::kApp);
  r.action = s.label(label::kAction);
  r.flavor = s.flavor;
  r.pair = s.label(label::kPair);
  const auto& day = s.label(label::kDay);
  if (!day.empty() && !detail::parse_number(std::string_view(day), r.day)) {
    throw Error("day label is not a non-negative integer: '" + day + "'");
  }
  return r;
}

/// Loads every manifest row relative to `root`.
inline Dataset load_dataset(const Manifest& manifest, const std::filesystem::path& root) {
  std::set<std::string, std::less<>> seen;
  Dataset ds;
  ds.samples.reserve(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& row = manifest[i];
    const std::string where = "manifest row " + std::to_string(i + 1) + " (" + row.file + ")";
    if (!seen.insert(row.file).second) throw LoadError(where + ": duplicate path");
    const auto path = root / row.file;
    if (!std::filesystem::exists(path)) throw LoadError(where + ": missing file " + path.string());
    TraceSample s;
    try {
      s = parse_trace_csv(detail::read_file(path));
    } catch (const ParseError& e) {
      throw LoadError(where + ": " + e.what());
    }
    s.flavor = row.flavor;
    s.labels = labels_of(row);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
  return load_dataset(parse_manifest_csv(detail::read_file(manifest_path)),
                      manifest_path.parent_path());
}

/// Returns (Classic, LowEnergy).
inline std::pair<Dataset, Dataset> split_by_flavor(const Dataset& ds) {
  std::pair<Dataset, Dataset> out;
  out.first.schema_note = ds.schema_note;
  out.second.schema_note = ds.schema_note;
  for (const auto& s : ds.samples) {
    (s.flavor == Flavor::Classic ? out.first : out.second).samples.push_back(s);
  }
  return out;
}

/// Distinct values of `key`, sorted, with the indices of samples holding each.
inline std::map<std::string, std::vector<std::size_t>> group_by_label(const Dataset& ds,
                                                                      std::string_view key) {
  std::map<std::string, std::vector<std::size_t>> g;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    auto it = s.labels.find(std::string(key));
    if (it == s.labels.end()) {
      throw Error("sample " + std::to_string(i) + " has no label '" + std::string(key) + "'");
    }
    g[it->second].push_back(i);
  }
  return g;
}

inline Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.schema_note = ds.schema_note;
  out.samples.reserve(indices.size());
  for (auto i : indices) out.samples.push_back(ds.samples[i]);
  return out;
}

/// Per-action quotas summing to `total`: one slot per action in sorted
/// order, round after round, skipping exhausted actions.
inline std::vector<std::size_t> round_robin_quotas(std::span<const std::size_t> available,
                                                   std::size_t total) {
  std::vector<std::size_t> quota(available.size(), 0);
  std::size_t left = total;
  bool progressed = true;
  while (left > 0 && progressed) {
    progressed = false;
    for (std::size_t a = 0; a < available.size() && left > 0; ++a) {
      if (quota[a] < available[a]) {
        ++quota[a];
        --left;
        progressed = true;
      }
    }
  }
  return quota;
}

/// Downsamples every value of `key` to the smallest class count, spreading
/// each class's quota evenly over its `action` values. Selected samples keep
/// their original relative order.
inline Dataset balance_by_label(const Dataset& ds, std::string_view key, std::uint64_t seed) {
  if (ds.empty()) throw Error("balance_by_label: empty dataset");
  const auto classes = group_by_label(ds, key);
  std::size_t target = ds.size();
  for (const auto& [_, idx] : classes) target = std::min(target, idx.size());

  std::vector<std::size_t> keep;
  std::uint64_t class_no = 0;
  for (const auto& [_, idx] : classes) {
    std::map<std::string, std::vector<std::size_t>> by_action;
    for (auto i : idx) by_action[ds.samples[i].label(label::kAction)].push_back(i);
    std::vector<std::size_t> avail;
    for (const auto& [__, v] : by_action) avail.push_back(v.size());
    const auto quota = round_robin_quotas(avail, target);

    Rng rng(derive_seed(seed, class_no++));
    std::size_t a = 0;
    for (auto& [__, bucket] : by_action) {
      // partial Fisher-Yates: first quota[a] entries are a uniform choice
      for (std::size_t j = 0; j < quota[a]; ++j) {
        const auto pick = j + rng.index(bucket.size() - j);
        std::swap(bucket[j], bucket[pick]);
        keep.push_back(bucket[j]);
      }
      ++a;
    }
  }
  std::sort(keep.begin(), keep.end());
  return subset(ds, keep);
}

}  // namespace btlab
