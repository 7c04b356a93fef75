#pragma once

// Domain types shared by every btlab module: observed packets, labeled
// capture samples, datasets, direction filtering and the payload entropy
// check used to confirm application-layer encryption.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace btlab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Direction : std::uint8_t { MasterToSlave, SlaveToMaster };
enum class Flavor : std::uint8_t { Classic, LowEnergy };

inline std::string_view to_string(Direction d) {
  return d == Direction::MasterToSlave ? "M2S" : "S2M";
}

inline std::string_view to_string(Flavor f) {
  return f == Flavor::Classic ? "Classic" : "LowEnergy";
}

inline std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "M2S") return Direction::MasterToSlave;
  if (s == "S2M") return Direction::SlaveToMaster;
  return std::nullopt;
}

inline std::optional<Flavor> parse_flavor(std::string_view s) {
  if (s == "Classic") return Flavor::Classic;
  if (s == "LowEnergy") return Flavor::LowEnergy;
  return std::nullopt;
}

/// One link-layer event as seen by a passive sniffer.
struct PacketRecord {
  double timestamp = 0.0;  // seconds since capture start, microsecond resolution
  Direction direction = Direction::MasterToSlave;
  std::uint32_t size = 0;  // L2CAP payload bytes
  bool is_meta = false;    // null / poll / ACK-only frame

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

using PacketList = std::vector<PacketRecord>;
using Labels = std::map<std::string, std::string>;

namespace label {
inline constexpr std::string_view kDevice = "device";
inline constexpr std::string_view kApp = "app";
inline constexpr std::string_view kAction = "action";
inline constexpr std::string_view kFlavor = "flavor";
inline constexpr std::string_view kPair = "pair";
inline constexpr std::string_view kDay = "day";
}  // namespace label

/// A labeled, time-ordered capture (nominally ~30 s long).
struct TraceSample {
  PacketList packets;
  Labels labels;
  Flavor flavor = Flavor::Classic;

  /// Returns the label for `key`, or an empty string when absent.
  [[nodiscard]] const std::string& label(std::string_view key) const {
    static const std::string kEmpty;
    auto it = labels.find(std::string(key));
    return it == labels.end() ? kEmpty : it->second;
  }

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

struct Dataset {
  std::vector<TraceSample> samples;
  std::string schema_note;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] bool empty() const { return samples.empty(); }
};

struct FilteredSequences {
  PacketList m2s;
  PacketList s2m;
  PacketList data;  // every packet with is_meta == false
};

struct Violation {
  std::string rule;                  // "ordering", "meta-size", "timestamp", "flavor"
  std::optional<std::size_t> index;  // offending packet, if any
  std::string message;
};

/// Lists every invariant violation of `sample`. An empty result means the
/// sample is well formed.
inline std::vector<Violation> validate_sample(const TraceSample& sample) {
  std::vector<Violation> out;
  const auto& pk = sample.packets;
  for (std::size_t i = 0; i < pk.size(); ++i) {
    const auto& p = pk[i];
    if (!std::isfinite(p.timestamp) || p.timestamp < 0.0) {
      out.push_back({"timestamp", i,
                     "packet " + std::to_string(i) + ": timestamp must be finite and >= 0"});
    }
    if (i > 0 && p.timestamp < pk[i - 1].timestamp) {
      out.push_back({"ordering", i,
                     "packet " + std::to_string(i) + ": timestamp decreases"});
    }
    if (p.is_meta && p.size != 0) {
      out.push_back({"meta-size", i,
                     "packet " + std::to_string(i) + ": meta packet carries " +
                         std::to_string(p.size) + " bytes"});
    }
  }
  auto it = sample.labels.find(std::string(label::kFlavor));
  if (it != sample.labels.end() && it->second != to_string(sample.flavor)) {
    out.push_back({"flavor", std::nullopt,
                   "flavor label '" + it->second + "' disagrees with sample flavor"});
  }
  return out;
}

inline bool is_valid(const TraceSample& sample) { return validate_sample(sample).empty(); }

/// Splits a sample into the master->slave, slave->master and non-meta
/// packet sequences, preserving order.
inline FilteredSequences filter_sequences(const TraceSample& sample) {
  FilteredSequences f;
  for (const auto& p : sample.packets) {
    (p.direction == Direction::MasterToSlave ? f.m2s : f.s2m).push_back(p);
    if (!p.is_meta) f.data.push_back(p);
  }
  return f;
}

using ByteHistogram = std::array<std::uint64_t, 256>;

/// Shannon entropy of a byte-value histogram in bits per byte.
inline double byte_entropy(const ByteHistogram& histogram) {
  long double total = 0;
  for (auto c : histogram) total += static_cast<long double>(c);
  if (total == 0) throw Error("byte_entropy: empty payload");
  double h = 0.0;
  for (auto c : histogram) {
    if (c == 0) continue;
    const double p = static_cast<double>(static_cast<long double>(c) / total);
    h -= p * std::log2(p);
  }
  // -0.0 for the single-symbol case
  return h <= 0.0 ? 0.0 : h;
}

inline ByteHistogram byte_histogram(std::span<const std::uint8_t> payload) {
  ByteHistogram h{};
  for (auto b : payload) ++h[b];
  return h;
}

/// Encrypted payloads measure 6-8 bits/byte; plaintext protocols sit near 4.
inline constexpr double kEncryptedEntropyFloor = 6.0;

inline bool payload_looks_encrypted(const ByteHistogram& histogram) {
  return byte_entropy(histogram) >= kEncryptedEntropyFloor;
}

}  // namespace btlab
