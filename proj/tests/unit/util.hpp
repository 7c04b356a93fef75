#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>

#include <unistd.h>

#include "btlab/core.hpp"
#include "btlab/rng.hpp"

namespace btlab::test {

inline PacketRecord pkt(double t, std::uint32_t size, Direction d = Direction::MasterToSlave, bool meta = false) {
  return {t, d, size, meta};
}

inline TraceSample sample_of(std::initializer_list<PacketRecord> p, Flavor f = Flavor::Classic) {
  TraceSample s;
  s.packets = p;
  s.flavor = f;
  return s;
}

/// Sorted packets on the microsecond grid, meta packets sized 0.
inline TraceSample random_sample(Rng& rng, std::size_t n, Flavor f = Flavor::Classic) {
  TraceSample s;
  s.flavor = f;
  std::int64_t us = 0;
  for (std::size_t i = 0; i < n; ++i) {
    us += rng.integer(0, 50000);
    PacketRecord p;
    p.timestamp = static_cast<double>(us) / 1e6;
    p.direction = rng.bernoulli(0.5) ? Direction::MasterToSlave : Direction::SlaveToMaster;
    p.is_meta = rng.bernoulli(0.2);
    p.size = p.is_meta ? 0 : static_cast<std::uint32_t>(rng.integer(0, f == Flavor::Classic ? 1021 : 255));
    s.packets.push_back(p);
  }
  return s;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("btlab_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace btlab::test
