#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is identified by a 64-bit key and a 64-bit stream id; the i-th
// block of four 32-bit words is Philox(key, counter = {i_lo, i_hi, id_lo,
// id_hi}). Draws therefore depend only on (key, stream id, position), never
// on thread scheduling.
//
// Replication seeds for Monte Carlo studies come from derive_seed(master,
// rep, purpose), which is a single Philox block under key = master with
// counter = {rep_lo, rep_hi, purpose, 0x5eed}.

#include <array>
#include <cstdint>
#include <limits>

namespace hddr {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32 block with 10 rounds.
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t rep, std::uint32_t purpose);

class PhiloxStream {
 public:
  using result_type = std::uint64_t;

  PhiloxStream(std::uint64_t key, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on (0, 1), never exactly 0 or 1.
  double uniform();
  /// Standard normal via Box-Muller; both variates of a pair are used.
  double normal();
  /// Uniform integer in [0, bound) without modulo bias; bound > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  void refill();

  PhiloxKey key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hddr
