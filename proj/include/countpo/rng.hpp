#pragma once

#include <array>
#include <cstdint>

namespace countpo {

// Counter-based stream built on Philox4x32-10.  A stream is identified by a
// 64-bit key derived from the root seed and the split path; the counter runs
// over 2^128 blocks of four 32-bit words.
//
// split(index) is a pure function of (parent key, index), so substreams are
// identical no matter which order, or on which thread, they are created.
// That is what makes per-(replication, unit) draws reproducible for any
// --threads value.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Child stream addressed by `index`.  Children of distinct (parent, index)
  // pairs are for all practical purposes independent.
  [[nodiscard]] RngStream split(std::uint64_t index) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double next_uniform();

  // Uniform integer on {0, ..., bound - 1}, rejection sampled (no modulo
  // bias).  bound must be >= 1.
  std::uint64_t next_below(std::uint64_t bound);

  // Standard normal via Box-Muller; the second draw of each pair is cached.
  double next_normal();

  // Gamma(shape, scale) via Marsaglia-Tsang; shape > 0, scale > 0.
  double next_gamma(double shape, double scale);

  // Poisson(mu).  mu == 0 is a point mass at 0.  Inversion below mu = 10,
  // PTRS rejection above.
  std::int64_t next_poisson(double mu);

 private:
  RngStream() = default;

  void refill();

  std::uint64_t key_ = 0;
  std::uint64_t ctr_lo_ = 0;
  std::uint64_t ctr_hi_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

}  // namespace countpo
