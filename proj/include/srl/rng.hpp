#pragma once

#include <cstdint>

namespace srl {

/// Inverse CDF of the standard normal distribution (Wichura's PPND16
/// rational approximation, absolute error well below 1e-9 on (0, 1)).
double inverse_normal_cdf(double p);

/// Counter-based deterministic generator: the k-th output is a fixed mixing
/// function of (key, k), so streams are reproducible across platforms and
/// independent of call patterns. Substreams are derived from a (seed, stream)
/// pair; the experiment data model uses streams {signal, matrix, noise}.
class CounterRng {
 public:
  enum Stream : std::uint64_t { kSignal = 0, kMatrix = 1, kNoise = 2 };

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  /// Uniform double in the open interval (0, 1).
  double next_uniform();

  /// Standard normal via inverse-CDF transform of next_uniform().
  double next_normal();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace srl
