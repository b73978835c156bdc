#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace vda {

/// std::mt19937_64 seeded from (seed, stream name). Each operation owns its
/// own named stream, so there is no shared generator state anywhere. The
/// uniform and normal transforms are done here rather than with <random>
/// distributions, whose output differs between standard libraries.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view stream);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Box-Muller; the second variate is cached).
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Derives a child seed from (seed, stream, index); used to give every epoch,
/// sweep cell or sample its own reproducible stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

/// k distinct indices from [0, n), sorted ascending (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace vda
