#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace kaczmarz {

/// SplitMix64 step: maps a 64-bit state to a well-mixed output.
/// Used to derive independent per-trial seeds from one master seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for the t-th derived stream of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Identity string recorded in benchmark output.
inline const char* prng_name() { return "mt19937_64"; }
inline const char* seed_derivation() { return "splitmix64(master + stream*0x9E3779B97F4A7C15)"; }

/// Standard normal deviates from a seedable engine.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}
  double operator()() { return dist_(rng_); }
  double uniform() { return std::generate_canonical<double, 53>(rng_); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

/// O(1) sampling from a fixed discrete distribution via the alias
/// method (Vose's construction). Weights must be finite, nonnegative,
/// with at least one strictly positive. Identical seed and weights
/// give an identical draw sequence; the index/coin mapping uses raw
/// 64-bit engine output only, so the sequence does not depend on
/// library distribution internals.
class DiscreteSampler {
 public:
  DiscreteSampler(const std::vector<double>& weights, std::uint64_t seed);

  std::size_t draw();
  std::size_t size() const { return prob_.size(); }

  /// Normalized probability of index i as stored in the table.
  double probability(std::size_t i) const { return norm_[i]; }
  double total_weight() const { return total_; }

 private:
  std::vector<double> prob_;   // acceptance threshold per bucket
  std::vector<std::size_t> alias_;
  std::vector<double> norm_;   // weights / total
  double total_ = 0.0;
  std::mt19937_64 rng_;
};

}  // namespace kaczmarz
