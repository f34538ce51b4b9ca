#include "kaczmarz/sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace kaczmarz {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master + stream * 0x9E3779B97F4A7C15ull);
}

DiscreteSampler::DiscreteSampler(const std::vector<double>& weights, std::uint64_t seed)
    : rng_(seed) {
  const std::size_t n = weights.size();
  if (n == 0) throw std::invalid_argument("sampler: empty weight vector");
  total_ = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0)
      throw std::invalid_argument("sampler: weights must be finite and nonnegative");
    total_ += w;
  }
  if (total_ <= 0.0) throw std::invalid_argument("sampler: all weights are zero");

  norm_.resize(n);
  for (std::size_t i = 0; i < n; ++i) norm_[i] = weights[i] / total_;

  // Vose: split scaled probabilities into under/over-full buckets and
  // pair them so each bucket holds at most two outcomes.
  prob_.assign(n, 1.0);
  alias_.resize(n);
  for (std::size_t i = 0; i < n; ++i) alias_[i] = i;

  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = norm_[i] * static_cast<double>(n);
  std::vector<std::size_t> small, large;
  small.reserve(n);
  large.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    (scaled[i] < 1.0 ? small : large).push_back(i);

  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are numerically 1.0, except a pathological exact-zero
  // weight stranded when the large stack drains first: keep such a
  // bucket unreachable by aliasing it to a positive-weight index.
  std::size_t positive = 0;
  while (norm_[positive] == 0.0) ++positive;
  for (std::size_t s : small) {
    if (scaled[s] == 0.0) {
      prob_[s] = 0.0;
      alias_[s] = positive;
    } else {
      prob_[s] = 1.0;
    }
  }
  for (std::size_t l : large) prob_[l] = 1.0;
}

std::size_t DiscreteSampler::draw() {
  const std::uint64_t raw = rng_();
  // multiply-high maps the raw word uniformly onto [0, n)
  const std::size_t idx = static_cast<std::size_t>(
      (static_cast<unsigned __int128>(raw) * prob_.size()) >> 64);
  const double coin = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  return coin < prob_[idx] ? idx : alias_[idx];
}

}  // namespace kaczmarz
