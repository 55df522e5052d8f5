#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bcom {

using Rng = std::mt19937_64;

// Independent substreams derived from one master seed. Every consumer of
// randomness draws from exactly one of these, so two runs that share a master
// seed share e.g. their Bernoulli schedule even if they sample differently.
enum class Stream : std::uint32_t {
  kBernoulli = 1,
  kSphere = 2,
  kAdversary = 3,
  kInstance = 4,
  kNoise = 5,
  kCost = 6,
  kProbe = 7,
};

Rng make_stream(std::uint64_t master_seed, Stream stream);

// Stateless draw keyed on (seed, tags...). Used where a value must be a pure
// function of its coordinates, e.g. an oblivious adversary's choice at time t.
Rng keyed_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

}  // namespace bcom
