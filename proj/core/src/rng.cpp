#include "bcom/rng.hpp"

#include <vector>

namespace bcom {

namespace {

void push_u64(std::vector<std::uint32_t>& words, std::uint64_t x) {
  words.push_back(static_cast<std::uint32_t>(x & 0xffffffffu));
  words.push_back(static_cast<std::uint32_t>(x >> 32));
}

}  // namespace

Rng make_stream(std::uint64_t master_seed, Stream stream) {
  return keyed_rng(master_seed, {static_cast<std::uint64_t>(stream)});
}

Rng keyed_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * tags.size());
  push_u64(words, seed);
  for (std::uint64_t tag : tags) push_u64(words, tag);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace bcom
