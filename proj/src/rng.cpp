#include "penalab/rng.hpp"

#include <cmath>

namespace penalab {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) {
  constexpr std::uint64_t M0 = 0xD2511F53, M1 = 0xCD9E8D57;
  constexpr std::uint32_t W0 = 0x9E3779B9, W1 = 0xBB67AE85;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = M0 * c[0];
    const std::uint64_t p1 = M1 * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += W0;
    k[1] += W1;
  }
  return c;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t domain) {
  // splitmix64 finaliser over the pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (domain + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

void StreamRng::refill() {
  buf_ = philox4x32({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                     static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                    key_);
  ++block_;
  used_ = 0;
}

std::uint32_t StreamRng::next_u32() {
  if (used_ == 4) refill();
  return buf_[used_++];
}

std::uint64_t StreamRng::next_u64() {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double StreamRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double StreamRng::uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

double StreamRng::exponential() { return -std::log(uniform_open()); }

}  // namespace penalab
