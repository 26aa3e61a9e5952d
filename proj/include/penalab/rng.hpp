#pragma once

#include <array>
#include <cstdint>

namespace penalab {

// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// Mixes a domain tag into a seed so unrelated samplers never share streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t domain);

// One independent stream per (seed, stream) pair. The seed is the Philox key;
// the stream index fills the high counter words and the block index the low.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  double exponential();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 4;
};

}  // namespace penalab
