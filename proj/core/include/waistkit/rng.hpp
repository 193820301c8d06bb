#pragma once

#include <cstdint>

namespace waistkit {

// Counter-based generator (Philox 2x64, 10 rounds).  State is just
// (key, counter), so a stream can be split or replayed at will: stream s of
// seed q always produces the same sequence, independent of other streams.
// That is what makes multi-threaded Monte Carlo runs reproducible.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_lo_(mix(seed ^ 0x9e3779b97f4a7c15ull)),
        key_hi_(mix(stream ^ 0xbf58476d1ce4e5b9ull)),
        ctr_(0) {}

  std::uint64_t next_u64() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    std::uint64_t x0 = ctr_++, x1 = 0x243f6a8885a308d3ull;
    std::uint64_t k = key_lo_;
    for (int r = 0; r < 10; ++r) {
      const unsigned __int128 prod =
          static_cast<unsigned __int128>(0xd2b74407b1ce6e93ull) * x0;
      const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
      const std::uint64_t lo = static_cast<std::uint64_t>(prod);
      x0 = hi ^ k ^ x1;
      x1 = lo;
      k += 0x9e3779b97f4a7c15ull;
    }
    spare_ = x1 ^ key_hi_;
    have_ = true;
    return x0 ^ key_hi_;
  }

  // Uniform on the open interval (0,1); never returns an exact endpoint.
  double next_unit() {
    const std::uint64_t u = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(u) + 0.5) * 0x1p-53;
  }

  double next_symmetric() { return 2.0 * next_unit() - 1.0; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_lo_, key_hi_, ctr_;
  std::uint64_t spare_ = 0;
  bool have_ = false;
};

}  // namespace waistkit
