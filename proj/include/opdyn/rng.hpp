#ifndef OPDYN_RNG_HPP
#define OPDYN_RNG_HPP

#include <cstdint>
#include <cmath>

namespace opdyn {

// Replica sweeps, Picard paths and coupled candidate streams each own an
// independent substream addressed by (purpose, a, b, c). Reconstructing a
// stream from the same key replays the identical sequence, which is what the
// shared-measure coupling and the common-random-numbers Picard rely on.
enum class StreamPurpose : std::uint64_t {
  finite_replica = 1,
  finite_init = 2,
  picard_path = 3,
  picard_init = 4,
  coupling_candidates = 5,
  coupling_init = 6,
  house_of_cards = 7,
  limit_path = 8,
  selftest = 9,
};

// Layout: [63:59] purpose, [58:33] a (26 bits), [32:7] b (26 bits), [6:0] c.
constexpr std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t a = 0,
                                  std::uint64_t b = 0, std::uint64_t c = 0) {
  return (static_cast<std::uint64_t>(purpose) << 59) | ((a & 0x3FFFFFFULL) << 33) |
         ((b & 0x3FFFFFFULL) << 7) | (c & 0x7FULL);
}

// Philox4x32-10 counter-based generator (Salmon et al. 2011). State is
// (seed, stream, block counter); any block can be regenerated from scratch,
// so streams are splittable and replayable by construction.
class PhiloxRng {
 public:
  PhiloxRng(std::uint64_t seed, std::uint64_t stream)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  std::uint32_t next_u32() {
    if (index_ == 4) {
      generate_block();
      index_ = 0;
    }
    return block_[index_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on the open interval (0,1), 53-bit resolution. Never returns 0,
  // so -log(u) is always finite.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double exponential(double rate) { return -std::log(uniform01()) / rate; }

  // Unbiased integer in [0, n) (Lemire's multiply-shift with rejection).
  std::uint64_t uniform_below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  static std::uint32_t mul_hi(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>(
        (static_cast<std::uint64_t>(a) * b) >> 32);
  }

  void generate_block() {
    std::uint32_t c0 = static_cast<std::uint32_t>(counter_);
    std::uint32_t c1 = static_cast<std::uint32_t>(counter_ >> 32);
    std::uint32_t c2 = stream_lo_;
    std::uint32_t c3 = stream_hi_;
    std::uint32_t k0 = key0_;
    std::uint32_t k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint32_t hi0 = mul_hi(kMul0, c0);
      const std::uint32_t lo0 = kMul0 * c0;
      const std::uint32_t hi1 = mul_hi(kMul1, c2);
      const std::uint32_t lo1 = kMul1 * c2;
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    block_[0] = c0;
    block_[1] = c1;
    block_[2] = c2;
    block_[3] = c3;
    ++counter_;
  }

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  std::uint32_t key0_;
  std::uint32_t key1_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t counter_ = 0;
  std::uint32_t block_[4] = {0, 0, 0, 0};
  int index_ = 4;
};

}  // namespace opdyn

#endif  // OPDYN_RNG_HPP
