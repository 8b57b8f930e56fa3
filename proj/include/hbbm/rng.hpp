#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace hbbm {

// Philox4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw; SC'11).
// Stateless: every output block is a pure function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMulA = 0xD2511F53u;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85u;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeylA;
        key[1] += kWeylB;
      }
      const std::uint64_t p0 = std::uint64_t{kMulA} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMulB} * ctr[2];
      ctr = Counter{static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                    static_cast<std::uint32_t>(p1),
                    static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                    static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }
};

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Draw purposes occupy the third counter word so that independent uses of one
// stream never share a counter.
enum class Purpose : std::uint32_t {
  kClock = 1,
  kStep = 2,
  kSplit = 3,
  kExit = 4,
  kDerive = 5,
  kSelect = 6,
  kSample = 7,
};

// (0, 1]
constexpr double to_unit_open_low(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}
// [0, 1)
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}
// (0, 1), symmetric about 1/2
constexpr double to_unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

// An addressable random stream. Each draw is indexed by (purpose, index), so a
// particle's path can be replayed bit-for-bit without storing random numbers.
class Stream {
 public:
  constexpr explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr Stream from_seed(std::uint64_t seed) noexcept {
    return Stream(splitmix64(seed));
  }

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

  [[nodiscard]] constexpr std::array<std::uint64_t, 2> bits(Purpose purpose,
                                                            std::uint64_t index) const noexcept {
    const auto out = Philox4x32::generate(
        {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
         static_cast<std::uint32_t>(purpose), 0u},
        {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
    return {(std::uint64_t{out[1]} << 32) | out[0], (std::uint64_t{out[3]} << 32) | out[2]};
  }

  // Independent child stream addressed by an arbitrary 64-bit tag.
  [[nodiscard]] constexpr Stream derive(std::uint64_t tag) const noexcept {
    return Stream(bits(Purpose::kDerive, tag)[0]);
  }

  // The two offspring streams of a binary branch event.
  [[nodiscard]] constexpr std::pair<Stream, Stream> split() const noexcept {
    const auto b = bits(Purpose::kSplit, 0);
    return {Stream(b[0]), Stream(b[1])};
  }

  [[nodiscard]] double uniform(Purpose purpose, std::uint64_t index) const noexcept {
    return to_unit(bits(purpose, index)[0]);
  }

  // Box-Muller on one 128-bit block: two independent standard normals.
  [[nodiscard]] std::pair<double, double> normals(Purpose purpose,
                                                  std::uint64_t index) const noexcept {
    const auto b = bits(purpose, index);
    const double r = std::sqrt(-2.0 * std::log(to_unit_open_low(b[0])));
    const double phi = 2.0 * std::numbers::pi * to_unit(b[1]);
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  [[nodiscard]] double exponential(double rate, Purpose purpose,
                                   std::uint64_t index) const noexcept {
    return -std::log(to_unit_open_low(bits(purpose, index)[0])) / rate;
  }

  [[nodiscard]] double cauchy(Purpose purpose, std::uint64_t index) const noexcept {
    return std::tan(std::numbers::pi * (to_unit_open(bits(purpose, index)[0]) - 0.5));
  }

 private:
  std::uint64_t key_;
};

// Sequential view over one purpose of a stream; each call consumes one block.
class CounterRng {
 public:
  explicit CounterRng(Stream stream, Purpose purpose = Purpose::kSample,
                      std::uint64_t start = 0) noexcept
      : stream_(stream), purpose_(purpose), next_(start) {}

  static CounterRng from_seed(std::uint64_t seed) noexcept {
    return CounterRng(Stream::from_seed(seed));
  }

  std::pair<double, double> normals() noexcept { return stream_.normals(purpose_, next_++); }
  double normal() noexcept { return normals().first; }
  double uniform() noexcept { return stream_.uniform(purpose_, next_++); }
  double exponential(double rate) noexcept { return stream_.exponential(rate, purpose_, next_++); }
  double cauchy() noexcept { return stream_.cauchy(purpose_, next_++); }
  std::uint64_t next_u64() noexcept { return stream_.bits(purpose_, next_++)[0]; }

  [[nodiscard]] Stream stream() const noexcept { return stream_; }
  [[nodiscard]] std::uint64_t position() const noexcept { return next_; }

 private:
  Stream stream_;
  Purpose purpose_;
  std::uint64_t next_;
};

}  // namespace hbbm
