#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

// Self-contained deterministic randomness. Everything here is a pure
// function of its integer inputs, so results are identical across
// platforms and standard-library versions (std::mt19937 distributions
// are not portable; none are used anywhere in the library).
namespace pepkit::rng {

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

// splitmix64 output function applied to a single value.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += kGamma;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += kGamma);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// Derives an independent stream seed from a master seed and a purpose
// label ("train", "pep.search", ...). Scheme: master XOR fnv1a64(purpose),
// then two splitmix64 steps. Purpose labels are part of the public
// reproducibility contract and are listed in the README.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose) {
  SplitMix64 sm(master ^ fnv1a64(purpose));
  sm.next();
  return sm.next();
}

// Converts 53 random bits to a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Same, but in (0, 1] so log() stays finite.
constexpr double to_unit_pos(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& word : s_) word = sm.next();
  }

  std::uint64_t next() {
    const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  double uniform() { return to_unit(next()); }

  // Box-Muller, cosine branch. Two words per draw, no cached state.
  double gaussian() {
    const double u1 = to_unit_pos(next());
    const double u2 = to_unit(next());
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Unbiased integer in [0, n) via bitmask rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero(n - 1);
    std::uint64_t v;
    do {
      v = next() & mask;
    } while (v >= n);
    return v;
  }

 private:
  std::uint64_t s_[4];
};

// Fisher-Yates.
template <class T>
void shuffle(std::vector<T>& items, Xoshiro256pp& gen) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[gen.below(i)]);
  }
}

// Unit noise addressed by (stream seed, ensemble member, flat coordinate).
// Counter-based rather than sequential: any member can be regenerated on
// its own, and no coordinate ever shares bits with another.
constexpr std::uint64_t member_coord_state(std::uint64_t seed, std::uint64_t member,
                                           std::uint64_t coord) {
  return mix64(mix64(seed ^ mix64(member + 1)) ^ mix64(coord + 1));
}

inline double member_noise_gaussian(std::uint64_t seed, std::uint64_t member,
                                    std::uint64_t coord) {
  SplitMix64 sm(member_coord_state(seed, member, coord));
  const double u1 = to_unit_pos(sm.next());
  const double u2 = to_unit(sm.next());
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Variance-matched uniform alternative: half-width sqrt(3) so the unit
// noise has variance 1, same as the gaussian version.
inline double member_noise_uniform(std::uint64_t seed, std::uint64_t member,
                                   std::uint64_t coord) {
  SplitMix64 sm(member_coord_state(seed, member, coord));
  return (2.0 * to_unit(sm.next()) - 1.0) * std::numbers::sqrt3;
}

}  // namespace pepkit::rng
