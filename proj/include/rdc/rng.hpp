#ifndef RDC_RNG_HPP
#define RDC_RNG_HPP

#include <cmath>
#include <cstdint>

namespace rdc {

/// SplitMix64. Used wherever the library or the drivers need seedable,
/// platform-independent randomness (tile assignment, synthetic data, agents).
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double nextDouble() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, bound).
  std::uint64_t nextBelow(std::uint64_t bound) { return bound == 0 ? 0 : next() % bound; }

  /// Standard normal via Box-Muller (no cached spare; two draws per call).
  double nextGaussian() {
    double u1 = nextDouble();
    double u2 = nextDouble();
    while (u1 <= 0.0) u1 = nextDouble();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::uint64_t state() const { return state_; }
  void setState(std::uint64_t s) { state_ = s; }

private:
  std::uint64_t state_;
};

}  // namespace rdc

#endif  // RDC_RNG_HPP
