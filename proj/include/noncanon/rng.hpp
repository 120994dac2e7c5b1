#ifndef NONCANON_RNG_HPP
#define NONCANON_RNG_HPP

#include <cstdint>

namespace noncanon {

// Counter-based generator (SplitMix64 output function). Substreams are keyed
// by (seed, stream index), so sample i always sees the same stream no matter
// how samples are distributed over workers. That is what makes Monte Carlo
// output byte-identical for any worker count.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t x) {
    SplitMix64 g(x);
    return g.next();
  }

  // Independent substream for a given sample index.
  static SplitMix64 substream(std::uint64_t seed, std::uint64_t stream) {
    return SplitMix64(mix(seed) ^ mix(stream + 0x51a09e6dd9ca4d3fULL));
  }

 private:
  std::uint64_t state_;
};

}  // namespace noncanon

#endif
