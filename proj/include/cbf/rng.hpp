#pragma once

#include <cmath>
#include <cstdint>

namespace cbf {

// Counter-based generator: every draw is a 64-bit mix of (seed, counter),
// so streams are reproducible for a fixed seed and independent of platform
// RNG library details.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t next_u64() { return mix(seed_ ^ mix(counter_++)); }

    // Uniform in [0,1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Box-Muller without spare caching; two uniforms per draw keeps the
    // stream position a pure function of the draw count.
    double next_gaussian() {
        double a = next_unit();
        double b = next_unit();
        if (a < 0x1.0p-60) a = 0x1.0p-60;
        return std::sqrt(-2.0 * std::log(a)) * std::cos(6.283185307179586476925287 * b);
    }

    // Derive an independent stream, e.g. one per ensemble member.
    CounterRng fork(std::uint64_t stream) const { return CounterRng(mix(seed_ ^ mix(~stream))); }

  private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace cbf
