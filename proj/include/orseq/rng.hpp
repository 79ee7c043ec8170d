#ifndef ORSEQ_RNG_HPP
#define ORSEQ_RNG_HPP

#include <cstdint>

#include "orseq/common.hpp"

namespace orseq {

// Counter-based stream RNG: each (seed, stream) pair yields an independent,
// reproducible sequence regardless of thread scheduling.  SplitMix64 core.
class StreamRng {
  public:
    StreamRng(std::uint64_t seed, std::uint64_t stream) {
        state_ = mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // Uniform in (0,1).
    Real next_real() {
        return (next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    // Standard normal via Box-Muller.
    Real next_normal() {
        Real u1 = next_real(), u2 = next_real();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t state_;
};

}  // namespace orseq

#endif
