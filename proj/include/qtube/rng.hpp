#pragma once

#include <cstdint>

namespace qtube {

// splitmix64: used both as a stream on its own and to mix (seed, stream)
// pairs into independent sub-seeds for chunked Monte Carlo loops.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x2545f4914f6cdd1dULL * (stream + 1));
    splitmix64(s);
    return s;
}

// Deterministic uniform stream. Avoids std::uniform_real_distribution so
// that generated datasets are bit-identical for a given seed everywhere.
class UniformRng {
  public:
    explicit UniformRng(std::uint64_t seed) : state_(seed) {
        // warm up so nearby seeds decorrelate
        splitmix64(state_);
        splitmix64(state_);
    }

    /// uniform on [0, 1)
    double next() {
        return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
    }

    /// uniform on [lo, hi)
    double next(double lo, double hi) { return lo + (hi - lo) * next(); }

  private:
    std::uint64_t state_;
};

} // namespace qtube
