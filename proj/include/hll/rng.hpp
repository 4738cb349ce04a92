#pragma once

#include <cstdint>
#include <random>

namespace hll {

// splitmix64 finalizer; used both for seed derivation and for hashing
// grid coordinates into per-run seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic uniform stream on top of std::mt19937_64 (its output
// sequence is fixed by the standard, so seeded runs reproduce bit-for-bit
// across platforms). Exclusively owned by one caller at a time.
class random_stream {
  public:
    explicit random_stream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

    // uniform on the open interval (0, 1); never returns 0 or 1, so
    // log(u) and log(-log(u)) stay finite
    double uniform_open() {
        const std::uint64_t r = engine_() >> 11;  // top 53 bits
        return (static_cast<double>(r) + 0.5) * 0x1.0p-53;
    }

    // uniform on [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::uint64_t next_u64() { return engine_(); }

    // independent substream for a given purpose tag; derived from the
    // original seed, not from the current engine state
    random_stream substream(std::uint64_t tag) const {
        return random_stream(mix64(seed_ ^ mix64(tag)));
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace hll
