#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace mudet::rng {

// Substream discipline
// --------------------
// Every random quantity in the simulator is drawn from a substream that is a
// pure function of (master seed, stream path).  The path is a short list of
// 64-bit ids: a purpose tag followed by the indices that identify the draw
// site (user count, epoch index, ...).  Two sites with different paths get
// statistically independent streams, and the draw made at a site never
// depends on execution order or on how work is split across threads.
//
// Derivation (fixed; results depend on it bit-for-bit):
//   state <- master_seed
//   for each id in path:  state <- mix64((state ^ id) + 0x9E3779B97F4A7C15)
// and the substream is a splitmix64 generator started at that state.

/// splitmix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Stream purpose tags. Part of the reproducibility contract: renumbering
/// them changes every simulation output.
enum Purpose : std::uint64_t {
    kCodes = 1,
    kBits = 2,
    kNoise = 3,
    kVariance = 4,
    kTest = 99,
};

/// Deterministic substream generator (splitmix64 core).
class Stream {
public:
    Stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path)
        : state_(master_seed) {
        for (std::uint64_t id : path)
            state_ = mix64((state_ ^ id) + 0x9E3779B97F4A7C15ull);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix64(state_);
    }

    /// Uniform on [0, 1), 53-bit resolution.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Standard normal via the Box-Muller trig form.  Always consumes exactly
    /// two uniforms so the stream position is independent of the values drawn.
    double next_gaussian() {
        // u1 in (0, 1]: keeps log() finite.
        double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Fair sign: +1 or -1.
    double next_sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

private:
    std::uint64_t state_;
};

}  // namespace mudet::rng
