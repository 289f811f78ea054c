// Self-contained counter-seeded PRNG (xoshiro256++) with a Poisson sampler.
//
// The simulator needs bit-reproducible streams that can be derived
// independently per pixel, so results do not depend on how work is split
// across threads. std::poisson_distribution is implementation-defined,
// hence the hand-rolled sampler.
#pragma once

#include <array>
#include <cstdint>

namespace fretflim {

class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Stream for pixel (row, col) derived from a run seed; streams for
    /// distinct pixels are decorrelated and independent of visit order.
    static Rng for_pixel(std::uint64_t seed, std::uint32_t row, std::uint32_t col);

    /// Stream derived from (seed, a, b), used for per-trial seeding.
    static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();

    /// Poisson draw with the given mean. Exact (no normal approximation):
    /// sequential inversion below 30, Hormann's PTRS rejection above.
    std::uint32_t poisson(double mean);

private:
    std::array<std::uint64_t, 4> state_;
};

}  // namespace fretflim
