#ifndef DGLUE_RNG_HPP
#define DGLUE_RNG_HPP

#include <cstdint>
#include <random>

namespace dglue {

// Seeded random source. std::mt19937_64 has a standard-specified sequence;
// the floating-point mapping is done by hand because the standard
// distributions are implementation-defined, and reports must be reproducible
// from the seed alone.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    int uniform_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    bool coin() { return (gen_() & 1u) != 0; }

private:
    std::mt19937_64 gen_;
};

} // namespace dglue

#endif
