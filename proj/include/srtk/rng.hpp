#pragma once

#include <cmath>
#include <cstdint>

namespace srtk {

// PCG32. Self-contained so that draws are bit-identical across platforms and
// standard libraries; std::uniform_*_distribution is implementation-defined
// and must not appear anywhere on a seeded path.
class Rng {
public:
    explicit Rng(uint64_t seed, uint64_t stream = 0) {
        state_ = 0u;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    uint64_t next_u64() {
        uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform in [0,1). 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    float next_float() { return static_cast<float>(next_u32() >> 8) * 0x1.0p-24f; }

    // Uniform integer in [lo, hi], unbiased via rejection.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t range = static_cast<uint64_t>(hi - lo) + 1u;
        if (range == 0) return static_cast<int64_t>(next_u64());  // full 64-bit range
        uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % range + 1) % range;
        uint64_t r;
        do {
            r = next_u64();
        } while (r > limit);
        return lo + static_cast<int64_t>(r % range);
    }

    // Box-Muller. Consumes two uniforms per call and keeps no spare, so the
    // generator state fully describes the stream.
    float normal(float mean = 0.0f, float sd = 1.0f) {
        double u1, u2;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        u2 = next_double();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
        return mean + sd * static_cast<float>(z);
    }

    uint64_t state() const { return state_; }
    uint64_t inc() const { return inc_; }
    void restore(uint64_t state, uint64_t inc) { state_ = state; inc_ = inc; }

private:
    uint64_t state_ = 0;
    uint64_t inc_ = 1;
};

// SplitMix64 step, used to derive independent seeds (e.g. per iteration).
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace srtk
