#pragma once

#include <cmath>
#include <cstdint>

namespace stakemkt {

// splitmix64 finalizer (Vigna). Used both as the step mixer and to hash
// (seed, index) pairs into decorrelated per-draw stream states.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic generator for one sweep draw. The state depends only on
// (seed, index), never on execution order, so parallel schedules reproduce
// the serial stream exactly. Distribution mappings are spelled out here
// instead of using <random>, whose distributions are implementation-defined.
class DrawRng {
public:
    DrawRng(std::uint64_t seed, std::uint64_t index)
        : state_(mix64(seed ^ mix64(index + 0x123456789abcdefULL))) {}

    explicit DrawRng(std::uint64_t seed) : DrawRng(seed, 0) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller; one value per call, pair cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace stakemkt
