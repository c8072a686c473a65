#ifndef OOBSIM_RNG_HPP
#define OOBSIM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "oobsim/bitstring.hpp"
#include "oobsim/common.hpp"
#include "oobsim/hash.hpp"

namespace oobsim {

// Protocol-side randomness is a labelled hash chain rather than a sequential
// stream: every draw is independent of draw order, which keeps sessions
// reproducible and localized under fault injection.

inline Bytes derive_bytes(const Bytes& seed, std::string_view label, std::size_t n) {
    Bytes out;
    out.reserve(n);
    for (std::uint32_t block = 0; out.size() < n; ++block) {
        Bytes pre = seed;
        pre.push_back(0x00);
        pre.insert(pre.end(), label.begin(), label.end());
        append_u32_be(block, pre);
        Bytes digest = sha256(pre);
        for (std::uint8_t b : digest) {
            if (out.size() == n) break;
            out.push_back(b);
        }
    }
    return out;
}

inline BitString derive_bits(const Bytes& seed, std::string_view label, std::size_t k) {
    return BitString::from_bytes(derive_bytes(seed, label, (k + 7) / 8), k);
}

inline Bytes batch_seed_bytes(std::uint64_t seed) {
    static constexpr std::string_view tag = "oobsim.batch.v1.";
    Bytes pre(tag.begin(), tag.end());
    append_u64_le(seed, pre);
    return sha256(pre);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

/// Gaussian sampler with a fixed algorithm (Box-Muller) and fixed consumption
/// of two engine draws per pair, so streams stay aligned regardless of what
/// the standard library ships.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

    double next(double sigma) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * sigma;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return mag * std::cos(2.0 * M_PI * u2) * sigma;
    }

private:
    double uniform01() {
        // (0,1]: log() stays finite
        return (static_cast<double>(engine_() >> 11) + 1.0) * (1.0 / 9007199254740993.0);
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace oobsim

#endif  // OOBSIM_RNG_HPP
