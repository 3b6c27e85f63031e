#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace robustadapt {

/// Deterministic random generator used everywhere randomness is needed.
///
/// The sequence is pinned bit-exactly by construction and is independent of
/// the platform and the standard library:
///   - seeding:        state[0..3] = successive outputs of splitmix64(seed)
///   - next_u64:       xoshiro256++ (result = rotl(s0 + s3, 23) + s0)
///   - next_double:    (next_u64() >> 11) * 2^-53, uniform in [0, 1)
///   - uniform_below:  Lemire multiply-shift with rejection, unbiased
///   - gaussian:       Box-Muller on two uniform draws, second value cached
///   - shuffle:        Fisher-Yates from the back, one uniform_below per step
/// Identical seeds therefore give identical draw sequences on every machine.
/// An Rng is single-owner; parallel code derives one stream per work item via
/// Rng::derive instead of sharing an instance.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
    }

    /// Independent child stream keyed by (seed, stream). Mixing both inputs
    /// through splitmix64 keeps derive(a, b) and derive(b, a) distinct.
    static Rng derive(uint64_t seed, uint64_t stream) {
        uint64_t a = seed;
        uint64_t b = stream + 0x9E3779B97F4A7C15ull;
        return Rng(splitmix64(a) ^ splitmix64(b));
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Unbiased integer in [0, n). n must be >= 1.
    uint64_t uniform_below(uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto lo = static_cast<uint64_t>(m);
        if (lo < n) {
            const uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                lo = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    /// Standard normal draw.
    double gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        // Clamp u1 away from zero so log stays finite.
        const double u1 = std::max(next_double(), 0x1.0p-53);
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (size_t i = v.size() - 1; i > 0; --i) {
            const size_t j = static_cast<size_t>(uniform_below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    /// k distinct indices from [0, n) in draw order (partial Fisher-Yates).
    std::vector<size_t> sample_without_replacement(size_t n, size_t k) {
        std::vector<size_t> pool(n);
        for (size_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<size_t> out;
        out.reserve(k);
        for (size_t i = 0; i < k && i < n; ++i) {
            const size_t j = i + static_cast<size_t>(uniform_below(n - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static uint64_t splitmix64(uint64_t&& x) {
        uint64_t tmp = x;
        return splitmix64(tmp);
    }

    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    uint64_t state_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace robustadapt
