#ifndef REMLAB_RNG_HPP
#define REMLAB_RNG_HPP

#include <cstdint>
#include <cmath>
#include <string>
#include <vector>

namespace remlab {

// SplitMix64 finalizer (Steele/Lea/Flood; Vigna's fixed-increment variant).
// Used both as the stream generator and as the keyed mixing function that
// turns (seed, counter) into an independent 64-bit word.
inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
    return z ^ (z >> 31);
}

constexpr uint64_t kGolden = UINT64_C(0x9E3779B97F4A7C15);

// Counter-based word: pure function of (key, counter). Random access,
// O(1) state, replica-exact under any parallel schedule.
inline uint64_t keyed_word(uint64_t key, uint64_t counter) {
    return mix64(key + (counter + 1) * kGolden);
}

// Uniform in the open interval (0,1): (word + 0.5) / 2^64.
inline double u64_to_unit(uint64_t w) {
    return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

// A splittable stream: splitmix64 sequence whose key is derived by hashing
// an arbitrary list of identifiers (experiment seed, module tag, replica id).
class RngStream {
public:
    RngStream() : state_(0) {}
    explicit RngStream(uint64_t key) : state_(mix64(key ^ kGolden)) {}

    static uint64_t derive_key(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
        uint64_t k = mix64(seed + kGolden);
        k = mix64(k ^ (a + kGolden));
        k = mix64(k ^ (b + 2 * kGolden));
        k = mix64(k ^ (c + 3 * kGolden));
        return k;
    }

    uint64_t next_u64() {
        state_ += kGolden;
        return mix64(state_);
    }

    double next_unit() { return u64_to_unit(next_u64()); }

    // Exponential variate by inverse CDF, mean 1/rate.
    double next_exponential(double rate) { return -std::log(next_unit()) / rate; }

    // Uniform integer in [0, m).
    uint64_t next_below(uint64_t m) {
        // 128-bit multiply rejection-free shortcut (bias < 2^-64, irrelevant here,
        // but keep Lemire's method exact enough for index draws).
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * m) >> 64);
    }

private:
    uint64_t state_;
};

// Stream keying for a whole experiment: one master seed, per-(module, replica)
// derived streams. Recorded in output headers so reruns are bit-identical.
struct SeedLedger {
    uint64_t master = 0;

    RngStream stream(const std::string& module_tag, uint64_t replica) const {
        uint64_t tag = 0;
        for (char ch : module_tag) tag = mix64(tag ^ static_cast<uint64_t>(static_cast<unsigned char>(ch)));
        return RngStream(RngStream::derive_key(master, tag, replica));
    }
};

} // namespace remlab

#endif
