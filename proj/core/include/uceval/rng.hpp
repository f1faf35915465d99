#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace uceval {

// 64-bit FNV-1a. Used to hash question ids into seed material so that
// per-question random streams are stable across platforms and runs.
constexpr uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

constexpr uint64_t splitmix64_next(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic generator: a splitmix64 stream. All randomness in the
// harness flows through this so that (seed, question_id) fully determines
// every draw, independent of platform or standard library.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() { return splitmix64_next(state_); }

    // Uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Uniform in [0, bound). Bound must be > 0. Modulo bias is negligible
    // for the small bounds used here (<= a few thousand).
    uint64_t next_below(uint64_t bound) { return next() % bound; }

private:
    uint64_t state_;
};

// Stream seed for a named purpose tied to (seed, question_id). The mix is
// documented so independent reimplementations can reproduce draws:
//   state0 = seed XOR fnv1a64(question_id) XOR fnv1a64(purpose) XOR salt
inline SplitMix64 stream_for(uint64_t seed, std::string_view question_id,
                             std::string_view purpose, uint64_t salt = 0) {
    return SplitMix64(seed ^ fnv1a64(question_id) ^ fnv1a64(purpose) ^ salt);
}

// In-place Fisher-Yates, high index down, j = next() % (i + 1).
template <typename T>
void seeded_shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (size_t i = items.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace uceval
