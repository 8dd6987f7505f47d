#pragma once

#include <cstdint>

namespace sspmc {

/// Finalizer used both as the SplitMix64 output function and as the stream
/// key mixer. Standard constants from the public SplitMix64 reference.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based generator: one instance per episode stream. Cheap to
/// construct, so a fresh generator is derived for every episode, which makes
/// the sampled trajectories independent of scheduling and thread count.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t key) : state_(key) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

/// Identifies one episode stream: every (seed, state, action, iteration,
/// episode) tuple maps to a bit-reproducible episode.
struct StreamId {
    std::uint64_t state = 0;
    std::uint64_t action = 0;
    std::uint64_t iteration = 0;
    std::uint64_t episode = 0;
};

/// Key shared by all episodes of one (state, action, iteration) sweep.
inline std::uint64_t stream_base_key(std::uint64_t seed, std::uint64_t state,
                                     std::uint64_t action, std::uint64_t iteration) {
    std::uint64_t k = mix64(seed);
    k = mix64(k ^ state);
    k = mix64(k ^ action);
    k = mix64(k ^ iteration);
    return k;
}

inline std::uint64_t stream_key(std::uint64_t seed, const StreamId& id) {
    return mix64(stream_base_key(seed, id.state, id.action, id.iteration) ^ id.episode);
}

inline SplitMix64 episode_rng(std::uint64_t seed, const StreamId& id) {
    return SplitMix64(stream_key(seed, id));
}

}  // namespace sspmc
