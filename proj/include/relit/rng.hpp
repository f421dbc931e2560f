// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <cstdint>

namespace relit {

// SplitMix64 finalizer; used to derive independent per-pixel streams.
inline uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(mix64(a) ^ b); }

// Minimal PCG32 (O'Neill, pcg-random.org). Each pixel gets its own stream,
// so results do not depend on how pixels are scheduled across threads.
class Pcg32 {
  public:
    Pcg32() { seed(0x853C49E6748FEA9Bull, 0xDA3E39CB94B95BDBull); }
    Pcg32(uint64_t init_state, uint64_t init_seq = 1) { seed(init_state, init_seq); }

    void seed(uint64_t init_state, uint64_t init_seq) {
        state_ = 0u;
        inc_ = (init_seq << 1u) | 1u;
        next_u32();
        state_ += init_state;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ull + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((~rot + 1u) & 31u));
    }

    // Uniform in [0, 1).
    double next_double() { return next_u32() * 0x1p-32; }

  private:
    uint64_t state_;
    uint64_t inc_;
};

// Stream for pixel (x, y) under a run seed. Hashing keeps streams
// independent of evaluation order.
inline Pcg32 pixel_rng(uint64_t seed, int x, int y, uint64_t stream = 0) {
    uint64_t key = (static_cast<uint64_t>(static_cast<uint32_t>(y)) << 32) |
                   static_cast<uint64_t>(static_cast<uint32_t>(x));
    return Pcg32(mix64(seed, key), mix64(key, stream ^ 0x5851F42D4C957F2Dull));
}

}  // namespace relit
