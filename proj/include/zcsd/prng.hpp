// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace zcsd {

// SplitMix64: 64-bit-state generator with a fixed odd increment and a
// finalizing mixer. The workload fill is defined in terms of this exact
// stream so results are reproducible across implementations and languages:
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9
//   z = (z ^ z>>27) * 0x94D049BB133111EB; output = z ^ z>>31
// Each output supplies two 32-bit samples, low word first, serialized
// little-endian.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    uint64_t state_;
};

} // namespace zcsd
