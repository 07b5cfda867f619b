// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace zcsd {

using Digest256 = std::array<uint8_t, 32>;

// Streaming SHA-256 (FIPS 180-4). Used for program-image digests.
class Sha256 {
public:
    Sha256() { reset(); }

    void reset();
    void update(const void* data, size_t len);
    Digest256 finish();

    static Digest256 digest(std::span<const uint8_t> data) {
        Sha256 h;
        h.update(data.data(), data.size());
        return h.finish();
    }

private:
    void process_block(const uint8_t* block);

    uint32_t state_[8];
    uint64_t total_len_ = 0;
    uint8_t buf_[64];
    size_t buf_len_ = 0;
};

std::string to_hex(std::span<const uint8_t> bytes);

} // namespace zcsd
