// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>

namespace zcsd {

// Little-endian loads/stores. All on-disk and wire integers in this project
// are little-endian regardless of host byte order.

inline uint16_t load_le16(const void* p) {
    const auto* b = static_cast<const unsigned char*>(p);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

inline uint32_t load_le32(const void* p) {
    const auto* b = static_cast<const unsigned char*>(p);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline uint64_t load_le64(const void* p) {
    const auto* b = static_cast<const unsigned char*>(p);
    return static_cast<uint64_t>(load_le32(b)) | (static_cast<uint64_t>(load_le32(b + 4)) << 32);
}

inline void store_le16(void* p, uint16_t v) {
    auto* b = static_cast<unsigned char*>(p);
    b[0] = static_cast<unsigned char>(v);
    b[1] = static_cast<unsigned char>(v >> 8);
}

inline void store_le32(void* p, uint32_t v) {
    auto* b = static_cast<unsigned char*>(p);
    b[0] = static_cast<unsigned char>(v);
    b[1] = static_cast<unsigned char>(v >> 8);
    b[2] = static_cast<unsigned char>(v >> 16);
    b[3] = static_cast<unsigned char>(v >> 24);
}

inline void store_le64(void* p, uint64_t v) {
    store_le32(p, static_cast<uint32_t>(v));
    store_le32(static_cast<unsigned char*>(p) + 4, static_cast<uint32_t>(v >> 32));
}

} // namespace zcsd
