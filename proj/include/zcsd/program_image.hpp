// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "zcsd/bpf_insn.hpp"
#include "zcsd/sha256.hpp"

namespace zcsd {

enum class ImageErrc {
    empty_program,
    bad_magic,
    unsupported_version,
    digest_mismatch,
    truncated_image,
    program_too_large,
};

const char* to_string(ImageErrc c);

class ImageError : public std::runtime_error {
public:
    ImageError(ImageErrc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    ImageErrc code() const { return code_; }

private:
    ImageErrc code_;
};

// Flat program container ("ZBPF", `.zbpf` on disk), all integers
// little-endian:
//   offset 0  : magic "ZBPF"
//   offset 4  : u16 version (1)
//   offset 6  : u16 flags (reserved, 0)
//   offset 8  : u32 insn_count
//   offset 12 : code, insn_count * 8 bytes
//   trailing  : SHA-256 over everything before it (header + code), 32 bytes
// Total length is exactly 12 + 8*insn_count + 32.
struct ProgramImage {
    uint16_t version = 1;
    uint16_t flags = 0;
    std::vector<uint8_t> code;    // insn_count * 8 bytes
    Digest256 digest{};

    uint32_t insn_count() const { return static_cast<uint32_t>(code.size() / bpf::kInsnBytes); }

    bool operator==(const ProgramImage&) const = default;
};

constexpr uint16_t kImageVersion = 1;
constexpr size_t kImageHeaderSize = 12;

// Packs instructions into image bytes (header + code + digest).
std::vector<uint8_t> encode_image(std::span<const bpf::Instruction> instructions);

// Parses and integrity-checks image bytes. Checks run in the order magic,
// length, digest, version, so any corruption of a valid image surfaces as
// BadMagic, TruncatedImage, or DigestMismatch.
ProgramImage decode_image(std::span<const uint8_t> bytes);

// Re-serializes a parsed image; serialize(decode_image(b)) == b.
std::vector<uint8_t> serialize(const ProgramImage& image);

} // namespace zcsd
