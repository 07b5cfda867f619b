// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#include "zcsd/program_image.hpp"

#include <cstring>

#include "zcsd/bytes.hpp"

namespace zcsd {

namespace {
constexpr char kMagic[4] = {'Z', 'B', 'P', 'F'};
constexpr size_t kDigestSize = 32;
} // namespace

const char* to_string(ImageErrc c) {
    switch (c) {
    case ImageErrc::empty_program: return "EmptyProgram";
    case ImageErrc::bad_magic: return "BadMagic";
    case ImageErrc::unsupported_version: return "UnsupportedVersion";
    case ImageErrc::digest_mismatch: return "DigestMismatch";
    case ImageErrc::truncated_image: return "TruncatedImage";
    case ImageErrc::program_too_large: return "ProgramTooLarge";
    }
    return "ImageError";
}

std::vector<uint8_t> encode_image(std::span<const bpf::Instruction> instructions) {
    if (instructions.empty()) {
        throw ImageError(ImageErrc::empty_program, "an image must carry at least one instruction");
    }
    std::vector<uint8_t> code = bpf::encode(instructions);
    std::vector<uint8_t> out(kImageHeaderSize + code.size() + kDigestSize);
    std::memcpy(out.data(), kMagic, 4);
    store_le16(out.data() + 4, kImageVersion);
    store_le16(out.data() + 6, 0);
    store_le32(out.data() + 8, static_cast<uint32_t>(instructions.size()));
    std::memcpy(out.data() + kImageHeaderSize, code.data(), code.size());
    Digest256 digest = Sha256::digest({out.data(), kImageHeaderSize + code.size()});
    std::memcpy(out.data() + kImageHeaderSize + code.size(), digest.data(), kDigestSize);
    return out;
}

ProgramImage decode_image(std::span<const uint8_t> bytes) {
    if (bytes.size() < kImageHeaderSize) {
        throw ImageError(ImageErrc::truncated_image,
                         "image of " + std::to_string(bytes.size()) + " bytes has no full header");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw ImageError(ImageErrc::bad_magic, "not a program image");
    }
    uint32_t insn_count = load_le32(bytes.data() + 8);
    if (insn_count == 0) {
        throw ImageError(ImageErrc::truncated_image, "image declares zero instructions");
    }
    uint64_t expected =
        kImageHeaderSize + static_cast<uint64_t>(insn_count) * bpf::kInsnBytes + kDigestSize;
    if (bytes.size() != expected) {
        throw ImageError(ImageErrc::truncated_image,
                         "image length " + std::to_string(bytes.size()) + " does not match declared " +
                             std::to_string(expected));
    }
    size_t covered = bytes.size() - kDigestSize;
    Digest256 computed = Sha256::digest(bytes.first(covered));
    if (std::memcmp(computed.data(), bytes.data() + covered, kDigestSize) != 0) {
        throw ImageError(ImageErrc::digest_mismatch, "stored digest does not match content");
    }
    uint16_t version = load_le16(bytes.data() + 4);
    if (version != kImageVersion) {
        throw ImageError(ImageErrc::unsupported_version, "version " + std::to_string(version));
    }

    ProgramImage image;
    image.version = version;
    image.flags = load_le16(bytes.data() + 6);
    image.code.assign(bytes.begin() + kImageHeaderSize, bytes.begin() + static_cast<long>(covered));
    std::memcpy(image.digest.data(), bytes.data() + covered, kDigestSize);
    return image;
}

std::vector<uint8_t> serialize(const ProgramImage& image) {
    std::vector<uint8_t> out(kImageHeaderSize + image.code.size() + kDigestSize);
    std::memcpy(out.data(), kMagic, 4);
    store_le16(out.data() + 4, image.version);
    store_le16(out.data() + 6, image.flags);
    store_le32(out.data() + 8, image.insn_count());
    std::memcpy(out.data() + kImageHeaderSize, image.code.data(), image.code.size());
    std::memcpy(out.data() + kImageHeaderSize + image.code.size(), image.digest.data(), kDigestSize);
    return out;
}

} // namespace zcsd
