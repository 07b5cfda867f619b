// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace zcsd {

enum class ZnsErrc {
    invalid_geometry,
    io_error,
    bad_zone_id,
    zone_full,
    overflow,
    unaligned_length,
    unwritten_read,
    out_of_range,
};

const char* to_string(ZnsErrc c);

class ZnsError : public std::runtime_error {
public:
    ZnsError(ZnsErrc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ZnsErrc code() const { return code_; }

private:
    ZnsErrc code_;
};

struct DeviceGeometry {
    uint64_t block_size = 4096;          // bytes per logical block (page)
    uint64_t zone_size = 16ull << 20;    // bytes per zone
    uint32_t zone_count = 4;

    uint64_t blocks_per_zone() const { return zone_size / block_size; }
    uint64_t total_blocks() const { return blocks_per_zone() * zone_count; }
    uint64_t total_bytes() const { return zone_size * zone_count; }

    // Throws ZnsError(invalid_geometry) unless: block_size is a power of
    // two, zone_size is a positive multiple of block_size, zone_count >= 1,
    // and the total capacity fits in 64 bits.
    void validate() const;

    bool operator==(const DeviceGeometry&) const = default;
};

enum class ZoneState : uint8_t { Empty = 0, Open = 1, Full = 2 };

const char* to_string(ZoneState s);

struct ZoneDescriptor {
    uint32_t zone_id = 0;
    ZoneState state = ZoneState::Empty;
    uint64_t write_pointer = 0;    // block index relative to zone start
    uint64_t start_lba = 0;        // absolute block index of zone start

    bool operator==(const ZoneDescriptor&) const = default;
};

// Emulated ZNS SSD: fixed geometry, append-only zones with one write pointer
// each, host-driven reset. Backed either by memory or by a file image that
// persists the zone table and data.
//
// File image layout (all integers little-endian):
//   offset 0   : magic "ZNSI"
//   offset 4   : u16 format version (1)
//   offset 6   : u16 reserved (0)
//   offset 8   : u64 block_size
//   offset 16  : u64 zone_size
//   offset 24  : u32 zone_count
//   offset 28  : zone table, zone_count entries of { u8 state, u64 wp }
//   offset 28 + 9*zone_count : data area, zone_count * zone_size bytes
//
// Commands are serialized internally: each append/read/reset/report takes
// effect at a single point in a total order, so the device may be shared
// across threads.
class ZnsDevice {
public:
    // Fresh memory-backed device, all zones Empty.
    static std::unique_ptr<ZnsDevice> create(const DeviceGeometry& geometry);
    // Fresh file-backed device; creates or truncates the image at `path`.
    static std::unique_ptr<ZnsDevice> create(const DeviceGeometry& geometry,
                                             const std::filesystem::path& path);
    // Opens an existing image, restoring zone table and data exactly.
    static std::unique_ptr<ZnsDevice> open(const std::filesystem::path& path);

    ~ZnsDevice();
    ZnsDevice(const ZnsDevice&) = delete;
    ZnsDevice& operator=(const ZnsDevice&) = delete;

    const DeviceGeometry& geometry() const { return geo_; }

    std::vector<ZoneDescriptor> zone_report() const;

    // Appends whole blocks at the zone's write pointer; all-or-nothing.
    // Returns the absolute LBA of the first block written.
    uint64_t zone_append(uint32_t zone_id, std::span<const std::byte> data);

    // Single-block read: offset + length must stay inside one block, and the
    // block must lie below its zone's write pointer.
    void read(uint64_t lba, uint64_t offset, uint64_t length, std::byte* dest) const;
    std::vector<std::byte> read(uint64_t lba, uint64_t offset, uint64_t length) const;

    // Moves the write pointer back to the zone start. Idempotent; previously
    // written blocks become unreadable (and may be overwritten by new
    // appends) but are not scrubbed.
    void zone_reset(uint32_t zone_id);

private:
    ZnsDevice(const DeviceGeometry& geo, int fd, std::vector<ZoneDescriptor> zones);

    void store_write(uint64_t byte_off, const std::byte* src, uint64_t len);
    void store_read(uint64_t byte_off, std::byte* dst, uint64_t len) const;
    void persist_zone_entry(uint32_t zone_id);
    uint64_t data_offset() const;

    DeviceGeometry geo_;
    std::vector<ZoneDescriptor> zones_;
    std::vector<std::byte> mem_;    // memory backing; empty when file-backed
    int fd_ = -1;                   // file backing; -1 when memory-backed
    mutable std::mutex mu_;
};

} // namespace zcsd
