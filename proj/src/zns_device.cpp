// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#include "zcsd/zns_device.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "zcsd/bytes.hpp"

namespace zcsd {

namespace {

constexpr char kMagic[4] = {'Z', 'N', 'S', 'I'};
constexpr uint16_t kFormatVersion = 1;
constexpr uint64_t kHeaderSize = 28;
constexpr uint64_t kZoneEntrySize = 9;    // u8 state + u64 write pointer

[[noreturn]] void throw_errno(const std::string& what) {
    throw ZnsError(ZnsErrc::io_error, what + ": " + std::strerror(errno));
}

void pread_all(int fd, void* buf, size_t len, uint64_t off) {
    auto* p = static_cast<char*>(buf);
    while (len > 0) {
        ssize_t n = ::pread(fd, p, len, static_cast<off_t>(off));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("pread");
        }
        if (n == 0) throw ZnsError(ZnsErrc::io_error, "unexpected end of image file");
        p += n;
        len -= static_cast<size_t>(n);
        off += static_cast<uint64_t>(n);
    }
}

void pwrite_all(int fd, const void* buf, size_t len, uint64_t off) {
    const auto* p = static_cast<const char*>(buf);
    while (len > 0) {
        ssize_t n = ::pwrite(fd, p, len, static_cast<off_t>(off));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("pwrite");
        }
        p += n;
        len -= static_cast<size_t>(n);
        off += static_cast<uint64_t>(n);
    }
}

std::vector<ZoneDescriptor> fresh_zones(const DeviceGeometry& geo) {
    std::vector<ZoneDescriptor> zones(geo.zone_count);
    for (uint32_t i = 0; i < geo.zone_count; ++i) {
        zones[i] = ZoneDescriptor{i, ZoneState::Empty, 0, static_cast<uint64_t>(i) * geo.blocks_per_zone()};
    }
    return zones;
}

} // namespace

const char* to_string(ZnsErrc c) {
    switch (c) {
    case ZnsErrc::invalid_geometry: return "InvalidGeometry";
    case ZnsErrc::io_error: return "IoError";
    case ZnsErrc::bad_zone_id: return "BadZoneId";
    case ZnsErrc::zone_full: return "ZoneFull";
    case ZnsErrc::overflow: return "Overflow";
    case ZnsErrc::unaligned_length: return "UnalignedLength";
    case ZnsErrc::unwritten_read: return "UnwrittenRead";
    case ZnsErrc::out_of_range: return "OutOfRange";
    }
    return "ZnsError";
}

const char* to_string(ZoneState s) {
    switch (s) {
    case ZoneState::Empty: return "Empty";
    case ZoneState::Open: return "Open";
    case ZoneState::Full: return "Full";
    }
    return "?";
}

void DeviceGeometry::validate() const {
    if (block_size == 0 || (block_size & (block_size - 1)) != 0) {
        throw ZnsError(ZnsErrc::invalid_geometry, "block_size must be a power of two");
    }
    if (zone_size == 0 || zone_size % block_size != 0) {
        throw ZnsError(ZnsErrc::invalid_geometry, "zone_size must be a positive multiple of block_size");
    }
    if (zone_count == 0) {
        throw ZnsError(ZnsErrc::invalid_geometry, "zone_count must be >= 1");
    }
    if (zone_size > UINT64_MAX / zone_count) {
        throw ZnsError(ZnsErrc::invalid_geometry, "device capacity overflows");
    }
}

ZnsDevice::ZnsDevice(const DeviceGeometry& geo, int fd, std::vector<ZoneDescriptor> zones)
    : geo_(geo), zones_(std::move(zones)), fd_(fd) {
    if (fd_ < 0) {
        mem_.assign(geo_.total_bytes(), std::byte{0});
    }
}

ZnsDevice::~ZnsDevice() {
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

uint64_t ZnsDevice::data_offset() const {
    return kHeaderSize + kZoneEntrySize * geo_.zone_count;
}

std::unique_ptr<ZnsDevice> ZnsDevice::create(const DeviceGeometry& geometry) {
    geometry.validate();
    return std::unique_ptr<ZnsDevice>(new ZnsDevice(geometry, -1, fresh_zones(geometry)));
}

std::unique_ptr<ZnsDevice> ZnsDevice::create(const DeviceGeometry& geometry,
                                             const std::filesystem::path& path) {
    geometry.validate();
    int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw_errno("open " + path.string());

    auto dev = std::unique_ptr<ZnsDevice>(new ZnsDevice(geometry, fd, fresh_zones(geometry)));

    uint8_t header[kHeaderSize];
    std::memcpy(header, kMagic, 4);
    store_le16(header + 4, kFormatVersion);
    store_le16(header + 6, 0);
    store_le64(header + 8, geometry.block_size);
    store_le64(header + 16, geometry.zone_size);
    store_le32(header + 24, geometry.zone_count);
    pwrite_all(fd, header, sizeof(header), 0);
    for (uint32_t z = 0; z < geometry.zone_count; ++z) {
        dev->persist_zone_entry(z);
    }
    // Sparse data area: unwritten blocks are gated by the write pointer, so
    // they never need physical zeroes on disk.
    if (::ftruncate(fd, static_cast<off_t>(dev->data_offset() + geometry.total_bytes())) != 0) {
        throw_errno("ftruncate " + path.string());
    }
    return dev;
}

std::unique_ptr<ZnsDevice> ZnsDevice::open(const std::filesystem::path& path) {
    int fd = ::open(path.c_str(), O_RDWR);
    if (fd < 0) throw_errno("open " + path.string());

    uint8_t header[kHeaderSize];
    try {
        pread_all(fd, header, sizeof(header), 0);
    } catch (...) {
        ::close(fd);
        throw;
    }
    if (std::memcmp(header, kMagic, 4) != 0) {
        ::close(fd);
        throw ZnsError(ZnsErrc::io_error, "not a device image (bad magic)");
    }
    if (load_le16(header + 4) != kFormatVersion) {
        ::close(fd);
        throw ZnsError(ZnsErrc::io_error, "unsupported image version");
    }
    DeviceGeometry geo;
    geo.block_size = load_le64(header + 8);
    geo.zone_size = load_le64(header + 16);
    geo.zone_count = load_le32(header + 24);
    try {
        geo.validate();
    } catch (const ZnsError& e) {
        ::close(fd);
        throw ZnsError(ZnsErrc::io_error, std::string("corrupt image geometry: ") + e.what());
    }

    auto zones = fresh_zones(geo);
    try {
        std::vector<uint8_t> table(kZoneEntrySize * geo.zone_count);
        pread_all(fd, table.data(), table.size(), kHeaderSize);
        for (uint32_t z = 0; z < geo.zone_count; ++z) {
            const uint8_t* e = table.data() + kZoneEntrySize * z;
            uint8_t state = e[0];
            uint64_t wp = load_le64(e + 1);
            if (state > 2 || wp > geo.blocks_per_zone()) {
                throw ZnsError(ZnsErrc::io_error, "corrupt zone table entry");
            }
            ZoneState s = static_cast<ZoneState>(state);
            bool consistent = (s == ZoneState::Empty && wp == 0) ||
                              (s == ZoneState::Full && wp == geo.blocks_per_zone()) ||
                              (s == ZoneState::Open && wp > 0 && wp < geo.blocks_per_zone());
            if (!consistent) {
                throw ZnsError(ZnsErrc::io_error, "zone state inconsistent with write pointer");
            }
            zones[z].state = s;
            zones[z].write_pointer = wp;
        }
        struct stat st;
        if (::fstat(fd, &st) != 0) throw_errno("fstat");
        uint64_t expected = kHeaderSize + kZoneEntrySize * geo.zone_count + geo.total_bytes();
        if (static_cast<uint64_t>(st.st_size) != expected) {
            throw ZnsError(ZnsErrc::io_error, "image file size does not match geometry");
        }
    } catch (...) {
        ::close(fd);
        throw;
    }
    return std::unique_ptr<ZnsDevice>(new ZnsDevice(geo, fd, std::move(zones)));
}

void ZnsDevice::store_write(uint64_t byte_off, const std::byte* src, uint64_t len) {
    if (fd_ >= 0) {
        pwrite_all(fd_, src, len, data_offset() + byte_off);
    } else {
        std::memcpy(mem_.data() + byte_off, src, len);
    }
}

void ZnsDevice::store_read(uint64_t byte_off, std::byte* dst, uint64_t len) const {
    if (fd_ >= 0) {
        pread_all(fd_, dst, len, data_offset() + byte_off);
    } else {
        std::memcpy(dst, mem_.data() + byte_off, len);
    }
}

void ZnsDevice::persist_zone_entry(uint32_t zone_id) {
    if (fd_ < 0) return;
    uint8_t entry[kZoneEntrySize];
    entry[0] = static_cast<uint8_t>(zones_[zone_id].state);
    store_le64(entry + 1, zones_[zone_id].write_pointer);
    pwrite_all(fd_, entry, sizeof(entry), kHeaderSize + kZoneEntrySize * zone_id);
}

std::vector<ZoneDescriptor> ZnsDevice::zone_report() const {
    std::lock_guard<std::mutex> lock(mu_);
    return zones_;
}

uint64_t ZnsDevice::zone_append(uint32_t zone_id, std::span<const std::byte> data) {
    std::lock_guard<std::mutex> lock(mu_);
    if (zone_id >= geo_.zone_count) {
        throw ZnsError(ZnsErrc::bad_zone_id, "zone " + std::to_string(zone_id));
    }
    if (data.empty() || data.size() % geo_.block_size != 0) {
        throw ZnsError(ZnsErrc::unaligned_length,
                       "append length must be a positive multiple of block_size");
    }
    ZoneDescriptor& zone = zones_[zone_id];
    uint64_t blocks = data.size() / geo_.block_size;
    uint64_t room = geo_.blocks_per_zone() - zone.write_pointer;
    if (room == 0) {
        throw ZnsError(ZnsErrc::zone_full, "zone " + std::to_string(zone_id) + " is full");
    }
    if (blocks > room) {
        throw ZnsError(ZnsErrc::overflow, "append of " + std::to_string(blocks) + " blocks exceeds " +
                                              std::to_string(room) + " remaining");
    }
    uint64_t old_wp = zone.write_pointer;
    store_write(static_cast<uint64_t>(zone_id) * geo_.zone_size + old_wp * geo_.block_size,
                data.data(), data.size());
    zone.write_pointer += blocks;
    zone.state = zone.write_pointer == geo_.blocks_per_zone() ? ZoneState::Full : ZoneState::Open;
    persist_zone_entry(zone_id);
    return zone.start_lba + old_wp;
}

void ZnsDevice::read(uint64_t lba, uint64_t offset, uint64_t length, std::byte* dest) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (lba >= geo_.total_blocks()) {
        throw ZnsError(ZnsErrc::out_of_range, "lba " + std::to_string(lba) + " beyond device");
    }
    if (offset > geo_.block_size || length > geo_.block_size - offset) {
        throw ZnsError(ZnsErrc::out_of_range, "read crosses block boundary");
    }
    uint64_t zone_id = lba / geo_.blocks_per_zone();
    uint64_t rel = lba % geo_.blocks_per_zone();
    if (rel >= zones_[zone_id].write_pointer) {
        throw ZnsError(ZnsErrc::unwritten_read,
                       "block " + std::to_string(lba) + " is at or beyond the write pointer");
    }
    if (length == 0) return;
    store_read(lba * geo_.block_size + offset, dest, length);
}

std::vector<std::byte> ZnsDevice::read(uint64_t lba, uint64_t offset, uint64_t length) const {
    std::vector<std::byte> out(length);
    read(lba, offset, length, out.data());
    return out;
}

void ZnsDevice::zone_reset(uint32_t zone_id) {
    std::lock_guard<std::mutex> lock(mu_);
    if (zone_id >= geo_.zone_count) {
        throw ZnsError(ZnsErrc::bad_zone_id, "zone " + std::to_string(zone_id));
    }
    zones_[zone_id].state = ZoneState::Empty;
    zones_[zone_id].write_pointer = 0;
    persist_zone_entry(zone_id);
}

} // namespace zcsd
