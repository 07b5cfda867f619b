// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "zcsd/bpf_verifier.hpp"
#include "zcsd/bpf_vm.hpp"
#include "zcsd/sha256.hpp"
#include "zcsd/zns_device.hpp"

namespace zcsd {

enum class CsdErrc {
    parse_error,
    verify_failed,
    exec_fault,
    no_native_kernel,
    duplicate_digest,
    no_result,
};

const char* to_string(CsdErrc c);

class CsdError : public std::runtime_error {
public:
    CsdError(CsdErrc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    CsdError(CsdErrc code, const std::string& what, bpf::VerifyReport report)
        : CsdError(code, what) {
        verify_report_ = std::move(report);
    }

    CsdErrc code() const { return code_; }
    const std::optional<bpf::VerifyReport>& verify_report() const { return verify_report_; }

private:
    CsdErrc code_;
    std::optional<bpf::VerifyReport> verify_report_;
};

// Per-run accounting. Phase wall times are keyed by phase name ("parse",
// "verify", "exec"). Byte counters track helper-mediated I/O only.
struct Stats {
    std::map<std::string, uint64_t> phase_micros;
    uint64_t instructions_executed = 0;
    uint64_t helper_calls = 0;
    uint64_t bytes_read_device = 0;    // pulled from media via the read helper
    uint64_t bytes_to_host = 0;        // placed in the result buffer

    uint64_t data_movement_saved() const {
        return bytes_read_device > bytes_to_host ? bytes_read_device - bytes_to_host : 0;
    }

    bool operator==(const Stats&) const = default;
};

enum class ExecMode { Interpreted, NativeKernel };

const char* to_string(ExecMode m);

class NvmCsd;

// Helper surface handed to native kernels: the same four operations the
// bytecode sees, with identical stats accounting, minus the bytecode sandbox.
class KernelEnv {
public:
    // helper 1 analog: append bytes to the run's result buffer
    void return_data(std::span<const std::byte> data);
    // helper 2 analog: copy `limit` bytes of block `lba` at `offset` into dest
    void read(uint64_t lba, uint64_t offset, uint64_t limit, std::byte* dest);
    // helper 3 analog
    uint64_t lba_size() const;
    // helper 4 analog: device-side scratch region
    std::span<std::byte> mem_region();

private:
    friend class NvmCsd;
    explicit KernelEnv(NvmCsd& csd) : csd_(csd) {}
    NvmCsd& csd_;
};

using NativeKernel = std::function<void(KernelEnv&)>;

struct NvmCsdOptions {
    uint64_t shared_region_size = 64 * 1024;    // must be >= device block_size
    uint64_t max_instructions = 10'000'000;
    uint64_t stack_size = 512;
};

// The offload engine: binds the bytecode VM to a zoned device. Programs
// arrive as ZBPF images; Interpreted mode decodes, verifies, and interprets
// them, NativeKernel mode dispatches to a pre-registered host function with
// the same observable behavior (no per-instruction dispatch, no per-access
// bounds checks).
//
// Helper ABI (stable between program images and the engine):
//   id 1  bpf_return_data(r1 = data address, r2 = size)
//   id 2  bpf_read(r1 = lba, r2 = byte offset, r3 = limit (<= 0xFFFF),
//                  r4 = destination address)
//   id 3  bpf_get_lba_size() -> r0 = block size in bytes
//   id 4  bpf_get_mem_info(r1 = address of a u64 receiving the region size)
//                  -> r0 = region base address
// Arguments are taken from r1..r5 in declaration order, the result is
// returned in r0; r1..r5 are preserved across calls.
class NvmCsd {
public:
    // The device must outlive the engine. One engine runs one offload at a
    // time; concurrent calls are serialized.
    explicit NvmCsd(ZnsDevice& device, NvmCsdOptions options = {});

    // Runs a program image synchronously. Returns the result size in bytes.
    // A failed run leaves no result and the device untouched.
    uint64_t nvm_cmd_bpf_run(std::span<const uint8_t> image_bytes, ExecMode mode);

    // Copy of the last successful run's result; idempotent until the next run.
    std::vector<uint8_t> nvm_cmd_bpf_result() const;

    // Registers a host function to stand in for the image with this digest.
    void register_native_kernel(const Digest256& image_digest, NativeKernel kernel);

    Stats stats_snapshot() const;

    const ZnsDevice& device() const { return dev_; }
    uint64_t shared_region_size() const { return scratch_.size(); }
    uint64_t max_instructions() const { return opts_.max_instructions; }
    void set_max_instructions(uint64_t budget);

    static constexpr uint64_t kResultBufferCap = 1 << 20;
    static constexpr uint64_t kReadLimitMax = 0xFFFF;

private:
    friend class KernelEnv;

    uint64_t run_locked(std::span<const uint8_t> image_bytes, ExecMode mode);
    void append_result(const std::byte* data, uint64_t size);
    uint64_t helper_return_data(bpf::ExecContext& ctx, const std::array<uint64_t, 5>& args);
    uint64_t helper_read(bpf::ExecContext& ctx, const std::array<uint64_t, 5>& args);
    uint64_t helper_get_mem_info(bpf::ExecContext& ctx, const std::array<uint64_t, 5>& args);

    ZnsDevice& dev_;
    NvmCsdOptions opts_;
    std::vector<std::byte> scratch_;
    bpf::VmConfig vm_config_;
    std::map<Digest256, NativeKernel> kernels_;
    std::vector<uint8_t> result_;
    bool has_result_ = false;
    Stats stats_;
    mutable std::mutex mu_;
};

} // namespace zcsd
