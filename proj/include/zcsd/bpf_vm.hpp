// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "zcsd/bpf_insn.hpp"

namespace zcsd::bpf {

enum class FaultKind {
    budget_exceeded,
    mem_fault,
    div_by_zero,
    helper_fault,
    unknown_opcode,
    unknown_helper,
    bad_jump,
    fell_off_end,
    bad_register,
};

const char* to_string(FaultKind k);

class VmFault : public std::runtime_error {
public:
    VmFault(FaultKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    FaultKind kind() const { return kind_; }

private:
    FaultKind kind_;
};

class ExecContext;

// Helper binding: receives the execution context (for sandboxed memory
// access) and the argument registers r1..r5; the return value lands in r0.
// Faults are raised as VmFault.
using HelperFn = std::function<uint64_t(ExecContext&, const std::array<uint64_t, 5>&)>;

struct VmConfig {
    uint64_t max_instructions = 1'000'000;
    uint64_t stack_size = 512;
    std::map<uint32_t, HelperFn> helper_table;
};

// Program-visible addresses are synthetic: the stack and the shared region
// live at fixed bases in a private 64-bit space, so results never depend on
// host pointer values and out-of-sandbox addresses have nowhere to land.
constexpr uint64_t kStackBase = 0x1'0000'0000ULL;
constexpr uint64_t kSharedBase = 0x2'0000'0000ULL;

// Per-run machine state: registers, stack, the shared region handed to the
// program, and execution counters. Single run, single thread.
class ExecContext {
public:
    // Owns a stack of `stack_size` bytes; `shared` is caller-owned scratch
    // memory exposed to the program.
    ExecContext(uint64_t stack_size, std::span<std::byte> shared)
        : owned_stack_(stack_size), stack_(owned_stack_), shared_(shared) {
        regs[10] = kStackBase + stack_.size();
    }

    // Caller-owned stack, used to wrap the region in canary bytes.
    ExecContext(std::span<std::byte> stack, std::span<std::byte> shared)
        : stack_(stack), shared_(shared) {
        regs[10] = kStackBase + stack_.size();
    }

    ExecContext(const ExecContext&) = delete;
    ExecContext& operator=(const ExecContext&) = delete;

    // r1..r9 start at 0 unless the embedder sets them; r10 is the stack top.
    std::array<uint64_t, 11> regs{};

    uint64_t instructions_executed = 0;
    uint64_t helper_calls = 0;

    uint64_t stack_top() const { return kStackBase + stack_.size(); }
    uint64_t shared_base() const { return kSharedBase; }
    uint64_t shared_size() const { return shared_.size(); }
    std::span<std::byte> shared_region() { return shared_; }

    // Translates a program address range to host memory; the range must lie
    // entirely within the stack or the shared region.
    std::byte* deref(uint64_t vaddr, uint64_t len) {
        if (len == 0) return nullptr;
        if (vaddr >= kStackBase && len <= stack_.size() && vaddr - kStackBase <= stack_.size() - len) {
            return stack_.data() + (vaddr - kStackBase);
        }
        if (vaddr >= kSharedBase && len <= shared_.size() &&
            vaddr - kSharedBase <= shared_.size() - len) {
            return shared_.data() + (vaddr - kSharedBase);
        }
        throw VmFault(FaultKind::mem_fault, "access of " + std::to_string(len) + " bytes at 0x" +
                                                to_hex64(vaddr) + " is outside the sandbox");
    }

private:
    static std::string to_hex64(uint64_t v);

    std::vector<std::byte> owned_stack_;
    std::span<std::byte> stack_;
    std::span<std::byte> shared_;
};

// Interprets `program` until EXIT and returns r0. The caller is expected to
// have run the verifier; the interpreter still faults (rather than
// misbehaving) on anything the verifier would have rejected.
uint64_t execute(const Program& program, const VmConfig& config, ExecContext& ctx);

} // namespace zcsd::bpf
