// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "zcsd/bpf_insn.hpp"
#include "zcsd/bpf_vm.hpp"

namespace zcsd::bpf {

enum class ViolationKind {
    empty_program,
    unknown_opcode,
    bad_register,
    r10_write,
    jump_out_of_bounds,
    jump_into_wide_imm,
    missing_wide_pair,
    unknown_helper,
    falls_off_end,
    unreachable_exit,
    div_by_zero_imm,
};

const char* to_string(ViolationKind k);

struct Violation {
    size_t index = 0;    // instruction slot the violation is anchored to
    ViolationKind kind = ViolationKind::unknown_opcode;
    std::string message;

    bool operator==(const Violation&) const = default;
};

struct VerifyReport {
    std::vector<Violation> violations;

    bool pass() const { return violations.empty(); }
    bool has(ViolationKind kind) const;
    std::string to_string() const;
};

// Structural checker: opcode subset membership, register ranges, jump
// targets, helper bindings, wide-load pairing, static div/mod-by-zero, and
// EXIT reachability over the static CFG (both branch outcomes possible).
// Memory safety is enforced dynamically by the interpreter.
VerifyReport verify(const Program& program, const VmConfig& config);

} // namespace zcsd::bpf
