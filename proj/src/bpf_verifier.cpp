// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#include "zcsd/bpf_verifier.hpp"

#include <deque>

namespace zcsd::bpf {

const char* to_string(ViolationKind k) {
    switch (k) {
    case ViolationKind::empty_program: return "empty program";
    case ViolationKind::unknown_opcode: return "unknown opcode";
    case ViolationKind::bad_register: return "register index out of range";
    case ViolationKind::r10_write: return "write to r10";
    case ViolationKind::jump_out_of_bounds: return "jump out of bounds";
    case ViolationKind::jump_into_wide_imm: return "jump into wide immediate pair";
    case ViolationKind::missing_wide_pair: return "wide immediate load missing second slot";
    case ViolationKind::unknown_helper: return "unknown helper";
    case ViolationKind::falls_off_end: return "falls off end";
    case ViolationKind::unreachable_exit: return "cannot reach EXIT";
    case ViolationKind::div_by_zero_imm: return "division by zero immediate";
    }
    return "violation";
}

bool VerifyReport::has(ViolationKind kind) const {
    for (const Violation& v : violations) {
        if (v.kind == kind) return true;
    }
    return false;
}

std::string VerifyReport::to_string() const {
    if (pass()) return "ok";
    std::string s;
    for (const Violation& v : violations) {
        s += "#" + std::to_string(v.index) + ": " + v.message + "\n";
    }
    return s;
}

namespace {

bool writes_dst(uint8_t opcode) {
    uint8_t c = opcode & 0x07;
    return c == cls::ALU32 || c == cls::ALU64 || c == cls::LDX || opcode == op::LDDW;
}

bool is_cond_jump(uint8_t opcode) {
    return (opcode & 0x07) == cls::JMP && opcode != op::JA && opcode != op::CALL &&
           opcode != op::EXIT;
}

} // namespace

VerifyReport verify(const Program& program, const VmConfig& config) {
    VerifyReport report;
    auto add = [&](size_t index, ViolationKind kind, std::string extra = {}) {
        std::string msg = to_string(kind);
        if (!extra.empty()) msg += ": " + extra;
        report.violations.push_back(Violation{index, kind, std::move(msg)});
    };

    const auto& insns = program.insns;
    const size_t n = insns.size();
    if (n == 0) {
        add(0, ViolationKind::empty_program);
        return report;
    }
    const std::vector<bool> cont = wide_continuation_marks(insns);

    // successors[i]: static CFG edges of slot i (valid targets only)
    std::vector<std::vector<size_t>> successors(n);
    std::vector<bool> is_exit(n, false);

    auto add_fallthrough = [&](size_t i, size_t next) {
        if (next >= n) {
            add(i, ViolationKind::falls_off_end);
        } else {
            successors[i].push_back(next);
        }
    };
    auto add_jump_edge = [&](size_t i) {
        int64_t target = static_cast<int64_t>(i) + 1 + insns[i].offset;
        if (target < 0 || static_cast<size_t>(target) >= n) {
            add(i, ViolationKind::jump_out_of_bounds,
                "target " + std::to_string(target) + " of " + std::to_string(n) + " instructions");
        } else if (cont[static_cast<size_t>(target)]) {
            add(i, ViolationKind::jump_into_wide_imm);
        } else {
            successors[i].push_back(static_cast<size_t>(target));
        }
    };

    for (size_t i = 0; i < n; ++i) {
        if (cont[i]) continue;    // data slot of a wide load
        const Instruction& in = insns[i];

        if (!is_supported_opcode(in.opcode)) {
            add(i, ViolationKind::unknown_opcode, std::to_string(static_cast<unsigned>(in.opcode)));
            continue;    // no semantics to derive edges from
        }
        if (in.dst >= kRegCount || in.src >= kRegCount) {
            add(i, ViolationKind::bad_register);
        } else if (in.dst == 10 && writes_dst(in.opcode)) {
            add(i, ViolationKind::r10_write);
        }
        if ((in.opcode == op::DIV64_IMM || in.opcode == op::DIV32_IMM ||
             in.opcode == op::MOD64_IMM || in.opcode == op::MOD32_IMM) &&
            in.imm == 0) {
            add(i, ViolationKind::div_by_zero_imm);
        }

        if (in.opcode == op::EXIT) {
            is_exit[i] = true;
        } else if (in.opcode == op::JA) {
            add_jump_edge(i);
        } else if (is_cond_jump(in.opcode)) {
            add_jump_edge(i);
            add_fallthrough(i, i + 1);
        } else if (in.opcode == op::CALL) {
            uint32_t helper_id = static_cast<uint32_t>(in.imm);
            if (config.helper_table.find(helper_id) == config.helper_table.end()) {
                add(i, ViolationKind::unknown_helper, "id " + std::to_string(helper_id));
            }
            add_fallthrough(i, i + 1);
        } else if (is_wide_load(in)) {
            if (i + 1 >= n) {
                add(i, ViolationKind::missing_wide_pair);
            } else {
                add_fallthrough(i, i + 2);
            }
        } else {
            add_fallthrough(i, i + 1);
        }
    }

    // Every instruction must be able to reach an EXIT along some static path.
    std::vector<std::vector<size_t>> predecessors(n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t s : successors[i]) predecessors[s].push_back(i);
    }
    std::vector<bool> reaches_exit(n, false);
    std::deque<size_t> queue;
    for (size_t i = 0; i < n; ++i) {
        if (is_exit[i]) {
            reaches_exit[i] = true;
            queue.push_back(i);
        }
    }
    while (!queue.empty()) {
        size_t cur = queue.front();
        queue.pop_front();
        for (size_t p : predecessors[cur]) {
            if (!reaches_exit[p]) {
                reaches_exit[p] = true;
                queue.push_back(p);
            }
        }
    }
    for (size_t i = 0; i < n; ++i) {
        if (cont[i] || reaches_exit[i]) continue;
        // Slots already flagged for a bad edge carry the more precise message.
        bool already_flagged = false;
        for (const Violation& v : report.violations) {
            if (v.index == i) {
                already_flagged = true;
                break;
            }
        }
        if (!already_flagged) {
            add(i, ViolationKind::unreachable_exit);
        }
    }
    return report;
}

} // namespace zcsd::bpf
