// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#include "zcsd/bpf_vm.hpp"

#include <cstring>

#include "zcsd/bytes.hpp"

namespace zcsd::bpf {

const char* to_string(FaultKind k) {
    switch (k) {
    case FaultKind::budget_exceeded: return "BudgetExceeded";
    case FaultKind::mem_fault: return "MemFault";
    case FaultKind::div_by_zero: return "DivByZero";
    case FaultKind::helper_fault: return "HelperFault";
    case FaultKind::unknown_opcode: return "UnknownOpcode";
    case FaultKind::unknown_helper: return "UnknownHelper";
    case FaultKind::bad_jump: return "BadJump";
    case FaultKind::fell_off_end: return "FellOffEnd";
    case FaultKind::bad_register: return "BadRegister";
    }
    return "VmFault";
}

std::string ExecContext::to_hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

namespace {

[[noreturn]] void fault(FaultKind kind, size_t pc, const std::string& what) {
    throw VmFault(kind, what + " (at instruction " + std::to_string(pc) + ")");
}

inline uint64_t zext32(uint64_t v) { return v & 0xffffffffULL; }

inline void check_readable(uint8_t reg, size_t pc) {
    if (reg >= kRegCount) fault(FaultKind::bad_register, pc, "register index out of range");
}

inline void check_writable(uint8_t reg, size_t pc) {
    if (reg >= kRegCount) fault(FaultKind::bad_register, pc, "register index out of range");
    if (reg == 10) fault(FaultKind::bad_register, pc, "write to r10");
}

uint64_t alu_op(uint8_t operation, bool is64, uint64_t lhs, uint64_t rhs, size_t pc) {
    if (!is64) {
        lhs = zext32(lhs);
        rhs = zext32(rhs);
    }
    switch (operation) {
    case 0x00: return is64 ? lhs + rhs : zext32(lhs + rhs);                         // ADD
    case 0x10: return is64 ? lhs - rhs : zext32(lhs - rhs);                         // SUB
    case 0x20: return is64 ? lhs * rhs : zext32(lhs * rhs);                         // MUL
    case 0x30:                                                                       // DIV
        if (rhs == 0) fault(FaultKind::div_by_zero, pc, "division by zero");
        return lhs / rhs;
    case 0x40: return lhs | rhs;                                                     // OR
    case 0x50: return lhs & rhs;                                                     // AND
    case 0x60: return is64 ? lhs << (rhs & 63) : zext32(lhs << (rhs & 31));          // LSH
    case 0x70: return is64 ? lhs >> (rhs & 63) : zext32(lhs) >> (rhs & 31);          // RSH
    case 0x80: return is64 ? ~lhs + 1 : zext32(~lhs + 1);                            // NEG
    case 0x90:                                                                       // MOD
        if (rhs == 0) fault(FaultKind::div_by_zero, pc, "modulo by zero");
        return lhs % rhs;
    case 0xa0: return lhs ^ rhs;                                                     // XOR
    case 0xb0: return is64 ? rhs : zext32(rhs);                                      // MOV
    case 0xc0:                                                                       // ARSH
        if (is64) return static_cast<uint64_t>(static_cast<int64_t>(lhs) >> (rhs & 63));
        return zext32(static_cast<uint64_t>(static_cast<int32_t>(lhs) >> (rhs & 31)));
    default:
        fault(FaultKind::unknown_opcode, pc, "unsupported alu operation");
    }
}

bool jump_taken(uint8_t operation, uint64_t lhs, uint64_t rhs, size_t pc) {
    int64_t slhs = static_cast<int64_t>(lhs);
    int64_t srhs = static_cast<int64_t>(rhs);
    switch (operation) {
    case 0x10: return lhs == rhs;            // JEQ
    case 0x20: return lhs > rhs;             // JGT
    case 0x30: return lhs >= rhs;            // JGE
    case 0x40: return (lhs & rhs) != 0;      // JSET
    case 0x50: return lhs != rhs;            // JNE
    case 0x60: return slhs > srhs;           // JSGT
    case 0x70: return slhs >= srhs;          // JSGE
    case 0xa0: return lhs < rhs;             // JLT
    case 0xb0: return lhs <= rhs;            // JLE
    case 0xc0: return slhs < srhs;           // JSLT
    case 0xd0: return slhs <= srhs;          // JSLE
    default:
        fault(FaultKind::unknown_opcode, pc, "unsupported jump operation");
    }
}

inline uint64_t mem_width(uint8_t opcode, size_t pc) {
    switch (opcode & 0x18) {
    case 0x00: return 4;    // W
    case 0x08: return 2;    // H
    case 0x10: return 1;    // B
    case 0x18: return 8;    // DW
    }
    fault(FaultKind::unknown_opcode, pc, "bad width");
}

} // namespace

uint64_t execute(const Program& program, const VmConfig& config, ExecContext& ctx) {
    if (config.max_instructions == 0) {
        throw std::invalid_argument("max_instructions must be positive");
    }
    const size_t n = program.insns.size();
    auto& r = ctx.regs;
    size_t pc = 0;

    for (;;) {
        if (pc >= n) fault(FaultKind::fell_off_end, pc, "execution ran past the last instruction");
        if (ctx.instructions_executed >= config.max_instructions) {
            fault(FaultKind::budget_exceeded, pc,
                  "instruction budget of " + std::to_string(config.max_instructions) + " exhausted");
        }
        ++ctx.instructions_executed;

        const Instruction in = program.insns[pc];
        if (!is_supported_opcode(in.opcode)) {
            fault(FaultKind::unknown_opcode, pc,
                  "unknown opcode " + std::to_string(static_cast<unsigned>(in.opcode)));
        }

        switch (in.opcode & 0x07) {
        case cls::ALU64:
        case cls::ALU32: {
            check_writable(in.dst, pc);
            const bool is64 = (in.opcode & 0x07) == cls::ALU64;
            uint64_t rhs;
            if (in.opcode & 0x08) {
                check_readable(in.src, pc);
                rhs = r[in.src];
            } else {
                rhs = static_cast<uint64_t>(static_cast<int64_t>(in.imm));
            }
            r[in.dst] = alu_op(in.opcode & 0xf0, is64, r[in.dst], rhs, pc);
            ++pc;
            break;
        }
        case cls::JMP: {
            if (in.opcode == op::EXIT) {
                return r[0];
            }
            if (in.opcode == op::CALL) {
                uint32_t helper_id = static_cast<uint32_t>(in.imm);
                auto it = config.helper_table.find(helper_id);
                if (it == config.helper_table.end()) {
                    fault(FaultKind::unknown_helper, pc,
                          "no helper bound for id " + std::to_string(helper_id));
                }
                ++ctx.helper_calls;
                r[0] = it->second(ctx, {r[1], r[2], r[3], r[4], r[5]});
                ++pc;
                break;
            }
            bool taken;
            if (in.opcode == op::JA) {
                taken = true;
            } else {
                check_readable(in.dst, pc);
                uint64_t rhs;
                if (in.opcode & 0x08) {
                    check_readable(in.src, pc);
                    rhs = r[in.src];
                } else {
                    rhs = static_cast<uint64_t>(static_cast<int64_t>(in.imm));
                }
                taken = jump_taken(in.opcode & 0xf0, r[in.dst], rhs, pc);
            }
            if (taken) {
                int64_t target = static_cast<int64_t>(pc) + 1 + in.offset;
                if (target < 0 || static_cast<size_t>(target) >= n) {
                    fault(FaultKind::bad_jump, pc, "jump target out of bounds");
                }
                pc = static_cast<size_t>(target);
            } else {
                ++pc;
            }
            break;
        }
        case cls::LD: {    // LDDW
            check_writable(in.dst, pc);
            if (pc + 1 >= n) {
                fault(FaultKind::fell_off_end, pc, "wide immediate load missing its second slot");
            }
            uint64_t lo = static_cast<uint32_t>(in.imm);
            uint64_t hi = static_cast<uint32_t>(program.insns[pc + 1].imm);
            r[in.dst] = lo | (hi << 32);
            pc += 2;
            break;
        }
        case cls::LDX: {
            check_writable(in.dst, pc);
            check_readable(in.src, pc);
            uint64_t width = mem_width(in.opcode, pc);
            uint64_t addr = r[in.src] + static_cast<uint64_t>(static_cast<int64_t>(in.offset));
            const std::byte* p = ctx.deref(addr, width);
            switch (width) {
            case 1: r[in.dst] = static_cast<uint8_t>(*p); break;
            case 2: r[in.dst] = load_le16(p); break;
            case 4: r[in.dst] = load_le32(p); break;
            case 8: r[in.dst] = load_le64(p); break;
            }
            ++pc;
            break;
        }
        case cls::ST:
        case cls::STX: {
            check_readable(in.dst, pc);
            uint64_t value;
            if ((in.opcode & 0x07) == cls::STX) {
                check_readable(in.src, pc);
                value = r[in.src];
            } else {
                value = static_cast<uint64_t>(static_cast<int64_t>(in.imm));
            }
            uint64_t width = mem_width(in.opcode, pc);
            uint64_t addr = r[in.dst] + static_cast<uint64_t>(static_cast<int64_t>(in.offset));
            std::byte* p = ctx.deref(addr, width);
            switch (width) {
            case 1: *p = static_cast<std::byte>(value); break;
            case 2: store_le16(p, static_cast<uint16_t>(value)); break;
            case 4: store_le32(p, static_cast<uint32_t>(value)); break;
            case 8: store_le64(p, value); break;
            }
            ++pc;
            break;
        }
        default:
            fault(FaultKind::unknown_opcode, pc, "unsupported instruction class");
        }
    }
}

} // namespace zcsd::bpf
