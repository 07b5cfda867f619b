// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace zcsd::bpf {

// One 8-byte instruction slot:
//   byte 0    : opcode
//   byte 1    : dst register (low nibble), src register (high nibble)
//   bytes 2-3 : signed 16-bit offset, little-endian
//   bytes 4-7 : signed 32-bit immediate, little-endian
struct Instruction {
    uint8_t opcode = 0;
    uint8_t dst = 0;
    uint8_t src = 0;
    int16_t offset = 0;
    int32_t imm = 0;

    bool operator==(const Instruction&) const = default;
};

constexpr size_t kInsnBytes = 8;
constexpr uint8_t kRegCount = 11;    // r0..r10; r10 is the read-only stack pointer

// Instruction classes (low 3 opcode bits).
namespace cls {
constexpr uint8_t LD = 0x00;
constexpr uint8_t LDX = 0x01;
constexpr uint8_t ST = 0x02;
constexpr uint8_t STX = 0x03;
constexpr uint8_t ALU32 = 0x04;
constexpr uint8_t JMP = 0x05;
constexpr uint8_t ALU64 = 0x07;
} // namespace cls

// Supported opcodes. ALU ops exist in 64-bit (class 0x07) and 32-bit
// (class 0x04) forms; x-suffixed variants take the source register, the
// others take the immediate. 32-bit ops zero-extend their result.
namespace op {
// ALU64
constexpr uint8_t ADD64_IMM = 0x07, ADD64_REG = 0x0f;
constexpr uint8_t SUB64_IMM = 0x17, SUB64_REG = 0x1f;
constexpr uint8_t MUL64_IMM = 0x27, MUL64_REG = 0x2f;
constexpr uint8_t DIV64_IMM = 0x37, DIV64_REG = 0x3f;
constexpr uint8_t OR64_IMM = 0x47, OR64_REG = 0x4f;
constexpr uint8_t AND64_IMM = 0x57, AND64_REG = 0x5f;
constexpr uint8_t LSH64_IMM = 0x67, LSH64_REG = 0x6f;
constexpr uint8_t RSH64_IMM = 0x77, RSH64_REG = 0x7f;
constexpr uint8_t NEG64 = 0x87;
constexpr uint8_t MOD64_IMM = 0x97, MOD64_REG = 0x9f;
constexpr uint8_t XOR64_IMM = 0xa7, XOR64_REG = 0xaf;
constexpr uint8_t MOV64_IMM = 0xb7, MOV64_REG = 0xbf;
constexpr uint8_t ARSH64_IMM = 0xc7, ARSH64_REG = 0xcf;
// ALU32
constexpr uint8_t ADD32_IMM = 0x04, ADD32_REG = 0x0c;
constexpr uint8_t SUB32_IMM = 0x14, SUB32_REG = 0x1c;
constexpr uint8_t MUL32_IMM = 0x24, MUL32_REG = 0x2c;
constexpr uint8_t DIV32_IMM = 0x34, DIV32_REG = 0x3c;
constexpr uint8_t OR32_IMM = 0x44, OR32_REG = 0x4c;
constexpr uint8_t AND32_IMM = 0x54, AND32_REG = 0x5c;
constexpr uint8_t LSH32_IMM = 0x64, LSH32_REG = 0x6c;
constexpr uint8_t RSH32_IMM = 0x74, RSH32_REG = 0x7c;
constexpr uint8_t NEG32 = 0x84;
constexpr uint8_t MOD32_IMM = 0x94, MOD32_REG = 0x9c;
constexpr uint8_t XOR32_IMM = 0xa4, XOR32_REG = 0xac;
constexpr uint8_t MOV32_IMM = 0xb4, MOV32_REG = 0xbc;
constexpr uint8_t ARSH32_IMM = 0xc4, ARSH32_REG = 0xcc;
// Wide immediate load: two consecutive slots, imm of the first slot holds
// the low 32 bits, imm of the second slot the high 32 bits.
constexpr uint8_t LDDW = 0x18;
// Memory, register-indirect, widths 1/2/4/8
constexpr uint8_t LDXW = 0x61, LDXH = 0x69, LDXB = 0x71, LDXDW = 0x79;
constexpr uint8_t STW = 0x62, STH = 0x6a, STB = 0x72, STDW = 0x7a;
constexpr uint8_t STXW = 0x63, STXH = 0x6b, STXB = 0x73, STXDW = 0x7b;
// Jumps; offset is in slots relative to the following instruction.
constexpr uint8_t JA = 0x05;
constexpr uint8_t JEQ_IMM = 0x15, JEQ_REG = 0x1d;
constexpr uint8_t JGT_IMM = 0x25, JGT_REG = 0x2d;
constexpr uint8_t JGE_IMM = 0x35, JGE_REG = 0x3d;
constexpr uint8_t JSET_IMM = 0x45, JSET_REG = 0x4d;
constexpr uint8_t JNE_IMM = 0x55, JNE_REG = 0x5d;
constexpr uint8_t JSGT_IMM = 0x65, JSGT_REG = 0x6d;
constexpr uint8_t JSGE_IMM = 0x75, JSGE_REG = 0x7d;
constexpr uint8_t CALL = 0x85;
constexpr uint8_t EXIT = 0x95;
constexpr uint8_t JLT_IMM = 0xa5, JLT_REG = 0xad;
constexpr uint8_t JLE_IMM = 0xb5, JLE_REG = 0xbd;
constexpr uint8_t JSLT_IMM = 0xc5, JSLT_REG = 0xcd;
constexpr uint8_t JSLE_IMM = 0xd5, JSLE_REG = 0xdd;
} // namespace op

bool is_supported_opcode(uint8_t opcode);

inline bool is_wide_load(const Instruction& insn) { return insn.opcode == op::LDDW; }

// Slot assembly helpers.
inline Instruction insn(uint8_t opcode, uint8_t dst, uint8_t src, int16_t offset, int32_t imm) {
    return Instruction{opcode, dst, src, offset, imm};
}
inline Instruction alu_imm(uint8_t opcode, uint8_t dst, int32_t imm) {
    return Instruction{opcode, dst, 0, 0, imm};
}
inline Instruction alu_reg(uint8_t opcode, uint8_t dst, uint8_t src) {
    return Instruction{opcode, dst, src, 0, 0};
}
inline Instruction jump_imm(uint8_t opcode, uint8_t dst, int32_t imm, int16_t offset) {
    return Instruction{opcode, dst, 0, offset, imm};
}
inline Instruction jump_reg(uint8_t opcode, uint8_t dst, uint8_t src, int16_t offset) {
    return Instruction{opcode, dst, src, offset, 0};
}
inline Instruction jump_always(int16_t offset) { return Instruction{op::JA, 0, 0, offset, 0}; }
inline Instruction load_mem(uint8_t opcode, uint8_t dst, uint8_t base, int16_t offset) {
    return Instruction{opcode, dst, base, offset, 0};
}
inline Instruction store_reg(uint8_t opcode, uint8_t base, uint8_t src, int16_t offset) {
    return Instruction{opcode, base, src, offset, 0};
}
inline Instruction store_imm(uint8_t opcode, uint8_t base, int16_t offset, int32_t imm) {
    return Instruction{opcode, base, 0, offset, imm};
}
inline Instruction call(uint32_t helper_id) {
    return Instruction{op::CALL, 0, 0, 0, static_cast<int32_t>(helper_id)};
}
inline Instruction exit_insn() { return Instruction{op::EXIT, 0, 0, 0, 0}; }
inline std::array<Instruction, 2> wide_load(uint8_t dst, uint64_t value) {
    return {Instruction{op::LDDW, dst, 0, 0, static_cast<int32_t>(static_cast<uint32_t>(value))},
            Instruction{0, 0, 0, 0, static_cast<int32_t>(static_cast<uint32_t>(value >> 32))}};
}

// Decoded program. Instructions are kept slot-indexed: a wide immediate load
// occupies two slots and jump offsets count slots.
struct Program {
    std::vector<Instruction> insns;
    std::set<uint32_t> declared_helper_ids;    // imm of every CALL

    bool operator==(const Program&) const = default;
};

// Marks slots that are the second half of a wide immediate load.
std::vector<bool> wide_continuation_marks(const std::vector<Instruction>& insns);

enum class DecodeErrc {
    truncated_program,
    malformed_wide_imm,
};

class DecodeError : public std::runtime_error {
public:
    DecodeError(DecodeErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    DecodeErrc code() const { return code_; }

private:
    DecodeErrc code_;
};

std::vector<uint8_t> encode(std::span<const Instruction> insns);
Program decode(std::span<const uint8_t> bytes);

} // namespace zcsd::bpf
