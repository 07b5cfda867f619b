// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#include "zcsd/bpf_insn.hpp"

#include "zcsd/bytes.hpp"

namespace zcsd::bpf {

bool is_supported_opcode(uint8_t opcode) {
    uint8_t c = opcode & 0x07;
    uint8_t operation = opcode & 0xf0;
    bool src_bit = (opcode & 0x08) != 0;
    switch (c) {
    case cls::ALU64:
    case cls::ALU32:
        if (operation == 0x80) return !src_bit;    // NEG has no register form
        return operation <= 0xc0;                  // ADD..ARSH
    case cls::JMP:
        switch (opcode) {
        case op::JA:
        case op::CALL:
        case op::EXIT:
            return true;
        default:
            // conditional jumps, imm and reg variants
            return operation >= 0x10 && operation <= 0xd0 && operation != 0x80 && operation != 0x90;
        }
    case cls::LD:
        return opcode == op::LDDW;
    case cls::LDX:
        return opcode == op::LDXW || opcode == op::LDXH || opcode == op::LDXB || opcode == op::LDXDW;
    case cls::ST:
        return opcode == op::STW || opcode == op::STH || opcode == op::STB || opcode == op::STDW;
    case cls::STX:
        return opcode == op::STXW || opcode == op::STXH || opcode == op::STXB || opcode == op::STXDW;
    default:
        return false;
    }
}

std::vector<bool> wide_continuation_marks(const std::vector<Instruction>& insns) {
    std::vector<bool> cont(insns.size(), false);
    for (size_t i = 0; i < insns.size(); ++i) {
        if (cont[i]) continue;
        if (is_wide_load(insns[i]) && i + 1 < insns.size()) {
            cont[i + 1] = true;
        }
    }
    return cont;
}

std::vector<uint8_t> encode(std::span<const Instruction> insns) {
    std::vector<uint8_t> out(insns.size() * kInsnBytes);
    uint8_t* p = out.data();
    for (const Instruction& in : insns) {
        p[0] = in.opcode;
        p[1] = static_cast<uint8_t>((in.dst & 0x0f) | (in.src << 4));
        store_le16(p + 2, static_cast<uint16_t>(in.offset));
        store_le32(p + 4, static_cast<uint32_t>(in.imm));
        p += kInsnBytes;
    }
    return out;
}

Program decode(std::span<const uint8_t> bytes) {
    if (bytes.empty()) {
        throw DecodeError(DecodeErrc::truncated_program, "empty program");
    }
    if (bytes.size() % kInsnBytes != 0) {
        throw DecodeError(DecodeErrc::truncated_program,
                          "program length " + std::to_string(bytes.size()) +
                              " is not a multiple of " + std::to_string(kInsnBytes));
    }
    Program prog;
    size_t n = bytes.size() / kInsnBytes;
    prog.insns.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const uint8_t* p = bytes.data() + i * kInsnBytes;
        Instruction& in = prog.insns[i];
        in.opcode = p[0];
        in.dst = static_cast<uint8_t>(p[1] & 0x0f);
        in.src = static_cast<uint8_t>(p[1] >> 4);
        in.offset = static_cast<int16_t>(load_le16(p + 2));
        in.imm = static_cast<int32_t>(load_le32(p + 4));
    }
    // Pair wide loads and collect helper ids, skipping continuation slots.
    for (size_t i = 0; i < n; ++i) {
        const Instruction& in = prog.insns[i];
        if (is_wide_load(in)) {
            if (i + 1 >= n) {
                throw DecodeError(DecodeErrc::malformed_wide_imm,
                                  "wide immediate load at slot " + std::to_string(i) +
                                      " is missing its second slot");
            }
            ++i;
        } else if (in.opcode == op::CALL) {
            prog.declared_helper_ids.insert(static_cast<uint32_t>(in.imm));
        }
    }
    return prog;
}

} // namespace zcsd::bpf
