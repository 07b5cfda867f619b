// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Conformance corpus: small programs covering every opcode class, each with
// a hand-computed expected outcome. Every case is additionally checked
// against the independent reference evaluator.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zcsd/bpf_insn.hpp"
#include "zcsd/bpf_vm.hpp"

namespace zcsd_test {

struct CorpusCase {
    std::string name;
    std::vector<zcsd::bpf::Instruction> insns;
    bool expect_fault = false;
    uint64_t expected_r0 = 0;
    zcsd::bpf::FaultKind expected_fault = zcsd::bpf::FaultKind::mem_fault;
};

inline std::vector<CorpusCase> conformance_corpus() {
    using namespace zcsd::bpf;
    using FK = FaultKind;
    std::vector<CorpusCase> cases;
    auto value_case = [&](std::string name, std::vector<Instruction> insns, uint64_t expected) {
        cases.push_back({std::move(name), std::move(insns), false, expected, FK::mem_fault});
    };
    auto fault_case = [&](std::string name, std::vector<Instruction> insns, FK kind) {
        cases.push_back({std::move(name), std::move(insns), true, 0, kind});
    };
    auto wide = [](uint8_t dst, uint64_t v) { return wide_load(dst, v); };
    auto append_wide = [](std::vector<Instruction>& v, std::array<Instruction, 2> pair) {
        v.push_back(pair[0]);
        v.push_back(pair[1]);
    };

    value_case("exit default r0", {exit_insn()}, 0);
    value_case("mov64 imm", {alu_imm(op::MOV64_IMM, 0, 2), exit_insn()}, 2);
    value_case("add64 imm", {alu_imm(op::MOV64_IMM, 0, 2), alu_imm(op::ADD64_IMM, 0, 3), exit_insn()},
               5);
    value_case("sub64 reg",
               {alu_imm(op::MOV64_IMM, 0, 10), alu_imm(op::MOV64_IMM, 1, 3),
                alu_reg(op::SUB64_REG, 0, 1), exit_insn()},
               7);
    value_case("mov64 imm sign-extends", {alu_imm(op::MOV64_IMM, 0, -1), exit_insn()},
               0xFFFFFFFFFFFFFFFFULL);
    value_case("mov32 imm zero-extends", {alu_imm(op::MOV32_IMM, 0, -1), exit_insn()},
               0xFFFFFFFFULL);
    value_case("add32 zero-extends result",
               {alu_imm(op::MOV64_IMM, 0, -1), alu_imm(op::ADD32_IMM, 0, 0), exit_insn()},
               0xFFFFFFFFULL);
    value_case("mul64 reg",
               {alu_imm(op::MOV64_IMM, 0, 123), alu_imm(op::MOV64_IMM, 1, 1000),
                alu_reg(op::MUL64_REG, 0, 1), exit_insn()},
               123000);
    value_case("mul32 wraps",
               {alu_imm(op::MOV32_IMM, 0, static_cast<int32_t>(0x80000001u)),
                alu_imm(op::MUL32_IMM, 0, 2), exit_insn()},
               2);    // 0x100000002 mod 2^32
    value_case("div64 reg",
               {alu_imm(op::MOV64_IMM, 0, 100), alu_imm(op::MOV64_IMM, 1, 7),
                alu_reg(op::DIV64_REG, 0, 1), exit_insn()},
               14);
    value_case("div32 treats operands unsigned",
               {alu_imm(op::MOV64_IMM, 0, -1), alu_imm(op::DIV32_IMM, 0, 2), exit_insn()},
               0x7FFFFFFFULL);
    value_case("mod64 imm", {alu_imm(op::MOV64_IMM, 0, 100), alu_imm(op::MOD64_IMM, 0, 7), exit_insn()},
               2);
    value_case("mod32 imm",
               {alu_imm(op::MOV32_IMM, 0, 10), alu_imm(op::MOD32_IMM, 0, 4), exit_insn()}, 2);
    fault_case("div64 by zero register",
               {alu_imm(op::MOV64_IMM, 0, 1), alu_imm(op::MOV64_IMM, 1, 0),
                alu_reg(op::DIV64_REG, 0, 1), exit_insn()},
               FK::div_by_zero);
    fault_case("mod32 by zero register",
               {alu_imm(op::MOV64_IMM, 0, 1), alu_imm(op::MOV64_IMM, 1, 0),
                alu_reg(op::MOD32_REG, 0, 1), exit_insn()},
               FK::div_by_zero);
    value_case("and or xor chain",
               {alu_imm(op::MOV64_IMM, 0, 0b1100), alu_imm(op::AND64_IMM, 0, 0b1010),
                alu_imm(op::OR64_IMM, 0, 0b0001), alu_imm(op::XOR64_IMM, 0, 0b1111), exit_insn()},
               6);
    value_case("lsh64 masks shift amount",
               {alu_imm(op::MOV64_IMM, 0, 1), alu_imm(op::MOV64_IMM, 1, 65),
                alu_reg(op::LSH64_REG, 0, 1), exit_insn()},
               2);
    value_case("lsh32 masks shift amount",
               {alu_imm(op::MOV64_IMM, 0, 1), alu_imm(op::LSH32_IMM, 0, 33), exit_insn()}, 2);

    {
        std::vector<Instruction> v;
        append_wide(v, wide(0, 0x8000000000000000ULL));
        v.push_back(alu_imm(op::RSH64_IMM, 0, 63));
        v.push_back(exit_insn());
        value_case("rsh64 logical", std::move(v), 1);
    }
    {
        std::vector<Instruction> v;
        append_wide(v, wide(0, 0x8000000000000000ULL));
        v.push_back(alu_imm(op::ARSH64_IMM, 0, 63));
        v.push_back(exit_insn());
        value_case("arsh64 sign-extends", std::move(v), 0xFFFFFFFFFFFFFFFFULL);
    }
    value_case("arsh32 on negative 32-bit value",
               {alu_imm(op::MOV32_IMM, 0, -8), alu_imm(op::ARSH32_IMM, 0, 2), exit_insn()},
               0xFFFFFFFEULL);
    value_case("rsh32 logical",
               {alu_imm(op::MOV64_IMM, 0, -1), alu_imm(op::RSH32_IMM, 0, 28), exit_insn()}, 15);
    value_case("neg64", {alu_imm(op::MOV64_IMM, 0, 5), alu_imm(op::NEG64, 0, 0), exit_insn()},
               0xFFFFFFFFFFFFFFFBULL);
    value_case("neg32 zero-extends",
               {alu_imm(op::MOV32_IMM, 0, 5), alu_imm(op::NEG32, 0, 0), exit_insn()},
               0xFFFFFFFBULL);
    {
        std::vector<Instruction> v;
        append_wide(v, wide(0, 0x123456789ABCDEF0ULL));
        v.push_back(exit_insn());
        value_case("lddw full 64-bit value", std::move(v), 0x123456789ABCDEF0ULL);
    }

    value_case("jeq imm taken",
               {alu_imm(op::MOV64_IMM, 0, 1), jump_imm(op::JEQ_IMM, 0, 1, 1),
                alu_imm(op::MOV64_IMM, 0, 99), exit_insn()},
               1);
    value_case("jeq imm not taken",
               {alu_imm(op::MOV64_IMM, 0, 2), jump_imm(op::JEQ_IMM, 0, 1, 1),
                alu_imm(op::MOV64_IMM, 0, 99), exit_insn()},
               99);
    value_case("jgt unsigned on all-ones",
               {alu_imm(op::MOV64_IMM, 0, -1), jump_imm(op::JGT_IMM, 0, 5, 1),
                alu_imm(op::MOV64_IMM, 0, 0), exit_insn()},
               0xFFFFFFFFFFFFFFFFULL);
    value_case("jsgt signed on all-ones",
               {alu_imm(op::MOV64_IMM, 0, -1), jump_imm(op::JSGT_IMM, 0, 5, 1),
                alu_imm(op::MOV64_IMM, 0, 7), exit_insn()},
               7);
    value_case("jlt against sign-extended imm",
               {alu_imm(op::MOV64_IMM, 0, 3), jump_imm(op::JLT_IMM, 0, -1, 1),
                alu_imm(op::MOV64_IMM, 0, 0), exit_insn()},
               3);
    value_case("jge imm taken on equality",
               {alu_imm(op::MOV64_IMM, 0, 5), jump_imm(op::JGE_IMM, 0, 5, 1),
                alu_imm(op::MOV64_IMM, 0, 0), exit_insn()},
               5);
    value_case("jle reg taken",
               {alu_imm(op::MOV64_IMM, 0, 4), alu_imm(op::MOV64_IMM, 1, 5),
                jump_reg(op::JLE_REG, 0, 1, 1), alu_imm(op::MOV64_IMM, 0, 0), exit_insn()},
               4);
    value_case("jsge imm taken on equality",
               {alu_imm(op::MOV64_IMM, 0, -3), jump_imm(op::JSGE_IMM, 0, -3, 1),
                alu_imm(op::MOV64_IMM, 0, 0), exit_insn()},
               0xFFFFFFFFFFFFFFFDULL);
    value_case("jslt imm taken",
               {alu_imm(op::MOV64_IMM, 0, -4), jump_imm(op::JSLT_IMM, 0, -3, 1),
                alu_imm(op::MOV64_IMM, 0, 0), exit_insn()},
               0xFFFFFFFFFFFFFFFCULL);
    value_case("jsle reg taken on equality",
               {alu_imm(op::MOV64_IMM, 0, -5), alu_imm(op::MOV64_IMM, 1, -5),
                jump_reg(op::JSLE_REG, 0, 1, 1), alu_imm(op::MOV64_IMM, 0, 0), exit_insn()},
               0xFFFFFFFFFFFFFFFBULL);
    value_case("jset imm taken",
               {alu_imm(op::MOV64_IMM, 0, 6), jump_imm(op::JSET_IMM, 0, 2, 1),
                alu_imm(op::MOV64_IMM, 0, 0), exit_insn()},
               6);
    value_case("jne reg countdown loop",
               {alu_imm(op::MOV64_IMM, 0, 0), alu_imm(op::MOV64_IMM, 1, 5),
                alu_reg(op::ADD64_REG, 0, 1), alu_imm(op::SUB64_IMM, 1, 1),
                jump_imm(op::JNE_IMM, 1, 0, -3), exit_insn()},
               15);
    value_case("ja skips",
               {alu_imm(op::MOV64_IMM, 0, 1), jump_always(1), alu_imm(op::MOV64_IMM, 0, 42),
                exit_insn()},
               1);

    value_case("stx/ldx dw via stack",
               {alu_imm(op::MOV64_IMM, 1, -1), store_reg(op::STXDW, 10, 1, -8),
                load_mem(op::LDXDW, 0, 10, -8), exit_insn()},
               0xFFFFFFFFFFFFFFFFULL);
    value_case("ldx w zero-extends",
               {alu_imm(op::MOV64_IMM, 1, -1), store_reg(op::STXW, 10, 1, -8),
                load_mem(op::LDXW, 0, 10, -8), exit_insn()},
               0xFFFFFFFFULL);
    value_case("st imm w then ldx w",
               {store_imm(op::STW, 10, -8, 0x11223344), load_mem(op::LDXW, 0, 10, -8), exit_insn()},
               0x11223344ULL);
    value_case("st imm h then ldx h",
               {store_imm(op::STH, 10, -2, 0x5566), load_mem(op::LDXH, 0, 10, -2), exit_insn()},
               0x5566ULL);
    value_case("stx b then ldx b",
               {alu_imm(op::MOV64_IMM, 1, 0xAA), store_reg(op::STXB, 10, 1, -1),
                load_mem(op::LDXB, 0, 10, -1), exit_insn()},
               0xAAULL);
    value_case("byte store overlays dw little-endian",
               {store_imm(op::STDW, 10, -8, -1), alu_imm(op::MOV64_IMM, 1, 0x77),
                store_reg(op::STXB, 10, 1, -8), load_mem(op::LDXDW, 0, 10, -8), exit_insn()},
               0xFFFFFFFFFFFFFF77ULL);
    {
        // store to the shared region through the base returned by a helper-free
        // address: the shared base constant is baked in as a wide immediate
        std::vector<Instruction> v;
        append_wide(v, wide(1, zcsd::bpf::kSharedBase));
        v.push_back(alu_imm(op::MOV64_IMM, 2, 0x1234));
        v.push_back(store_reg(op::STXDW, 1, 2, 0));
        v.push_back(load_mem(op::LDXDW, 0, 1, 0));
        v.push_back(exit_insn());
        value_case("shared region store/load", std::move(v), 0x1234ULL);
    }

    value_case("call helper 7 returns a1 + 2*a2",
               {alu_imm(op::MOV64_IMM, 1, 10), alu_imm(op::MOV64_IMM, 2, 4), call(7), exit_insn()},
               18);
    value_case("call preserves r6",
               {alu_imm(op::MOV64_IMM, 6, 9), alu_imm(op::MOV64_IMM, 1, 1), call(7),
                alu_reg(op::MOV64_REG, 0, 6), exit_insn()},
               9);
    value_case("call preserves argument registers",
               {alu_imm(op::MOV64_IMM, 1, 3), alu_imm(op::MOV64_IMM, 2, 0), call(7),
                alu_reg(op::MOV64_REG, 0, 1), exit_insn()},
               3);
    {
        // helper 8 writes a2 as a 64-bit LE value at address a1
        std::vector<Instruction> v;
        v.push_back(alu_reg(op::MOV64_REG, 1, 10));
        v.push_back(alu_imm(op::ADD64_IMM, 1, -8));
        v.push_back(alu_imm(op::MOV64_IMM, 2, 77));
        v.push_back(call(8));
        v.push_back(load_mem(op::LDXDW, 0, 10, -8));
        v.push_back(exit_insn());
        value_case("call helper 8 writes through vm memory", std::move(v), 77);
    }

    {
        // store one byte past the end of the stack
        std::vector<Instruction> v;
        v.push_back(alu_reg(op::MOV64_REG, 1, 10));
        v.push_back(alu_imm(op::MOV64_IMM, 2, 1));
        v.push_back(store_reg(op::STXB, 1, 2, 0));
        v.push_back(exit_insn());
        fault_case("store past stack top", std::move(v), FK::mem_fault);
    }
    {
        std::vector<Instruction> v;
        append_wide(v, wide(1, zcsd::bpf::kSharedBase));
        v.push_back(load_mem(op::LDXDW, 0, 1, -1));    // one byte before the region
        v.push_back(exit_insn());
        fault_case("load below shared base", std::move(v), FK::mem_fault);
    }
    fault_case("never-true loop exhausts budget",
               {jump_imm(op::JEQ_IMM, 1, 1, 1), jump_always(-2), exit_insn()},
               FK::budget_exceeded);

    return cases;
}

} // namespace zcsd_test
