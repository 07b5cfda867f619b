// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>

#include "fuzz_gen.hpp"
#include "reference_vm.hpp"
#include "test_util.hpp"
#include "vm_corpus.hpp"
#include "zcsd/bpf_insn.hpp"
#include "zcsd/bpf_verifier.hpp"
#include "zcsd/bpf_vm.hpp"
#include "zcsd/bytes.hpp"

using namespace zcsd::bpf;
using zcsd_test::CanaryBuffer;
using zcsd_test::error_code_of;

namespace {

constexpr uint64_t kTestBudget = 10000;
constexpr uint64_t kTestStack = 512;
constexpr uint64_t kTestShared = 256;

VmConfig test_config(uint64_t budget = kTestBudget) {
    VmConfig cfg;
    cfg.max_instructions = budget;
    cfg.stack_size = kTestStack;
    cfg.helper_table[7] = [](ExecContext&, const std::array<uint64_t, 5>& a) {
        return a[0] + 2 * a[1];
    };
    cfg.helper_table[8] = [](ExecContext& ctx, const std::array<uint64_t, 5>& a) {
        std::byte* p = ctx.deref(a[0], 8);
        zcsd::store_le64(p, a[1]);
        return uint64_t{0};
    };
    return cfg;
}

void bind_reference_helpers(zcsd_test::RefVm& vm) {
    vm.helpers[7] = [](zcsd_test::RefVm&, uint64_t a1, uint64_t a2, uint64_t, uint64_t, uint64_t) {
        return a1 + 2 * a2;
    };
    vm.helpers[8] = [](zcsd_test::RefVm& ref, uint64_t a1, uint64_t a2, uint64_t, uint64_t,
                       uint64_t) -> uint64_t {
        if (!ref.mem_ok(a1, 8)) {
            throw zcsd_test::RefVm::RefHelperFault{FaultKind::mem_fault};
        }
        ref.store(a1, 8, a2);
        return 0;
    };
}

struct ProdOutcome {
    bool faulted = false;
    FaultKind fault = FaultKind::mem_fault;
    uint64_t r0 = 0;
    uint64_t executed = 0;
    std::vector<std::byte> shared;
};

ProdOutcome run_production(const std::vector<Instruction>& insns, uint64_t budget = kTestBudget) {
    Program prog = decode(encode(insns));
    VmConfig cfg = test_config(budget);
    CanaryBuffer stack(kTestStack);
    CanaryBuffer shared(kTestShared);
    ExecContext ctx(stack.region(), shared.region());
    ProdOutcome out;
    try {
        out.r0 = execute(prog, cfg, ctx);
    } catch (const VmFault& e) {
        out.faulted = true;
        out.fault = e.kind();
    }
    out.executed = ctx.instructions_executed;
    out.shared.assign(shared.region().begin(), shared.region().end());
    REQUIRE(stack.intact());
    REQUIRE(shared.intact());
    return out;
}

zcsd_test::RefOutcome run_reference(const std::vector<Instruction>& insns,
                                    uint64_t budget = kTestBudget) {
    zcsd_test::RefVm vm(encode(insns), kTestStack, kTestShared, budget);
    bind_reference_helpers(vm);
    return vm.run();
}

} // namespace

TEST_CASE("encoding of mov64 imm matches the fixed layout") {
    auto bytes = encode(std::vector<Instruction>{alu_imm(op::MOV64_IMM, 0, 2)});
    const uint8_t expect[8] = {0xb7, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00};
    REQUIRE(bytes.size() == 8);
    CHECK(std::memcmp(bytes.data(), expect, 8) == 0);
    Program prog = decode(bytes);
    REQUIRE(prog.insns.size() == 1);
    CHECK(prog.insns[0] == alu_imm(op::MOV64_IMM, 0, 2));
}

TEST_CASE("decode rejects empty and unaligned input") {
    CHECK(error_code_of<DecodeError>([] { decode({}); }) == DecodeErrc::truncated_program);
    std::vector<uint8_t> twelve(12, 0);
    CHECK(error_code_of<DecodeError>([&] { decode(twelve); }) == DecodeErrc::truncated_program);
}

TEST_CASE("decode rejects a trailing wide load") {
    auto bytes = encode(std::vector<Instruction>{Instruction{op::LDDW, 1, 0, 0, 5}});
    CHECK(error_code_of<DecodeError>([&] { decode(bytes); }) == DecodeErrc::malformed_wide_imm);
}

TEST_CASE("decode collects declared helper ids") {
    std::vector<Instruction> insns{call(3), call(7), call(3), exit_insn()};
    Program prog = decode(encode(insns));
    CHECK(prog.declared_helper_ids == std::set<uint32_t>{3, 7});
}

TEST_CASE("encode/decode round-trip on random programs") {
    std::mt19937_64 rng(41);
    zcsd_test::FuzzGen gen(99);
    for (int i = 0; i < 1000; ++i) {
        auto insns = gen.next_program();
        Program prog = decode(encode(insns));
        CHECK(prog.insns == insns);
    }
}

TEST_CASE("verifier accepts the minimal program") {
    Program prog = decode(encode(std::vector<Instruction>{exit_insn()}));
    CHECK(verify(prog, test_config()).pass());
}

TEST_CASE("verifier rejects a program that falls off the end") {
    Program prog;
    prog.insns = {alu_imm(op::MOV64_IMM, 0, 1)};
    auto report = verify(prog, test_config());
    REQUIRE_FALSE(report.pass());
    CHECK(report.has(ViolationKind::falls_off_end));
    CHECK(report.violations[0].index == 0);
}

TEST_CASE("verifier rejects out-of-bounds jumps") {
    Program fwd;
    fwd.insns = {jump_always(5), exit_insn()};
    CHECK(verify(fwd, test_config()).has(ViolationKind::jump_out_of_bounds));

    Program back;
    back.insns = {jump_always(-3), exit_insn()};
    CHECK(verify(back, test_config()).has(ViolationKind::jump_out_of_bounds));
}

TEST_CASE("verifier rejects unknown opcodes") {
    Program prog;
    prog.insns = {Instruction{0xd4, 0, 0, 0, 0}, exit_insn()};    // byteswap: not in the subset
    CHECK(verify(prog, test_config()).has(ViolationKind::unknown_opcode));
    Program zero;
    zero.insns = {Instruction{0x00, 0, 0, 0, 0}, exit_insn()};
    CHECK(verify(zero, test_config()).has(ViolationKind::unknown_opcode));
}

TEST_CASE("verifier rejects unknown helpers") {
    Program prog;
    prog.insns = {call(99), exit_insn()};
    CHECK(verify(prog, test_config()).has(ViolationKind::unknown_helper));
}

TEST_CASE("verifier rejects writes to r10") {
    Program alu;
    alu.insns = {alu_imm(op::MOV64_IMM, 10, 1), exit_insn()};
    CHECK(verify(alu, test_config()).has(ViolationKind::r10_write));
    Program ldx;
    ldx.insns = {load_mem(op::LDXDW, 10, 10, -8), exit_insn()};
    CHECK(verify(ldx, test_config()).has(ViolationKind::r10_write));
    // store THROUGH r10 is fine
    Program stx;
    stx.insns = {store_imm(op::STDW, 10, -8, 1), exit_insn()};
    CHECK(verify(stx, test_config()).pass());
}

TEST_CASE("verifier rejects static division by zero") {
    Program prog;
    prog.insns = {alu_imm(op::DIV64_IMM, 0, 0), exit_insn()};
    CHECK(verify(prog, test_config()).has(ViolationKind::div_by_zero_imm));
    Program mod32;
    mod32.insns = {alu_imm(op::MOD32_IMM, 0, 0), exit_insn()};
    CHECK(verify(mod32, test_config()).has(ViolationKind::div_by_zero_imm));
}

TEST_CASE("verifier rejects jumps into a wide-load pair") {
    auto pair = wide_load(1, 0x1122334455667788ULL);
    Program prog;
    prog.insns = {jump_always(1), pair[0], pair[1], exit_insn()};
    // offset 1 from slot 0 targets slot 2, the continuation
    auto report = verify(prog, test_config());
    CHECK(report.has(ViolationKind::jump_into_wide_imm));
}

TEST_CASE("verifier rejects a wide load missing its pair") {
    Program prog;
    prog.insns = {Instruction{op::LDDW, 1, 0, 0, 5}};
    CHECK(verify(prog, test_config()).has(ViolationKind::missing_wide_pair));
}

TEST_CASE("verifier rejects inescapable loops") {
    Program prog;
    prog.insns = {jump_always(-1), exit_insn()};
    auto report = verify(prog, test_config());
    CHECK(report.has(ViolationKind::unreachable_exit));
}

TEST_CASE("verifier rejects out-of-range register nibbles") {
    Program prog;
    prog.insns = {alu_reg(op::ADD64_REG, 0, 12), exit_insn()};
    CHECK(verify(prog, test_config()).has(ViolationKind::bad_register));
}

TEST_CASE("verifier flags the empty program") {
    Program prog;
    CHECK(verify(prog, test_config()).has(ViolationKind::empty_program));
}

TEST_CASE("conformance corpus: frozen values and reference agreement") {
    for (const auto& c : zcsd_test::conformance_corpus()) {
        CAPTURE(c.name);
        auto prod = run_production(c.insns);
        auto ref = run_reference(c.insns);
        if (c.expect_fault) {
            CHECK(prod.faulted);
            CHECK(prod.fault == c.expected_fault);
            CHECK(ref.faulted);
            CHECK(ref.fault == c.expected_fault);
        } else {
            CHECK_FALSE(prod.faulted);
            CHECK(prod.r0 == c.expected_r0);
            CHECK_FALSE(ref.faulted);
            CHECK(ref.r0 == c.expected_r0);
        }
    }
}

TEST_CASE("instruction counter is exact") {
    // countdown loop: 2 setup + 5 iterations x 3 + 1 exit = 18
    std::vector<Instruction> insns{alu_imm(op::MOV64_IMM, 0, 0), alu_imm(op::MOV64_IMM, 1, 5),
                                   alu_reg(op::ADD64_REG, 0, 1), alu_imm(op::SUB64_IMM, 1, 1),
                                   jump_imm(op::JNE_IMM, 1, 0, -3), exit_insn()};
    auto out = run_production(insns);
    CHECK_FALSE(out.faulted);
    CHECK(out.r0 == 15);
    CHECK(out.executed == 18);
}

TEST_CASE("budget exhaustion stops runaway programs at the limit") {
    std::vector<Instruction> insns{jump_imm(op::JEQ_IMM, 1, 1, 1), jump_always(-2), exit_insn()};
    auto out = run_production(insns, 100);
    CHECK(out.faulted);
    CHECK(out.fault == FaultKind::budget_exceeded);
    CHECK(out.executed == 100);
}

TEST_CASE("a program needing exactly the budget succeeds") {
    std::vector<Instruction> insns{alu_imm(op::MOV64_IMM, 0, 4), exit_insn()};
    auto out = run_production(insns, 2);
    CHECK_FALSE(out.faulted);
    CHECK(out.r0 == 4);
}

TEST_CASE("mem fault leaves canaries intact and reports the access") {
    std::vector<Instruction> insns{
        alu_reg(op::MOV64_REG, 1, 10),    // stack top
        store_imm(op::STDW, 1, 0, 1),     // one past the last stack byte
        exit_insn(),
    };
    auto out = run_production(insns);
    CHECK(out.faulted);
    CHECK(out.fault == FaultKind::mem_fault);
}

TEST_CASE("helper mechanics: args in r1..r5, result in r0, counters") {
    Program prog = decode(encode(std::vector<Instruction>{
        alu_imm(op::MOV64_IMM, 1, 30),
        alu_imm(op::MOV64_IMM, 2, 6),
        call(7),
        exit_insn(),
    }));
    VmConfig cfg = test_config();
    std::vector<std::byte> shared(kTestShared);
    ExecContext ctx(kTestStack, shared);
    uint64_t r0 = execute(prog, cfg, ctx);
    CHECK(r0 == 42);
    CHECK(ctx.helper_calls == 1);
    CHECK(ctx.instructions_executed == 4);
}

TEST_CASE("execution is deterministic") {
    zcsd_test::FuzzGen gen(123);
    for (int i = 0; i < 50; ++i) {
        auto insns = gen.next_program();
        auto a = run_production(insns, 1024);
        auto b = run_production(insns, 1024);
        CHECK(a.faulted == b.faulted);
        CHECK(a.r0 == b.r0);
        CHECK(a.executed == b.executed);
        CHECK(a.shared == b.shared);
    }
}

TEST_CASE("fuzz: verify-passing programs stay sandboxed, terminate, and match the reference") {
    zcsd_test::FuzzGen gen(0xf00d);
    VmConfig cfg = test_config(1024);
    int passed = 0;
    int attempts = 0;
    while (passed < 2000 && attempts < 60000) {
        ++attempts;
        auto insns = gen.next_program();
        Program prog = decode(encode(insns));
        if (!verify(prog, cfg).pass()) continue;
        ++passed;

        auto prod = run_production(insns, 1024);    // REQUIREs canaries intact
        CHECK(prod.executed <= 1024);

        auto ref = run_reference(insns, 1024);
        CHECK(prod.faulted == ref.faulted);
        CHECK(prod.executed == ref.steps);
        if (prod.faulted) {
            CHECK(prod.fault == ref.fault);
            // verifier soundness: a verified program can only fault on what
            // the verifier does not claim to prevent
            bool dynamic_only = prod.fault == FaultKind::mem_fault ||
                                prod.fault == FaultKind::div_by_zero ||
                                prod.fault == FaultKind::helper_fault ||
                                prod.fault == FaultKind::budget_exceeded;
            CHECK(dynamic_only);
        } else {
            CHECK(prod.r0 == ref.r0);
        }
        // shared memory must agree byte for byte, fault or not
        REQUIRE(prod.shared.size() == kTestShared);
        REQUIRE(ref.shared.size() == kTestShared);
        bool shared_equal = true;
        for (size_t b = 0; b < kTestShared; ++b) {
            if (static_cast<uint8_t>(prod.shared[b]) != ref.shared[b]) {
                shared_equal = false;
                break;
            }
        }
        CHECK(shared_equal);
    }
    CHECK(passed == 2000);
}

TEST_CASE("runtime faults exist for everything the verifier rejects") {
    VmConfig cfg = test_config();

    auto run_raw = [&](std::vector<Instruction> insns) {
        Program prog;
        prog.insns = std::move(insns);    // bypass decode to keep malformed shapes
        std::vector<std::byte> shared(kTestShared);
        ExecContext ctx(kTestStack, shared);
        try {
            execute(prog, cfg, ctx);
        } catch (const VmFault& e) {
            return e.kind();
        }
        return FaultKind::helper_fault;    // placeholder: "no fault"
    };

    CHECK(run_raw({alu_imm(op::MOV64_IMM, 0, 1)}) == FaultKind::fell_off_end);
    CHECK(run_raw({jump_always(5), exit_insn()}) == FaultKind::bad_jump);
    CHECK(run_raw({Instruction{0xd4, 0, 0, 0, 0}, exit_insn()}) == FaultKind::unknown_opcode);
    CHECK(run_raw({call(99), exit_insn()}) == FaultKind::unknown_helper);
    CHECK(run_raw({alu_imm(op::MOV64_IMM, 10, 1), exit_insn()}) == FaultKind::bad_register);
    CHECK(run_raw({alu_imm(op::DIV64_IMM, 0, 0), exit_insn()}) == FaultKind::div_by_zero);
}
