// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#include "zcsd/filter_program.hpp"

#include <cassert>
#include <stdexcept>

#include "zcsd/bytes.hpp"

namespace zcsd {

namespace {

using namespace bpf;

// Register plan: r6 = count, r7 = current lba, r8 = pages remaining,
// r9 = scratch base. Stack: [r10-8] mem-info size out, [r10-16] page size,
// [r10-24] threshold, [r10-32] count handed to bpf_return_data.
std::vector<Instruction> filter_instructions(const FilterParams& p) {
    std::vector<Instruction> code;
    auto emit = [&](const Instruction& in) {
        code.push_back(in);
        return code.size() - 1;
    };
    auto emit_wide = [&](uint8_t dst, uint64_t value) {
        auto pair = wide_load(dst, value);
        code.push_back(pair[0]);
        code.push_back(pair[1]);
    };
    auto patch_jump = [&](size_t slot, size_t target) {
        code[slot].offset = static_cast<int16_t>(static_cast<long>(target) - static_cast<long>(slot) - 1);
    };

    emit(call(3));                                       // r0 = page size
    emit(store_reg(op::STXDW, 10, 0, -16));
    emit(alu_reg(op::MOV64_REG, 1, 10));
    emit(alu_imm(op::ADD64_IMM, 1, -8));                 // r1 = &size_out
    emit(call(4));                                       // r0 = scratch base
    emit(alu_reg(op::MOV64_REG, 9, 0));
    emit(alu_imm(op::MOV64_IMM, 6, 0));
    emit_wide(7, p.start_lba);
    emit_wide(8, p.page_count);
    emit_wide(0, p.threshold);
    emit(store_reg(op::STXDW, 10, 0, -24));

    size_t page_loop = code.size();
    size_t jeq_done = emit(jump_imm(op::JEQ_IMM, 8, 0, 0));
    emit(alu_reg(op::MOV64_REG, 1, 7));                  // lba
    emit(alu_imm(op::MOV64_IMM, 2, 0));                  // offset
    emit(load_mem(op::LDXDW, 3, 10, -16));               // limit = page size
    emit(alu_reg(op::MOV64_REG, 4, 9));                  // dest
    emit(call(2));                                       // pull one page
    emit(alu_imm(op::MOV64_IMM, 2, 0));                  // byte cursor
    emit(load_mem(op::LDXDW, 3, 10, -16));
    emit(load_mem(op::LDXDW, 5, 10, -24));               // threshold
    size_t jlt_tiny_page = emit(jump_imm(op::JLT_IMM, 3, 4, 0));    // page holds no sample
    emit(alu_imm(op::SUB64_IMM, 3, 3));                  // loop while cursor + 4 <= page

    size_t scan_loop = code.size();
    size_t jge_scan_done = emit(jump_reg(op::JGE_REG, 2, 3, 0));
    emit(alu_reg(op::MOV64_REG, 1, 9));
    emit(alu_reg(op::ADD64_REG, 1, 2));
    emit(load_mem(op::LDXW, 4, 1, 0));                   // sample, zero-extended
    size_t jge_skip = emit(jump_reg(op::JGE_REG, 5, 4, 0));
    emit(alu_imm(op::ADD64_IMM, 6, 1));                  // count++
    size_t skip = code.size();
    emit(alu_imm(op::ADD64_IMM, 2, 4));
    size_t ja_scan = emit(jump_always(0));

    size_t scan_done = code.size();
    emit(alu_imm(op::ADD64_IMM, 7, 1));
    emit(alu_imm(op::SUB64_IMM, 8, 1));
    size_t ja_page = emit(jump_always(0));

    size_t done = code.size();
    emit(store_reg(op::STXDW, 10, 6, -32));
    emit(alu_reg(op::MOV64_REG, 1, 10));
    emit(alu_imm(op::ADD64_IMM, 1, -32));
    emit(alu_imm(op::MOV64_IMM, 2, 8));
    emit(call(1));                                       // return the count
    emit(alu_reg(op::MOV64_REG, 0, 6));
    emit(exit_insn());

    patch_jump(jeq_done, done);
    patch_jump(jlt_tiny_page, scan_done);
    patch_jump(jge_scan_done, scan_done);
    patch_jump(jge_skip, skip);
    patch_jump(ja_scan, scan_loop);
    patch_jump(ja_page, page_loop);
    assert(code.size() == 43);
    return code;
}

constexpr size_t kFilterSlotCount = 43;
constexpr size_t kStartLbaSlot = 7;      // wide pair 7/8
constexpr size_t kPageCountSlot = 9;     // wide pair 9/10
constexpr size_t kThresholdSlot = 11;    // wide pair 11/12

uint64_t wide_value_at(const std::vector<Instruction>& insns, size_t slot) {
    return static_cast<uint32_t>(insns[slot].imm) |
           (static_cast<uint64_t>(static_cast<uint32_t>(insns[slot + 1].imm)) << 32);
}

} // namespace

uint64_t filter_instruction_budget(uint64_t page_count, uint64_t page_size) {
    // Upper bound: <= 13 + 8 * ints per page plus fixed prologue/epilogue,
    // with margin baked in.
    uint64_t ints_per_page = page_size / 4;
    uint64_t per_page, scaled, total;
    if (__builtin_mul_overflow(ints_per_page, uint64_t{10}, &per_page) ||
        __builtin_add_overflow(per_page, uint64_t{24}, &per_page) ||
        __builtin_mul_overflow(per_page, page_count, &scaled) ||
        __builtin_add_overflow(scaled, uint64_t{32}, &total)) {
        throw ImageError(ImageErrc::program_too_large,
                         "instruction budget overflows for " + std::to_string(page_count) +
                             " pages of " + std::to_string(page_size) + " bytes");
    }
    return total;
}

ProgramImage build_filter_program(uint32_t threshold, uint64_t start_lba, uint64_t page_count) {
    if (page_count == 0) {
        throw std::invalid_argument("page_count must be >= 1");
    }
    // Budget arithmetic must be representable before the image is usable;
    // probe with the largest page the read helper can pull.
    filter_instruction_budget(page_count, NvmCsd::kReadLimitMax + 1);
    auto code = filter_instructions(FilterParams{threshold, start_lba, page_count});
    return decode_image(encode_image(code));
}

std::optional<FilterParams> try_parse_filter_image(const ProgramImage& image) {
    bpf::Program program;
    try {
        program = bpf::decode(image.code);
    } catch (const bpf::DecodeError&) {
        return std::nullopt;
    }
    if (program.insns.size() != kFilterSlotCount) return std::nullopt;
    if (!bpf::is_wide_load(program.insns[kStartLbaSlot]) ||
        !bpf::is_wide_load(program.insns[kPageCountSlot]) ||
        !bpf::is_wide_load(program.insns[kThresholdSlot])) {
        return std::nullopt;
    }
    FilterParams params;
    uint64_t threshold = wide_value_at(program.insns, kThresholdSlot);
    if (threshold > 0xFFFFFFFFULL) return std::nullopt;
    params.threshold = static_cast<uint32_t>(threshold);
    params.start_lba = wide_value_at(program.insns, kStartLbaSlot);
    params.page_count = wide_value_at(program.insns, kPageCountSlot);
    if (params.page_count == 0) return std::nullopt;

    ProgramImage rebuilt;
    try {
        rebuilt = build_filter_program(params.threshold, params.start_lba, params.page_count);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    if (rebuilt.code != image.code) return std::nullopt;
    return params;
}

NativeKernel make_filter_kernel(const FilterParams& params) {
    return [params](KernelEnv& env) {
        const uint64_t page = env.lba_size();
        std::span<std::byte> region = env.mem_region();
        if (region.size() < page) {
            throw std::runtime_error("scratch region smaller than one page");
        }
        uint64_t count = 0;
        for (uint64_t i = 0; i < params.page_count; ++i) {
            env.read(params.start_lba + i, 0, page, region.data());
            const std::byte* p = region.data();
            for (uint64_t off = 0; off + 4 <= page; off += 4) {
                if (load_le32(p + off) > params.threshold) ++count;
            }
        }
        uint8_t out[8];
        store_le64(out, count);
        env.return_data({reinterpret_cast<const std::byte*>(out), 8});
    };
}

} // namespace zcsd
