// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>

#include "zcsd/nvm_csd.hpp"
#include "zcsd/program_image.hpp"

namespace zcsd {

struct FilterParams {
    uint32_t threshold = 0;
    uint64_t start_lba = 0;
    uint64_t page_count = 1;

    bool operator==(const FilterParams&) const = default;
};

// Builds the integer-filter offload program: walks `page_count` pages from
// `start_lba` (page size discovered via helper 3, scratch memory via
// helper 4, pages pulled via helper 2), counts 32-bit little-endian unsigned
// values strictly greater than `threshold`, and returns the 64-bit count via
// helper 1. Constants are baked in as wide immediates, so the image is a
// fixed function of its arguments.
ProgramImage build_filter_program(uint32_t threshold, uint64_t start_lba, uint64_t page_count);

// Instruction budget sufficient for a filter run over `page_count` pages of
// `page_size` bytes. Throws ImageError(program_too_large) when the
// arithmetic overflows.
uint64_t filter_instruction_budget(uint64_t page_count, uint64_t page_size);

// Recognizes images produced by build_filter_program by extracting the baked
// constants and re-building; returns the parameters on a byte-exact match.
std::optional<FilterParams> try_parse_filter_image(const ProgramImage& image);

// Host function computing exactly what the filter program computes, through
// the same helper surface. Registered against the image digest for
// NativeKernel runs.
NativeKernel make_filter_kernel(const FilterParams& params);

} // namespace zcsd
