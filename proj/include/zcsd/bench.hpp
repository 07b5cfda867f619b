// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "zcsd/nvm_csd.hpp"
#include "zcsd/zns_device.hpp"

namespace zcsd {

enum class BenchErrc {
    zone_not_empty,
    bad_config,
    scenario_failed,
    io_error,
};

const char* to_string(BenchErrc c);

class BenchError : public std::runtime_error {
public:
    BenchError(BenchErrc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    BenchErrc code() const { return code_; }

private:
    BenchErrc code_;
};

enum class Scenario { Host, Interpreted, NativeKernel };

const char* to_string(Scenario s);
std::optional<Scenario> parse_scenario(const std::string& name);

enum class OutputFormat { Csv, Json };

struct BenchConfig {
    DeviceGeometry geometry;
    uint64_t seed = 42;
    uint32_t threshold = 0x80000000u;    // count samples strictly above this
    uint32_t runs = 5;
    std::vector<Scenario> scenarios{Scenario::Host, Scenario::Interpreted, Scenario::NativeKernel};
    uint64_t shared_region_size = 64 * 1024;

    bool operator==(const BenchConfig&) const = default;
};

struct PhaseTimes {
    uint64_t init_us = 0;
    uint64_t fill_us = 0;
    uint64_t filter_us = 0;

    bool operator==(const PhaseTimes&) const = default;
};

struct BenchRun {
    uint32_t run_index = 0;
    PhaseTimes phases;
    uint64_t filter_count = 0;
    Stats stats;

    bool operator==(const BenchRun&) const = default;
};

struct PhaseAggregate {
    double mean_us = 0;
    uint64_t min_us = 0;
    uint64_t max_us = 0;

    bool operator==(const PhaseAggregate&) const = default;
};

struct ScenarioAggregate {
    PhaseAggregate init;
    PhaseAggregate fill;
    PhaseAggregate filter;

    bool operator==(const ScenarioAggregate&) const = default;
};

struct ScenarioResult {
    Scenario scenario = Scenario::Host;
    std::vector<BenchRun> runs;
    ScenarioAggregate aggregate;

    bool operator==(const ScenarioResult&) const = default;
};

struct BenchReport {
    BenchConfig config;
    std::vector<ScenarioResult> scenarios;

    bool operator==(const BenchReport&) const = default;
};

// Fills an Empty zone completely with 32-bit unsigned samples from the
// SplitMix64 stream seeded by `seed` (each 64-bit output split low word
// first, serialized little-endian). Returns bytes written.
uint64_t fill_zone_random(ZnsDevice& device, uint32_t zone_id, uint64_t seed);

// Host baseline and correctness oracle: reads every written block of the
// zone to the host side, page by page, and counts samples strictly greater
// than `threshold`.
uint64_t host_filter_count(const ZnsDevice& device, uint32_t zone_id, uint32_t threshold);

// For each repetition and scenario: init (fresh device), fill (zone 0),
// filter (scenario-specific). All scenarios share the init/fill code path
// and must agree on the filter count.
BenchReport run_benchmark(const BenchConfig& config);

// CSV: header + one row per scenario x run x phase with columns
// scenario,run,phase,micros,count,instructions_executed,bytes_read_device,
// bytes_to_host. Byte-stable for identical reports.
void write_csv(const BenchReport& report, std::ostream& out);

// JSON mirror of BenchReport; report_from_json inverts it exactly.
void write_json(const BenchReport& report, std::ostream& out);
BenchReport report_from_json(std::istream& in);

} // namespace zcsd
