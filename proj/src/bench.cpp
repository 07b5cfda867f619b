// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#include "zcsd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "zcsd/bytes.hpp"
#include "zcsd/filter_program.hpp"
#include "zcsd/prng.hpp"
#include "zcsd/program_image.hpp"

namespace zcsd {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::ordered_json;

uint64_t micros_since(Clock::time_point start) {
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count());
}

constexpr const char* kPhaseNames[3] = {"init", "fill", "filter"};

} // namespace

const char* to_string(BenchErrc c) {
    switch (c) {
    case BenchErrc::zone_not_empty: return "ZoneNotEmpty";
    case BenchErrc::bad_config: return "BadConfig";
    case BenchErrc::scenario_failed: return "ScenarioFailed";
    case BenchErrc::io_error: return "IoError";
    }
    return "BenchError";
}

const char* to_string(Scenario s) {
    switch (s) {
    case Scenario::Host: return "host";
    case Scenario::Interpreted: return "interp";
    case Scenario::NativeKernel: return "native";
    }
    return "?";
}

std::optional<Scenario> parse_scenario(const std::string& name) {
    if (name == "host") return Scenario::Host;
    if (name == "interp") return Scenario::Interpreted;
    if (name == "native") return Scenario::NativeKernel;
    return std::nullopt;
}

uint64_t fill_zone_random(ZnsDevice& device, uint32_t zone_id, uint64_t seed) {
    auto report = device.zone_report();
    if (zone_id >= report.size()) {
        throw ZnsError(ZnsErrc::bad_zone_id, "zone " + std::to_string(zone_id));
    }
    if (report[zone_id].state != ZoneState::Empty) {
        throw BenchError(BenchErrc::zone_not_empty,
                         "zone " + std::to_string(zone_id) + " is " +
                             to_string(report[zone_id].state));
    }
    const DeviceGeometry& geo = device.geometry();
    SplitMix64 prng(seed);

    uint64_t chunk_blocks = std::max<uint64_t>(1, (4ull << 20) / geo.block_size);
    // reused across calls: repeated large allocations dominate fill jitter
    thread_local std::vector<std::byte> chunk;
    uint64_t remaining = geo.zone_size;
    while (remaining > 0) {
        uint64_t bytes = std::min(remaining, chunk_blocks * geo.block_size);
        chunk.resize(bytes);
        uint64_t off = 0;
        for (; off + 8 <= bytes; off += 8) {
            store_le64(chunk.data() + off, prng.next());
        }
        if (off < bytes) {    // zone smaller than 8 bytes: truncate one output
            uint64_t v = prng.next();
            for (; off < bytes; ++off) {
                chunk[off] = static_cast<std::byte>(v);
                v >>= 8;
            }
        }
        device.zone_append(zone_id, chunk);
        remaining -= bytes;
    }
    return geo.zone_size;
}

uint64_t host_filter_count(const ZnsDevice& device, uint32_t zone_id, uint32_t threshold) {
    auto report = device.zone_report();
    if (zone_id >= report.size()) {
        throw ZnsError(ZnsErrc::bad_zone_id, "zone " + std::to_string(zone_id));
    }
    const DeviceGeometry& geo = device.geometry();
    const ZoneDescriptor& zone = report[zone_id];
    std::vector<std::byte> page(geo.block_size);
    uint64_t count = 0;
    for (uint64_t rel = 0; rel < zone.write_pointer; ++rel) {
        device.read(zone.start_lba + rel, 0, geo.block_size, page.data());
        for (uint64_t off = 0; off + 4 <= geo.block_size; off += 4) {
            if (load_le32(page.data() + off) > threshold) ++count;
        }
    }
    return count;
}

namespace {

PhaseAggregate aggregate_phase(const std::vector<BenchRun>& runs, uint64_t PhaseTimes::* member) {
    PhaseAggregate agg;
    agg.min_us = UINT64_MAX;
    double sum = 0;
    for (const BenchRun& r : runs) {
        uint64_t v = r.phases.*member;
        sum += static_cast<double>(v);
        agg.min_us = std::min(agg.min_us, v);
        agg.max_us = std::max(agg.max_us, v);
    }
    agg.mean_us = sum / static_cast<double>(runs.size());
    return agg;
}

struct FilterSetup {
    std::vector<uint8_t> image_bytes;
    Digest256 digest{};
    FilterParams params;
    uint64_t budget = 0;
};

// Keeps the core busy long enough for frequency governors to settle, so
// phase times do not depend on how much compute the previous scenario did.
volatile uint64_t g_spin_sink = 0;

void spin_up_cpu(uint64_t micros) {
    uint64_t acc = 0;
    auto until = Clock::now() + std::chrono::microseconds(micros);
    while (Clock::now() < until) {
        for (int i = 0; i < 1000; ++i) acc += static_cast<uint64_t>(i) * 2654435761u;
        g_spin_sink = acc;
    }
}

BenchRun execute_run(const BenchConfig& config, Scenario scenario, uint32_t run_index,
                     const FilterSetup* setup) {
    BenchRun run;
    run.run_index = run_index;
    spin_up_cpu(20000);
    const char* phase = "init";
    try {
        auto t_init = Clock::now();
        auto device = ZnsDevice::create(config.geometry);
        run.phases.init_us = micros_since(t_init);

        phase = "fill";
        auto t_fill = Clock::now();
        fill_zone_random(*device, 0, config.seed);
        run.phases.fill_us = micros_since(t_fill);

        phase = "filter";
        if (scenario == Scenario::Host) {
            auto t_filter = Clock::now();
            run.filter_count = host_filter_count(*device, 0, config.threshold);
            run.phases.filter_us = micros_since(t_filter);
            // the baseline moves the whole zone to the host to process it
            run.stats.bytes_read_device = config.geometry.zone_size;
            run.stats.bytes_to_host = config.geometry.zone_size;
        } else {
            NvmCsdOptions opts;
            opts.shared_region_size = std::max(config.shared_region_size,
                                               config.geometry.block_size);
            opts.max_instructions = setup->budget;
            NvmCsd engine(*device, opts);
            ExecMode mode = ExecMode::Interpreted;
            if (scenario == Scenario::NativeKernel) {
                engine.register_native_kernel(setup->digest, make_filter_kernel(setup->params));
                mode = ExecMode::NativeKernel;
            }
            auto t_filter = Clock::now();
            uint64_t size = engine.nvm_cmd_bpf_run(setup->image_bytes, mode);
            run.phases.filter_us = micros_since(t_filter);
            if (size != 8) {
                throw BenchError(BenchErrc::scenario_failed,
                                 "filter returned " + std::to_string(size) + " bytes, expected 8");
            }
            run.filter_count = load_le64(engine.nvm_cmd_bpf_result().data());
            run.stats = engine.stats_snapshot();
        }
    } catch (const std::exception& e) {
        throw BenchError(BenchErrc::scenario_failed,
                         std::string("scenario=") + to_string(scenario) + " run=" +
                             std::to_string(run_index) + " phase=" + phase + ": " + e.what());
    }
    return run;
}

} // namespace

BenchReport run_benchmark(const BenchConfig& config) {
    if (config.runs == 0) {
        throw BenchError(BenchErrc::bad_config, "runs must be >= 1");
    }
    if (config.scenarios.empty()) {
        throw BenchError(BenchErrc::bad_config, "no scenarios selected");
    }
    config.geometry.validate();

    bool needs_offload = false;
    for (Scenario s : config.scenarios) {
        if (s != Scenario::Host) needs_offload = true;
    }
    FilterSetup setup;
    if (needs_offload) {
        uint64_t pages = config.geometry.blocks_per_zone();
        ProgramImage image = build_filter_program(config.threshold, 0, pages);
        setup.image_bytes = serialize(image);
        setup.digest = image.digest;
        setup.params = FilterParams{config.threshold, 0, pages};
        setup.budget = filter_instruction_budget(pages, config.geometry.block_size);
    }

    BenchReport report;
    report.config = config;
    report.scenarios.resize(config.scenarios.size());
    for (size_t i = 0; i < config.scenarios.size(); ++i) {
        report.scenarios[i].scenario = config.scenarios[i];
    }
    // One untimed warmup cycle pays first-touch allocator and page-cache
    // costs; then run-major order spreads slow drift evenly across scenarios.
    for (size_t i = 0; i < config.scenarios.size(); ++i) {
        execute_run(config, config.scenarios[i], 0, needs_offload ? &setup : nullptr);
    }
    for (uint32_t run = 0; run < config.runs; ++run) {
        for (size_t i = 0; i < config.scenarios.size(); ++i) {
            report.scenarios[i].runs.push_back(
                execute_run(config, config.scenarios[i], run, needs_offload ? &setup : nullptr));
        }
    }
    uint64_t expected_count = report.scenarios.front().runs.front().filter_count;
    for (const ScenarioResult& s : report.scenarios) {
        for (const BenchRun& r : s.runs) {
            if (r.filter_count != expected_count) {
                throw BenchError(BenchErrc::scenario_failed,
                                 std::string("filter counts diverge: scenario=") +
                                     to_string(s.scenario) + " run=" +
                                     std::to_string(r.run_index) + " got " +
                                     std::to_string(r.filter_count) + ", expected " +
                                     std::to_string(expected_count));
            }
        }
    }
    for (ScenarioResult& s : report.scenarios) {
        s.aggregate.init = aggregate_phase(s.runs, &PhaseTimes::init_us);
        s.aggregate.fill = aggregate_phase(s.runs, &PhaseTimes::fill_us);
        s.aggregate.filter = aggregate_phase(s.runs, &PhaseTimes::filter_us);
    }
    return report;
}

void write_csv(const BenchReport& report, std::ostream& out) {
    out << "scenario,run,phase,micros,count,instructions_executed,bytes_read_device,bytes_to_host\n";
    for (const ScenarioResult& s : report.scenarios) {
        for (const BenchRun& r : s.runs) {
            const uint64_t micros[3] = {r.phases.init_us, r.phases.fill_us, r.phases.filter_us};
            for (int p = 0; p < 3; ++p) {
                out << to_string(s.scenario) << ',' << r.run_index << ',' << kPhaseNames[p] << ','
                    << micros[p] << ',' << r.filter_count << ',' << r.stats.instructions_executed
                    << ',' << r.stats.bytes_read_device << ',' << r.stats.bytes_to_host << '\n';
            }
        }
    }
}

namespace {

ordered_json to_json(const PhaseAggregate& a) {
    return ordered_json{{"mean_us", a.mean_us}, {"min_us", a.min_us}, {"max_us", a.max_us}};
}

PhaseAggregate phase_aggregate_from_json(const ordered_json& j) {
    PhaseAggregate a;
    a.mean_us = j.at("mean_us").get<double>();
    a.min_us = j.at("min_us").get<uint64_t>();
    a.max_us = j.at("max_us").get<uint64_t>();
    return a;
}

ordered_json to_json(const Stats& s) {
    return ordered_json{{"phase_micros", s.phase_micros},
                        {"instructions_executed", s.instructions_executed},
                        {"helper_calls", s.helper_calls},
                        {"bytes_read_device", s.bytes_read_device},
                        {"bytes_to_host", s.bytes_to_host},
                        {"data_movement_saved", s.data_movement_saved()}};
}

Stats stats_from_json(const ordered_json& j) {
    Stats s;
    s.phase_micros = j.at("phase_micros").get<std::map<std::string, uint64_t>>();
    s.instructions_executed = j.at("instructions_executed").get<uint64_t>();
    s.helper_calls = j.at("helper_calls").get<uint64_t>();
    s.bytes_read_device = j.at("bytes_read_device").get<uint64_t>();
    s.bytes_to_host = j.at("bytes_to_host").get<uint64_t>();
    return s;
}

} // namespace

void write_json(const BenchReport& report, std::ostream& out) {
    ordered_json j;
    std::vector<std::string> scenario_names;
    for (Scenario s : report.config.scenarios) scenario_names.emplace_back(to_string(s));
    j["config"] = ordered_json{{"block_size", report.config.geometry.block_size},
                               {"zone_size", report.config.geometry.zone_size},
                               {"zone_count", report.config.geometry.zone_count},
                               {"seed", report.config.seed},
                               {"threshold", report.config.threshold},
                               {"runs", report.config.runs},
                               {"scenarios", scenario_names},
                               {"shared_region_size", report.config.shared_region_size}};
    j["scenarios"] = ordered_json::array();
    for (const ScenarioResult& s : report.scenarios) {
        ordered_json js;
        js["scenario"] = to_string(s.scenario);
        js["runs"] = ordered_json::array();
        for (const BenchRun& r : s.runs) {
            js["runs"].push_back(ordered_json{
                {"run", r.run_index},
                {"phases", ordered_json{{"init_us", r.phases.init_us},
                                        {"fill_us", r.phases.fill_us},
                                        {"filter_us", r.phases.filter_us}}},
                {"count", r.filter_count},
                {"stats", to_json(r.stats)}});
        }
        js["aggregate"] = ordered_json{{"init", to_json(s.aggregate.init)},
                                       {"fill", to_json(s.aggregate.fill)},
                                       {"filter", to_json(s.aggregate.filter)}};
        j["scenarios"].push_back(std::move(js));
    }
    out << j.dump(2) << '\n';
}

BenchReport report_from_json(std::istream& in) {
    ordered_json j = ordered_json::parse(in);
    BenchReport report;
    const auto& jc = j.at("config");
    report.config.geometry.block_size = jc.at("block_size").get<uint64_t>();
    report.config.geometry.zone_size = jc.at("zone_size").get<uint64_t>();
    report.config.geometry.zone_count = jc.at("zone_count").get<uint32_t>();
    report.config.seed = jc.at("seed").get<uint64_t>();
    report.config.threshold = jc.at("threshold").get<uint32_t>();
    report.config.runs = jc.at("runs").get<uint32_t>();
    report.config.scenarios.clear();
    for (const auto& name : jc.at("scenarios")) {
        auto s = parse_scenario(name.get<std::string>());
        if (!s) throw BenchError(BenchErrc::bad_config, "unknown scenario in report");
        report.config.scenarios.push_back(*s);
    }
    report.config.shared_region_size = jc.at("shared_region_size").get<uint64_t>();

    for (const auto& js : j.at("scenarios")) {
        ScenarioResult s;
        auto parsed = parse_scenario(js.at("scenario").get<std::string>());
        if (!parsed) throw BenchError(BenchErrc::bad_config, "unknown scenario in report");
        s.scenario = *parsed;
        for (const auto& jr : js.at("runs")) {
            BenchRun r;
            r.run_index = jr.at("run").get<uint32_t>();
            r.phases.init_us = jr.at("phases").at("init_us").get<uint64_t>();
            r.phases.fill_us = jr.at("phases").at("fill_us").get<uint64_t>();
            r.phases.filter_us = jr.at("phases").at("filter_us").get<uint64_t>();
            r.filter_count = jr.at("count").get<uint64_t>();
            r.stats = stats_from_json(jr.at("stats"));
            s.runs.push_back(std::move(r));
        }
        s.aggregate.init = phase_aggregate_from_json(js.at("aggregate").at("init"));
        s.aggregate.fill = phase_aggregate_from_json(js.at("aggregate").at("fill"));
        s.aggregate.filter = phase_aggregate_from_json(js.at("aggregate").at("filter"));
        report.scenarios.push_back(std::move(s));
    }
    return report;
}

} // namespace zcsd
