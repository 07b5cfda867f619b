// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
//
// zcsd: command-line front end for the zoned computational storage
// simulator. Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "zcsd/bench.hpp"
#include "zcsd/bytes.hpp"
#include "zcsd/filter_program.hpp"
#include "zcsd/nvm_csd.hpp"
#include "zcsd/program_image.hpp"
#include "zcsd/sha256.hpp"
#include "zcsd/zns_device.hpp"

namespace {

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    return data;
}

void write_file(const std::string& path, const std::vector<uint8_t>& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot create " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("write failed for " + path);
}

void print_stats(const zcsd::Stats& stats) {
    for (const auto& [phase, us] : stats.phase_micros) {
        std::cout << "phase_" << phase << "_us=" << us << "\n";
    }
    std::cout << "instructions_executed=" << stats.instructions_executed << "\n";
    std::cout << "helper_calls=" << stats.helper_calls << "\n";
    std::cout << "bytes_read_device=" << stats.bytes_read_device << "\n";
    std::cout << "bytes_to_host=" << stats.bytes_to_host << "\n";
    std::cout << "data_movement_saved=" << stats.data_movement_saved() << "\n";
}

struct GeometryFlags {
    uint64_t zone_size = 16ull << 20;
    uint64_t block_size = 4096;
    uint32_t zones = 4;

    zcsd::DeviceGeometry geometry() const { return {block_size, zone_size, zones}; }

    void attach(CLI::App* cmd) {
        cmd->add_option("--zone-size", zone_size, "zone size in bytes")->capture_default_str();
        cmd->add_option("--block-size", block_size, "block/page size in bytes")->capture_default_str();
        cmd->add_option("--zones", zones, "number of zones")->capture_default_str();
    }
};

int cmd_bench(uint64_t zone_size, uint64_t block_size, uint32_t zones, uint64_t seed,
              uint32_t threshold, uint32_t runs, const std::vector<std::string>& scenario_names,
              const std::string& format, const std::string& out_path) {
    zcsd::BenchConfig config;
    config.geometry = zcsd::DeviceGeometry{block_size, zone_size, zones};
    config.seed = seed;
    config.threshold = threshold;
    config.runs = runs;
    config.scenarios.clear();
    for (const std::string& name : scenario_names) {
        auto s = zcsd::parse_scenario(name);
        if (!s) throw CLI::ValidationError("--scenarios", "unknown scenario '" + name + "'");
        config.scenarios.push_back(*s);
    }

    zcsd::BenchReport report = zcsd::run_benchmark(config);

    std::ostringstream buf;
    if (format == "csv") {
        zcsd::write_csv(report, buf);
    } else {
        zcsd::write_json(report, buf);
    }
    if (out_path.empty() || out_path == "-") {
        std::cout << buf.str();
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw zcsd::BenchError(zcsd::BenchErrc::io_error, "cannot create " + out_path);
        out << buf.str();
        if (!out) throw zcsd::BenchError(zcsd::BenchErrc::io_error, "write failed for " + out_path);
    }
    return 0;
}

int cmd_run(const std::string& image_path, const std::string& device_path, const std::string& mode,
            uint64_t mem_bytes, uint64_t max_insns) {
    auto device = zcsd::ZnsDevice::open(device_path);
    auto image_bytes = read_file(image_path);
    zcsd::ProgramImage image = zcsd::decode_image(image_bytes);

    zcsd::NvmCsdOptions opts;
    opts.shared_region_size = std::max(mem_bytes, device->geometry().block_size);

    auto filter = zcsd::try_parse_filter_image(image);
    if (max_insns != 0) {
        opts.max_instructions = max_insns;
    } else if (filter) {
        opts.max_instructions =
            zcsd::filter_instruction_budget(filter->page_count, device->geometry().block_size);
    }

    zcsd::NvmCsd engine(*device, opts);
    zcsd::ExecMode exec_mode = zcsd::ExecMode::Interpreted;
    if (mode == "native") {
        exec_mode = zcsd::ExecMode::NativeKernel;
        if (filter) {
            engine.register_native_kernel(image.digest, zcsd::make_filter_kernel(*filter));
        }
    }

    uint64_t size = engine.nvm_cmd_bpf_run(image_bytes, exec_mode);
    std::vector<uint8_t> result = engine.nvm_cmd_bpf_result();
    std::cout << "mode=" << to_string(exec_mode) << "\n";
    std::cout << "result_size=" << size << "\n";
    if (size == 8) {
        std::cout << "result_u64=" << zcsd::load_le64(result.data()) << "\n";
    }
    if (!result.empty()) {
        std::cout << "result_hex=" << zcsd::to_hex({result.data(), std::min<size_t>(result.size(), 64)})
                  << (result.size() > 64 ? "..." : "") << "\n";
    }
    print_stats(engine.stats_snapshot());
    return 0;
}

int cmd_device_create(const std::string& device_path, const GeometryFlags& flags) {
    auto geometry = flags.geometry();
    auto device = zcsd::ZnsDevice::create(geometry, device_path);
    std::cout << "created " << device_path << ": zones=" << geometry.zone_count
              << " zone_size=" << geometry.zone_size << " block_size=" << geometry.block_size
              << " blocks_per_zone=" << geometry.blocks_per_zone() << "\n";
    return 0;
}

int cmd_device_report(const std::string& device_path) {
    auto device = zcsd::ZnsDevice::open(device_path);
    const auto& geo = device->geometry();
    std::cout << "block_size=" << geo.block_size << " zone_size=" << geo.zone_size
              << " zones=" << geo.zone_count << "\n";
    std::cout << "zone,state,write_pointer,start_lba\n";
    for (const auto& z : device->zone_report()) {
        std::cout << z.zone_id << ',' << to_string(z.state) << ',' << z.write_pointer << ','
                  << z.start_lba << "\n";
    }
    return 0;
}

int cmd_device_fill(const std::string& device_path, uint32_t zone, uint64_t seed) {
    auto device = zcsd::ZnsDevice::open(device_path);
    uint64_t written = zcsd::fill_zone_random(*device, zone, seed);
    std::cout << "filled zone " << zone << " with " << written << " bytes (seed " << seed << ")\n";
    return 0;
}

int cmd_image_build_filter(uint32_t threshold, uint64_t start_lba, uint64_t pages,
                           const std::string& out_path) {
    zcsd::ProgramImage image = zcsd::build_filter_program(threshold, start_lba, pages);
    write_file(out_path, zcsd::serialize(image));
    std::cout << "wrote " << out_path << ": instructions=" << image.insn_count()
              << " digest=" << zcsd::to_hex(image.digest) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"zcsd: zoned computational storage simulator"};
    app.require_subcommand(1);

    // bench
    auto* bench = app.add_subcommand("bench", "run the three-scenario filter benchmark");
    uint64_t zone_size = 16ull << 20, block_size = 4096, seed = 42;
    uint32_t zones = 4, threshold = 0x80000000u, runs = 5;
    std::vector<std::string> scenarios{"host", "interp", "native"};
    std::string format = "csv", out_path;
    bench->add_option("--zone-size", zone_size, "zone size in bytes")->capture_default_str();
    bench->add_option("--block-size", block_size, "block/page size in bytes")->capture_default_str();
    bench->add_option("--zones", zones, "number of zones")->capture_default_str();
    bench->add_option("--seed", seed, "fill PRNG seed")->capture_default_str();
    bench->add_option("--threshold", threshold, "count samples strictly above this value")
        ->capture_default_str();
    bench->add_option("--runs", runs, "repetitions per scenario")->capture_default_str();
    bench->add_option("--scenarios", scenarios, "comma-separated subset of host,interp,native")
        ->delimiter(',')
        ->check(CLI::IsMember({"host", "interp", "native"}));
    bench->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    bench->add_option("--out", out_path, "output path (default: stdout)");

    // run
    auto* run = app.add_subcommand("run", "run a program image against a device image");
    std::string run_image, run_device, run_mode = "interp";
    uint64_t run_mem = 64 * 1024, run_max_insns = 0;
    run->add_option("--image", run_image, "program image (.zbpf)")->required();
    run->add_option("--device", run_device, "device image file")->required();
    run->add_option("--mode", run_mode, "execution mode")
        ->check(CLI::IsMember({"interp", "native"}))
        ->capture_default_str();
    run->add_option("--mem", run_mem, "device-side scratch memory in bytes")->capture_default_str();
    run->add_option("--max-instructions", run_max_insns,
                    "instruction budget (default: derived for filter images)");

    // device create|report|fill
    auto* device = app.add_subcommand("device", "manage device image files");
    device->require_subcommand(1);
    auto* dev_create = device->add_subcommand("create", "create a fresh device image");
    std::string dev_path;
    GeometryFlags dev_geo;
    dev_create->add_option("--device", dev_path, "device image file")->required();
    dev_geo.attach(dev_create);
    auto* dev_report = device->add_subcommand("report", "print the zone table");
    std::string report_path;
    dev_report->add_option("--device", report_path, "device image file")->required();
    auto* dev_fill = device->add_subcommand("fill", "fill a zone with seeded random integers");
    std::string fill_path;
    uint32_t fill_zone = 0;
    uint64_t fill_seed = 42;
    dev_fill->add_option("--device", fill_path, "device image file")->required();
    dev_fill->add_option("--zone", fill_zone, "zone id")->capture_default_str();
    dev_fill->add_option("--seed", fill_seed, "fill PRNG seed")->capture_default_str();

    // image build-filter
    auto* image = app.add_subcommand("image", "build program images");
    image->require_subcommand(1);
    auto* build_filter = image->add_subcommand("build-filter", "build the integer filter program");
    uint32_t bf_threshold = 0x80000000u;
    uint64_t bf_start_lba = 0, bf_pages = 1;
    std::string bf_out;
    build_filter->add_option("--threshold", bf_threshold, "count samples strictly above this value")
        ->capture_default_str();
    build_filter->add_option("--start-lba", bf_start_lba, "first block to scan")->capture_default_str();
    build_filter->add_option("--pages", bf_pages, "number of blocks to scan")->required();
    build_filter->add_option("--out", bf_out, "output path (.zbpf)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (bench->parsed()) {
            return cmd_bench(zone_size, block_size, zones, seed, threshold, runs, scenarios, format,
                             out_path);
        }
        if (run->parsed()) {
            return cmd_run(run_image, run_device, run_mode, run_mem, run_max_insns);
        }
        if (device->parsed()) {
            if (dev_create->parsed()) return cmd_device_create(dev_path, dev_geo);
            if (dev_report->parsed()) return cmd_device_report(report_path);
            if (dev_fill->parsed()) return cmd_device_fill(fill_path, fill_zone, fill_seed);
        }
        if (image->parsed() && build_filter->parsed()) {
            return cmd_image_build_filter(bf_threshold, bf_start_lba, bf_pages, bf_out);
        }
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
