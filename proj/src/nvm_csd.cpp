// Copyright (c) ZCSD contributors.
// SPDX-License-Identifier: Apache-2.0
#include "zcsd/nvm_csd.hpp"

#include <chrono>
#include <cstring>

#include "zcsd/bytes.hpp"
#include "zcsd/program_image.hpp"

namespace zcsd {

namespace {

using Clock = std::chrono::steady_clock;

uint64_t micros_since(Clock::time_point start) {
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count());
}

} // namespace

const char* to_string(CsdErrc c) {
    switch (c) {
    case CsdErrc::parse_error: return "ParseError";
    case CsdErrc::verify_failed: return "VerifyFailed";
    case CsdErrc::exec_fault: return "ExecFault";
    case CsdErrc::no_native_kernel: return "NoNativeKernel";
    case CsdErrc::duplicate_digest: return "DuplicateDigest";
    case CsdErrc::no_result: return "NoResult";
    }
    return "CsdError";
}

const char* to_string(ExecMode m) {
    return m == ExecMode::Interpreted ? "interp" : "native";
}

NvmCsd::NvmCsd(ZnsDevice& device, NvmCsdOptions options) : dev_(device), opts_(options) {
    if (opts_.shared_region_size < dev_.geometry().block_size) {
        throw std::invalid_argument("shared_region_size must hold at least one block");
    }
    if (opts_.max_instructions == 0 || opts_.stack_size == 0) {
        throw std::invalid_argument("max_instructions and stack_size must be positive");
    }
    scratch_.assign(opts_.shared_region_size, std::byte{0});

    vm_config_.max_instructions = opts_.max_instructions;
    vm_config_.stack_size = opts_.stack_size;
    vm_config_.helper_table[1] = [this](bpf::ExecContext& ctx, const std::array<uint64_t, 5>& a) {
        return helper_return_data(ctx, a);
    };
    vm_config_.helper_table[2] = [this](bpf::ExecContext& ctx, const std::array<uint64_t, 5>& a) {
        return helper_read(ctx, a);
    };
    vm_config_.helper_table[3] = [this](bpf::ExecContext&, const std::array<uint64_t, 5>&) {
        return dev_.geometry().block_size;
    };
    vm_config_.helper_table[4] = [this](bpf::ExecContext& ctx, const std::array<uint64_t, 5>& a) {
        return helper_get_mem_info(ctx, a);
    };
}

void NvmCsd::set_max_instructions(uint64_t budget) {
    std::lock_guard<std::mutex> lock(mu_);
    if (budget == 0) throw std::invalid_argument("max_instructions must be positive");
    opts_.max_instructions = budget;
    vm_config_.max_instructions = budget;
}

void NvmCsd::append_result(const std::byte* data, uint64_t size) {
    if (size > kResultBufferCap - result_.size()) {
        throw bpf::VmFault(bpf::FaultKind::helper_fault,
                           "result buffer cap of " + std::to_string(kResultBufferCap) +
                               " bytes exceeded");
    }
    if (size == 0) return;
    const auto* p = reinterpret_cast<const uint8_t*>(data);
    result_.insert(result_.end(), p, p + size);
    stats_.bytes_to_host += size;
}

uint64_t NvmCsd::helper_return_data(bpf::ExecContext& ctx, const std::array<uint64_t, 5>& args) {
    uint64_t addr = args[0];
    uint64_t size = args[1];
    const std::byte* src = ctx.deref(addr, size);    // MemFault if out of sandbox
    append_result(src, size);
    return 0;
}

uint64_t NvmCsd::helper_read(bpf::ExecContext& ctx, const std::array<uint64_t, 5>& args) {
    uint64_t lba = args[0];
    uint64_t offset = args[1];
    uint64_t limit = args[2];
    uint64_t dest = args[3];
    if (limit > kReadLimitMax) {
        throw bpf::VmFault(bpf::FaultKind::helper_fault,
                           "read limit " + std::to_string(limit) + " exceeds 16-bit bound");
    }
    if (limit == 0) return 0;
    std::byte* p = ctx.deref(dest, limit);
    try {
        dev_.read(lba, offset, limit, p);
    } catch (const ZnsError& e) {
        throw bpf::VmFault(bpf::FaultKind::helper_fault, e.what());
    }
    stats_.bytes_read_device += limit;
    return 0;
}

uint64_t NvmCsd::helper_get_mem_info(bpf::ExecContext& ctx, const std::array<uint64_t, 5>& args) {
    std::byte* size_out = ctx.deref(args[0], 8);
    store_le64(size_out, ctx.shared_size());
    return ctx.shared_base();
}

uint64_t NvmCsd::nvm_cmd_bpf_run(std::span<const uint8_t> image_bytes, ExecMode mode) {
    std::lock_guard<std::mutex> lock(mu_);
    return run_locked(image_bytes, mode);
}

uint64_t NvmCsd::run_locked(std::span<const uint8_t> image_bytes, ExecMode mode) {
    stats_ = Stats{};
    result_.clear();
    has_result_ = false;

    auto t_parse = Clock::now();
    ProgramImage image;
    try {
        image = decode_image(image_bytes);
    } catch (const ImageError& e) {
        throw CsdError(CsdErrc::parse_error, e.what());
    }
    stats_.phase_micros["parse"] = micros_since(t_parse);

    if (mode == ExecMode::NativeKernel) {
        auto it = kernels_.find(image.digest);
        if (it == kernels_.end()) {
            throw CsdError(CsdErrc::no_native_kernel,
                           "no kernel registered for image digest " + to_hex(image.digest));
        }
        auto t_exec = Clock::now();
        KernelEnv env(*this);
        try {
            it->second(env);
        } catch (const std::exception& e) {
            result_.clear();
            stats_.bytes_to_host = 0;
            throw CsdError(CsdErrc::exec_fault, e.what());
        }
        stats_.phase_micros["exec"] = micros_since(t_exec);
        has_result_ = true;
        return result_.size();
    }

    bpf::Program program;
    try {
        program = bpf::decode(image.code);
    } catch (const bpf::DecodeError& e) {
        throw CsdError(CsdErrc::parse_error, e.what());
    }

    auto t_verify = Clock::now();
    bpf::VerifyReport report = bpf::verify(program, vm_config_);
    stats_.phase_micros["verify"] = micros_since(t_verify);
    if (!report.pass()) {
        throw CsdError(CsdErrc::verify_failed, report.to_string(), std::move(report));
    }

    auto t_exec = Clock::now();
    bpf::ExecContext ctx(vm_config_.stack_size, scratch_);
    try {
        bpf::execute(program, vm_config_, ctx);
    } catch (const bpf::VmFault& e) {
        stats_.instructions_executed = ctx.instructions_executed;
        stats_.helper_calls = ctx.helper_calls;
        stats_.phase_micros["exec"] = micros_since(t_exec);
        result_.clear();
        stats_.bytes_to_host = 0;
        throw CsdError(CsdErrc::exec_fault, e.what());
    }
    stats_.instructions_executed = ctx.instructions_executed;
    stats_.helper_calls = ctx.helper_calls;
    stats_.phase_micros["exec"] = micros_since(t_exec);
    has_result_ = true;
    return result_.size();
}

std::vector<uint8_t> NvmCsd::nvm_cmd_bpf_result() const {
    std::lock_guard<std::mutex> lock(mu_);
    if (!has_result_) {
        throw CsdError(CsdErrc::no_result, "no completed run");
    }
    return result_;
}

void NvmCsd::register_native_kernel(const Digest256& image_digest, NativeKernel kernel) {
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = kernels_.emplace(image_digest, std::move(kernel));
    if (!inserted) {
        throw CsdError(CsdErrc::duplicate_digest,
                       "kernel already registered for digest " + to_hex(image_digest));
    }
}

Stats NvmCsd::stats_snapshot() const {
    std::lock_guard<std::mutex> lock(mu_);
    return stats_;
}

void KernelEnv::return_data(std::span<const std::byte> data) {
    ++csd_.stats_.helper_calls;
    csd_.append_result(data.data(), data.size());
}

void KernelEnv::read(uint64_t lba, uint64_t offset, uint64_t limit, std::byte* dest) {
    ++csd_.stats_.helper_calls;
    if (limit > NvmCsd::kReadLimitMax) {
        throw std::runtime_error("read limit " + std::to_string(limit) + " exceeds 16-bit bound");
    }
    if (limit == 0) return;
    csd_.dev_.read(lba, offset, limit, dest);
    csd_.stats_.bytes_read_device += limit;
}

uint64_t KernelEnv::lba_size() const { return csd_.dev_.geometry().block_size; }

std::span<std::byte> KernelEnv::mem_region() { return csd_.scratch_; }

} // namespace zcsd
