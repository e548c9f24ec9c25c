// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "rid/denoiser.hpp"
#include "rid/errors.hpp"
#include "rid/schedule.hpp"

namespace rid {

/// Checkpoint format "RIDC": little-endian, named f64 arrays.
///
///   magic "RIDC" | u32 version | u64 array count
///   per array: u32 name length | name | u32 rank | u64 dims[rank] | f64 data
///
/// Two meta arrays carry the architecture and schedule so a file fully
/// reconstructs the model: meta.arch = [img_h, img_w, hidden, n_hidden,
/// time_dim, cond_dim], meta.schedule = [steps, beta_min, beta_max].
namespace ckpt {

constexpr uint32_t kVersion = 1;

inline void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& os, double d) {
    uint64_t v;
    std::memcpy(&v, &d, 8);
    write_u64(os, v);
}

inline uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw io_error("checkpoint: truncated file");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

inline uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw io_error("checkpoint: truncated file");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double read_f64(std::istream& is) {
    const uint64_t v = read_u64(is);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

struct Array {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;
};

inline void write_array(std::ostream& os, const std::string& name, const std::vector<int>& shape,
                        const std::vector<double>& data) {
    write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<uint32_t>(shape.size()));
    for (int d : shape) write_u64(os, static_cast<uint64_t>(d));
    for (double v : data) write_f64(os, v);
}

}  // namespace ckpt

struct LoadedCheckpoint {
    Denoiser model;
    NoiseSchedule schedule;
    double beta_min = 0.0;
    double beta_max = 0.0;
};

inline void save_checkpoint(const std::string& path, const Denoiser& model,
                            const NoiseSchedule& sched, double beta_min, double beta_max) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("checkpoint: cannot open " + path + " for writing");
    os.write("RIDC", 4);
    ckpt::write_u32(os, ckpt::kVersion);

    auto params = const_cast<Denoiser&>(model).named_params();
    ckpt::write_u64(os, params.size() + 2);

    const auto& cfg = model.config();
    ckpt::write_array(os, "meta.arch", {6},
                      {static_cast<double>(cfg.img_h), static_cast<double>(cfg.img_w),
                       static_cast<double>(cfg.hidden), static_cast<double>(cfg.n_hidden),
                       static_cast<double>(cfg.time_dim), static_cast<double>(cfg.cond_dim)});
    ckpt::write_array(os, "meta.schedule", {3},
                      {static_cast<double>(sched.steps), beta_min, beta_max});
    for (auto& [name, p] : params) ckpt::write_array(os, name, p->shape, p->vec());
    if (!os) throw io_error("checkpoint: write failed for " + path);
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "RIDC", 4) != 0)
        throw io_error("checkpoint: bad magic in " + path);
    const uint32_t version = ckpt::read_u32(is);
    if (version != ckpt::kVersion)
        throw io_error("checkpoint: unsupported version " + std::to_string(version));

    const uint64_t count = ckpt::read_u64(is);
    std::vector<ckpt::Array> arrays;
    std::map<std::string, size_t> index;
    for (uint64_t i = 0; i < count; ++i) {
        ckpt::Array a;
        const uint32_t name_len = ckpt::read_u32(is);
        a.name.resize(name_len);
        is.read(a.name.data(), name_len);
        const uint32_t rank = ckpt::read_u32(is);
        int64_t numel = 1;
        for (uint32_t r = 0; r < rank; ++r) {
            const uint64_t d = ckpt::read_u64(is);
            a.shape.push_back(static_cast<int>(d));
            numel *= static_cast<int64_t>(d);
        }
        a.data.resize(static_cast<size_t>(numel));
        for (auto& v : a.data) v = ckpt::read_f64(is);
        if (index.count(a.name)) throw io_error("checkpoint: duplicate array " + a.name);
        index[a.name] = arrays.size();
        arrays.push_back(std::move(a));
    }

    auto get = [&](const std::string& name) -> const ckpt::Array& {
        auto it = index.find(name);
        if (it == index.end()) throw io_error("checkpoint: missing array " + name);
        return arrays[it->second];
    };

    const auto& arch = get("meta.arch").data;
    const auto& meta_sched = get("meta.schedule").data;
    if (arch.size() != 6 || meta_sched.size() != 3)
        throw io_error("checkpoint: malformed meta arrays");

    DenoiserConfig cfg;
    cfg.img_h = static_cast<int>(arch[0]);
    cfg.img_w = static_cast<int>(arch[1]);
    cfg.hidden = static_cast<int>(arch[2]);
    cfg.n_hidden = static_cast<int>(arch[3]);
    cfg.time_dim = static_cast<int>(arch[4]);
    cfg.cond_dim = static_cast<int>(arch[5]);

    LoadedCheckpoint out{
        [&] {
            rng::Stream dummy(0);
            return Denoiser(cfg, static_cast<int>(meta_sched[0]), dummy);
        }(),
        build_schedule(static_cast<int>(meta_sched[0]), meta_sched[1], meta_sched[2]),
        meta_sched[1], meta_sched[2]};

    // Rebuild adapter pairs from the persisted names, then fill every param.
    auto& layers = out.model.layers();
    for (size_t li = 0; li < layers.size(); ++li) {
        const std::string prefix = "layer" + std::to_string(li) + ".lora";
        for (int task = 1;; ++task) {
            const std::string an = prefix + std::to_string(task) + ".A";
            const std::string bn = prefix + std::to_string(task) + ".B";
            if (!index.count(an)) break;
            const auto& aa = arrays[index[an]];
            const auto& bb = arrays[index[bn]];
            LoraPair p;
            p.A = Tensor(aa.shape, aa.data);
            p.B = Tensor(bb.shape, bb.data);
            p.task_id = task;
            p.frozen = true;  // a checkpoint is a finished artifact
            layers[li].group.pairs.push_back(std::move(p));
        }
    }
    size_t used = 2;
    for (auto& [name, p] : out.model.named_params()) {
        const auto& a = get(name);
        if (a.shape != p->shape)
            throw io_error("checkpoint: shape mismatch for " + name);
        *p = Tensor(a.shape, a.data);
        ++used;
    }
    if (used != arrays.size()) throw io_error("checkpoint: unused arrays in " + path);
    return out;
}

}  // namespace rid
