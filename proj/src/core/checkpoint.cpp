// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

namespace avrfn {

namespace {

constexpr char kMagic[4] = {'A', 'V', 'R', 'F'};
constexpr uint32_t kVersion = 1;

struct Writer {
    std::vector<unsigned char> buf;

    void u8(uint8_t v) { buf.push_back(v); }
    void u32(uint32_t v)
    {
        for (int i = 0; i < 4; ++i)
            buf.push_back((unsigned char)(v >> (8 * i)));
    }
    void u64(uint64_t v)
    {
        for (int i = 0; i < 8; ++i)
            buf.push_back((unsigned char)(v >> (8 * i)));
    }
    void i32(int32_t v) { u32(uint32_t(v)); }
    void i64(int64_t v) { u64(uint64_t(v)); }
    void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
    void str(const std::string& s)
    {
        u32(uint32_t(s.size()));
        buf.insert(buf.end(), s.begin(), s.end());
    }
    void doubles(std::span<const double> v)
    {
        u64(v.size());
        for (double d : v)
            f64(d);
    }
};

struct Reader {
    const unsigned char* p;
    const unsigned char* end;

    void need(std::size_t n) const
    {
        require(std::size_t(end - p) >= n, ErrorCode::format, "checkpoint: truncated file");
    }
    uint8_t u8()
    {
        need(1);
        return *p++;
    }
    uint32_t u32()
    {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= uint32_t(*p++) << (8 * i);
        return v;
    }
    uint64_t u64()
    {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= uint64_t(*p++) << (8 * i);
        return v;
    }
    int32_t i32() { return int32_t(u32()); }
    int64_t i64() { return int64_t(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str()
    {
        uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        return s;
    }
    std::vector<double> doubles()
    {
        uint64_t n = u64();
        need(n * 8);
        std::vector<double> v(n);
        for (uint64_t i = 0; i < n; ++i)
            v[i] = f64();
        return v;
    }
};

void write_spec(Writer& w, const ModelSpec& s)
{
    w.i32(int32_t(s.variant));
    w.i32(s.groups);
    w.i32(s.blocks_per_group);
    w.i32(s.filters);
    w.i32(s.scale);
    for (int r : s.dilation_rates)
        w.i32(r);
    w.i32(s.gate_reduction);
    w.i32(s.newton_schulz_iters);
    w.u64(s.init_seed);
}

ModelSpec read_spec(Reader& r)
{
    ModelSpec s;
    int v = r.i32();
    require(v >= 0 && v <= 3, ErrorCode::format, "checkpoint: bad variant tag");
    s.variant = Variant(v);
    s.groups = r.i32();
    s.blocks_per_group = r.i32();
    s.filters = r.i32();
    s.scale = r.i32();
    for (int& d : s.dilation_rates)
        d = r.i32();
    s.gate_reduction = r.i32();
    s.newton_schulz_iters = r.i32();
    s.init_seed = r.u64();
    return s;
}

} // namespace

void save_checkpoint(const std::string& path, const Model& model, const Adam* adam, int epoch,
                     std::int64_t global_step, const std::string& rng_state)
{
    Writer w;
    w.buf.insert(w.buf.end(), kMagic, kMagic + 4);
    w.u32(kVersion);
    write_spec(w, model.spec);
    w.i32(epoch);
    w.i64(global_step);

    const bool has_opt = adam != nullptr && adam->initialized();
    w.u8(has_opt ? 1 : 0);
    if (has_opt) {
        const AdamConfig& c = adam->config();
        w.f64(c.lr);
        w.f64(c.beta1);
        w.f64(c.beta2);
        w.f64(c.epsilon);
        w.f64(c.weight_decay);
        w.u8(c.decoupled_decay ? 1 : 0);
        w.i64(adam->step_count());
    }
    w.str(rng_state);

    w.u32(uint32_t(model.params.count()));
    for (const auto& [name, t] : model.params.entries()) {
        w.str(name);
        const Shape s = t.shape();
        w.i32(s.n);
        w.i32(s.h);
        w.i32(s.w);
        w.i32(s.c);
        w.doubles(t.data());
    }
    if (has_opt) {
        const auto& m = adam->moments_m();
        const auto& v = adam->moments_v();
        require(m.size() == model.params.count() && v.size() == model.params.count(),
                ErrorCode::internal, "checkpoint: optimizer state size mismatch");
        for (const auto& arr : m)
            w.doubles(arr);
        for (const auto& arr : v)
            w.doubles(arr);
    }

    const uint32_t crc = uint32_t(crc32(0, w.buf.data(), uInt(w.buf.size())));
    w.u32(crc);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorCode::io, "cannot write '" + path + "'");
    f.write(reinterpret_cast<const char*>(w.buf.data()), std::streamsize(w.buf.size()));
    require(f.good(), ErrorCode::io, "short write to '" + path + "'");
}

CheckpointData load_checkpoint(const std::string& path, Model& model_out)
{
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorCode::io, "cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    require(bytes.size() >= 12, ErrorCode::format, "checkpoint: file too small");

    // trailing CRC over everything before it
    const std::size_t body = bytes.size() - 4;
    uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= uint32_t(bytes[body + i]) << (8 * i);
    const uint32_t computed = uint32_t(crc32(0, bytes.data(), uInt(body)));
    require(stored == computed, ErrorCode::format, "checkpoint: CRC mismatch (corrupt file)");

    Reader r{bytes.data(), bytes.data() + body};
    r.need(4);
    require(std::memcmp(r.p, kMagic, 4) == 0, ErrorCode::format, "checkpoint: bad magic");
    r.p += 4;
    const uint32_t version = r.u32();
    require(version == kVersion, ErrorCode::format,
            "checkpoint: unsupported version " + std::to_string(version));

    CheckpointData data;
    data.spec = read_spec(r);
    data.epoch = r.i32();
    data.global_step = r.i64();
    data.has_optimizer = r.u8() != 0;
    if (data.has_optimizer) {
        data.adam_config.lr = r.f64();
        data.adam_config.beta1 = r.f64();
        data.adam_config.beta2 = r.f64();
        data.adam_config.epsilon = r.f64();
        data.adam_config.weight_decay = r.f64();
        data.adam_config.decoupled_decay = r.u8() != 0;
        data.adam_step = r.i64();
    }
    data.rng_state = r.str();

    model_out = build_model(data.spec);
    const uint32_t count = r.u32();
    require(count == model_out.params.count(), ErrorCode::format,
            "checkpoint: parameter count does not match the spec");
    for (const auto& [name, t] : model_out.params.entries()) {
        std::string stored_name = r.str();
        require(stored_name == name, ErrorCode::format,
                "checkpoint: parameter order mismatch at '" + stored_name + "'");
        Shape s{r.i32(), r.i32(), r.i32(), r.i32()};
        require(s == t.shape(), ErrorCode::format,
                "checkpoint: shape mismatch for '" + name + "'");
        std::vector<double> vals = r.doubles();
        require(vals.size() == t.size(), ErrorCode::format,
                "checkpoint: array size mismatch for '" + name + "'");
        Tensor handle = t;
        handle.assign(vals);
    }
    if (data.has_optimizer) {
        data.adam_m.reserve(count);
        data.adam_v.reserve(count);
        for (uint32_t i = 0; i < count; ++i)
            data.adam_m.push_back(r.doubles());
        for (uint32_t i = 0; i < count; ++i)
            data.adam_v.push_back(r.doubles());
    }
    require(r.p == r.end, ErrorCode::format, "checkpoint: trailing bytes");
    return data;
}

Adam restore_adam(const CheckpointData& data, const ModelParams& params)
{
    require(data.has_optimizer, ErrorCode::invalid_argument,
            "restore_adam: checkpoint carries no optimizer state");
    Adam adam(data.adam_config);
    adam.init(params);
    require(data.adam_m.size() == params.count() && data.adam_v.size() == params.count(),
            ErrorCode::format, "restore_adam: moment count mismatch");
    adam.moments_m() = data.adam_m;
    adam.moments_v() = data.adam_v;
    adam.set_step_count(data.adam_step);
    return adam;
}

} // namespace avrfn
