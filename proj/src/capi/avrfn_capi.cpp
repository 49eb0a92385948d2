// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "avrfn/avrfn.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "core/analyzer.hpp"
#include "core/checkpoint.hpp"
#include "core/degrade.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/trainer.hpp"

using namespace avrfn;

struct avrfn_model {
    Model model;
};

namespace {

thread_local std::string t_last_error;

avrfn_status status_of(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_argument: return AVRFN_ERR_INVALID_ARGUMENT;
    case ErrorCode::shape_mismatch: return AVRFN_ERR_SHAPE;
    case ErrorCode::io: return AVRFN_ERR_IO;
    case ErrorCode::format: return AVRFN_ERR_FORMAT;
    case ErrorCode::scale_mismatch: return AVRFN_ERR_SCALE_MISMATCH;
    case ErrorCode::numeric: return AVRFN_ERR_NUMERIC;
    case ErrorCode::internal: return AVRFN_ERR_INTERNAL;
    }
    return AVRFN_ERR_INTERNAL;
}

template <typename Fn>
avrfn_status guarded(Fn&& fn)
{
    try {
        fn();
        t_last_error.clear();
        return AVRFN_OK;
    } catch (const Error& e) {
        t_last_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return AVRFN_ERR_INTERNAL;
    } catch (...) {
        t_last_error = "unknown failure";
        return AVRFN_ERR_INTERNAL;
    }
}

avrfn_status arg_error(const char* msg)
{
    t_last_error = msg;
    return AVRFN_ERR_INVALID_ARGUMENT;
}

ModelSpec spec_of(const avrfn_model_desc& d)
{
    require(d.variant >= AVRFN_VARIANT_DDRR && d.variant <= AVRFN_VARIANT_AVRFN,
            ErrorCode::invalid_argument, "bad variant tag");
    ModelSpec s;
    s.variant = Variant(int(d.variant));
    s.groups = d.groups;
    s.blocks_per_group = d.blocks_per_group;
    s.filters = d.filters;
    s.scale = d.scale;
    s.dilation_rates = {d.dilation_rates[0], d.dilation_rates[1], d.dilation_rates[2]};
    s.gate_reduction = d.gate_reduction;
    s.newton_schulz_iters = d.newton_schulz_iters;
    s.init_seed = d.init_seed;
    s.validate();
    return s;
}

avrfn_model_desc desc_of(const ModelSpec& s)
{
    avrfn_model_desc d{};
    d.variant = avrfn_variant(int(s.variant));
    d.groups = s.groups;
    d.blocks_per_group = s.blocks_per_group;
    d.filters = s.filters;
    d.scale = s.scale;
    for (int i = 0; i < 3; ++i)
        d.dilation_rates[i] = s.dilation_rates[i];
    d.gate_reduction = s.gate_reduction;
    d.newton_schulz_iters = s.newton_schulz_iters;
    d.init_seed = s.init_seed;
    return d;
}

DegradationConfig degrade_of(const avrfn_degrade_desc& d)
{
    DegradationConfig c;
    c.scale = d.scale;
    c.noise_mean = d.noise_mean;
    c.noise_variance = d.noise_variance;
    c.noise_enabled = d.noise_enabled != 0;
    c.lr_patch = d.lr_patch;
    c.seed = d.seed;
    c.validate();
    return c;
}

ConvConfig conv_of(const avrfn_conv_desc& d)
{
    return ConvConfig{d.kernel, d.dilation, d.in_ch, d.out_ch, d.bias != 0};
}

std::vector<GrayImage> load_dir(const std::string& dir, std::vector<std::string>* names)
{
    std::vector<std::string> files = list_image_files(dir);
    require(!files.empty(), ErrorCode::io, dir + ": no PNG or PGM images found");
    std::vector<GrayImage> images;
    images.reserve(files.size());
    for (const std::string& f : files) {
        images.push_back(load_image(f));
        if (names)
            names->push_back(std::filesystem::path(f).filename().string());
    }
    return images;
}

} // namespace

extern "C" {

const char* avrfn_status_string(avrfn_status status)
{
    switch (status) {
    case AVRFN_OK: return "ok";
    case AVRFN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case AVRFN_ERR_SHAPE: return "shape mismatch";
    case AVRFN_ERR_IO: return "i/o failure";
    case AVRFN_ERR_FORMAT: return "unsupported or corrupt format";
    case AVRFN_ERR_SCALE_MISMATCH: return "scale mismatch";
    case AVRFN_ERR_NUMERIC: return "numeric failure";
    case AVRFN_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* avrfn_last_error(void)
{
    return t_last_error.c_str();
}

const char* avrfn_version(void)
{
    return "0.1.0";
}

void avrfn_model_desc_defaults(avrfn_model_desc* desc)
{
    if (desc)
        *desc = desc_of(ModelSpec{});
}

void avrfn_degrade_desc_defaults(avrfn_degrade_desc* desc)
{
    if (!desc)
        return;
    DegradationConfig c;
    desc->scale = c.scale;
    desc->noise_mean = c.noise_mean;
    desc->noise_variance = c.noise_variance;
    desc->noise_enabled = c.noise_enabled ? 1 : 0;
    desc->lr_patch = c.lr_patch;
    desc->seed = c.seed;
}

void avrfn_train_desc_defaults(avrfn_train_desc* desc)
{
    if (!desc)
        return;
    AdamConfig a;
    desc->epochs = 300;
    desc->steps_per_epoch = 100;
    desc->batch_size = 16;
    desc->learning_rate = a.lr;
    desc->beta1 = a.beta1;
    desc->beta2 = a.beta2;
    desc->epsilon = a.epsilon;
    desc->weight_decay = a.weight_decay;
    desc->checkpoint_every = 0;
}

avrfn_status avrfn_model_create(const avrfn_model_desc* desc, avrfn_model** out)
{
    if (!desc || !out)
        return arg_error("avrfn_model_create: null argument");
    return guarded([&] { *out = new avrfn_model{build_model(spec_of(*desc))}; });
}

avrfn_status avrfn_model_load(const char* path, avrfn_model** out)
{
    if (!path || !out)
        return arg_error("avrfn_model_load: null argument");
    return guarded([&] {
        auto holder = std::make_unique<avrfn_model>();
        load_checkpoint(path, holder->model);
        *out = holder.release();
    });
}

avrfn_status avrfn_model_save(const avrfn_model* model, const char* path)
{
    if (!model || !path)
        return arg_error("avrfn_model_save: null argument");
    return guarded([&] { save_checkpoint(path, model->model, nullptr, 0, 0, ""); });
}

void avrfn_model_free(avrfn_model* model)
{
    delete model;
}

avrfn_status avrfn_model_describe(const avrfn_model* model, avrfn_model_desc* out)
{
    if (!model || !out)
        return arg_error("avrfn_model_describe: null argument");
    *out = desc_of(model->model.spec);
    return AVRFN_OK;
}

int64_t avrfn_model_param_count(const avrfn_model* model)
{
    return model ? model->model.parameter_count() : -1;
}

avrfn_status avrfn_model_infer(const avrfn_model* model, const double* lr, int32_t width,
                               int32_t height, double* sr_out)
{
    if (!model || !lr || !sr_out)
        return arg_error("avrfn_model_infer: null argument");
    if (width < 1 || height < 1)
        return arg_error("avrfn_model_infer: non-positive dimensions");
    return guarded([&] {
        GrayImage in = make_image(width, height, 1.0);
        std::copy(lr, lr + std::size_t(width) * height, in.pixels.begin());
        GrayImage sr = infer_image(model->model, in);
        std::copy(sr.pixels.begin(), sr.pixels.end(), sr_out);
    });
}

avrfn_status avrfn_train_dir(avrfn_model* model, const char* data_dir,
                             const avrfn_degrade_desc* degrade, const avrfn_train_desc* train,
                             const char* checkpoint_path_or_null,
                             const char* loss_csv_path_or_null, avrfn_progress_fn progress_or_null,
                             void* user)
{
    if (!model || !data_dir || !degrade || !train)
        return arg_error("avrfn_train_dir: null argument");
    return guarded([&] {
        DegradationConfig cfg = degrade_of(*degrade);
        require(train->batch_size >= 1, ErrorCode::invalid_argument,
                "train: batch size must be >= 1");
        PatchSampler sampler(load_dir(data_dir, nullptr), cfg, train->batch_size);

        TrainConfig tc;
        tc.epochs = train->epochs;
        tc.steps_per_epoch = train->steps_per_epoch;
        tc.adam = {train->learning_rate, train->beta1,   train->beta2,
                   train->epsilon,       train->weight_decay, false};
        tc.checkpoint_every = train->checkpoint_every;
        if (checkpoint_path_or_null)
            tc.checkpoint_path = checkpoint_path_or_null;
        if (loss_csv_path_or_null)
            tc.loss_csv_path = loss_csv_path_or_null;

        Adam adam(tc.adam);
        ProgressFn progress;
        if (progress_or_null) {
            progress = [progress_or_null, user](int epoch, std::int64_t step, double mse) {
                progress_or_null(epoch, step, mse, user);
            };
        }
        fit(model->model, adam, sampler, tc, 0, 0, progress);
    });
}

avrfn_status avrfn_degrade_dir(const char* in_dir, const char* out_dir,
                               const avrfn_degrade_desc* degrade)
{
    if (!in_dir || !out_dir || !degrade)
        return arg_error("avrfn_degrade_dir: null argument");
    return guarded([&] {
        DegradationConfig cfg = degrade_of(*degrade);
        std::vector<std::string> files = list_image_files(in_dir);
        require(!files.empty(), ErrorCode::io, std::string(in_dir) + ": no images found");
        std::filesystem::create_directories(out_dir);

        // every file is attempted; failures are collected and reported together
        std::vector<std::string> written;
        std::string failures;
        for (std::size_t i = 0; i < files.size(); ++i) {
            try {
                GrayImage hr = center_crop_multiple(load_image(files[i]), cfg.scale);
                GrayImage lr = degrade_image(hr, cfg, derive_seed(cfg.seed, i));
                // write back in the source intensity domain
                GrayImage out = lr;
                out.max_value = hr.max_value;
                for (double& v : out.pixels)
                    v *= hr.max_value;
                std::filesystem::path name = std::filesystem::path(files[i]).filename();
                save_image(out, (std::filesystem::path(out_dir) / name).string());
                written.push_back(name.string());
            } catch (const std::exception& e) {
                failures += std::string(failures.empty() ? "" : "; ") + files[i] + ": " + e.what();
            }
        }

        std::string manifest = "{\n  \"seed\": " + std::to_string(cfg.seed) +
                               ",\n  \"scale\": " + std::to_string(cfg.scale) +
                               ",\n  \"noise_mean\": " + std::to_string(cfg.noise_mean) +
                               ",\n  \"noise_variance\": " + std::to_string(cfg.noise_variance) +
                               ",\n  \"noise_enabled\": " +
                               (cfg.noise_enabled ? "true" : "false") + ",\n  \"files\": [\n";
        for (std::size_t i = 0; i < written.size(); ++i) {
            manifest += "    \"" + written[i] + "\"";
            manifest += i + 1 < written.size() ? ",\n" : "\n";
        }
        manifest += "  ]\n}\n";
        std::ofstream mf(std::filesystem::path(out_dir) / "manifest.json", std::ios::trunc);
        require(mf.good(), ErrorCode::io, "cannot write the degradation manifest");
        mf << manifest;
        require(failures.empty(), ErrorCode::io, failures);
    });
}

avrfn_status avrfn_eval_dir(const avrfn_model* model, const char* data_dir,
                            const avrfn_degrade_desc* degrade, const char* test_set,
                            const char* metrics_csv_path, const char* per_image_csv_path_or_null,
                            int32_t threads, int32_t bicubic_baseline, int32_t border_crop)
{
    if (!data_dir || !degrade || !test_set || !metrics_csv_path)
        return arg_error("avrfn_eval_dir: null argument");
    if (!model && !bicubic_baseline)
        return arg_error("avrfn_eval_dir: need a model unless bicubic_baseline is set");
    return guarded([&] {
        DegradationConfig cfg = degrade_of(*degrade);
        std::vector<std::string> names;
        std::vector<GrayImage> images = load_dir(data_dir, &names);
        std::vector<EvalPair> pairs = make_eval_pairs(images, names, cfg);

        EvalOptions opts;
        opts.test_set = test_set;
        opts.threads = std::max(1, int(threads));
        opts.bicubic_baseline = bicubic_baseline != 0;
        opts.border_crop = int(border_crop);
        MetricReport report = evaluate(model ? &model->model : nullptr, pairs, opts);
        write_metrics_csv(metrics_csv_path, {report});
        if (per_image_csv_path_or_null)
            write_per_image_csv(per_image_csv_path_or_null, report);
    });
}

avrfn_status avrfn_infer_file(const avrfn_model* model, const char* lr_image_path,
                              const char* sr_image_path)
{
    if (!model || !lr_image_path || !sr_image_path)
        return arg_error("avrfn_infer_file: null argument");
    return guarded([&] {
        GrayImage lr = load_image(lr_image_path);
        GrayImage sr01 = infer_image(model->model, normalized(lr));
        GrayImage out = sr01;
        out.max_value = lr.max_value;
        for (double& v : out.pixels)
            v *= lr.max_value;
        save_image(out, sr_image_path);
    });
}

int64_t avrfn_conv_param_count(const avrfn_conv_desc* conv)
{
    return conv ? conv_param_count(conv_of(*conv)) : -1;
}

int32_t avrfn_conv_rf_extent(const avrfn_conv_desc* conv)
{
    return conv ? rf_extent(conv_of(*conv)) : -1;
}

avrfn_status avrfn_compression_ratio(const avrfn_conv_desc* a, const avrfn_conv_desc* b,
                                     double* ratio)
{
    if (!a || !b || !ratio)
        return arg_error("avrfn_compression_ratio: null argument");
    return guarded([&] { *ratio = compression_ratio(conv_of(*a), conv_of(*b)); });
}

avrfn_status avrfn_analyze_text(const avrfn_model_desc* desc, char* buf, size_t buf_len,
                                size_t* needed)
{
    if (!desc)
        return arg_error("avrfn_analyze_text: null argument");
    return guarded([&] {
        std::string text = analyze(spec_of(*desc)).text();
        if (needed)
            *needed = text.size();
        if (buf && buf_len > 0) {
            const size_t n = std::min(buf_len - 1, text.size());
            std::memcpy(buf, text.data(), n);
            buf[n] = '\0';
        }
    });
}

avrfn_status avrfn_analyze_csv_file(const avrfn_model_desc* desc, const char* path)
{
    if (!desc || !path)
        return arg_error("avrfn_analyze_csv_file: null argument");
    return guarded([&] {
        std::ofstream f(path, std::ios::trunc);
        require(f.good(), ErrorCode::io, std::string("cannot write '") + path + "'");
        f << analyze(spec_of(*desc)).csv();
        require(f.good(), ErrorCode::io, std::string("short write to '") + path + "'");
    });
}

avrfn_status avrfn_model_total_params(const avrfn_model_desc* desc, int64_t* total)
{
    if (!desc || !total)
        return arg_error("avrfn_model_total_params: null argument");
    return guarded([&] { *total = count_params(spec_of(*desc)); });
}

} // extern "C"
