// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Batch front end for the AVRFN kit. Subcommands: degrade, train, eval,
// infer, analyze. Every run is reproducible from the single --seed flag.

#include <cinttypes>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "avrfn/avrfn.h"

namespace {

struct ModelFlags {
    std::string variant = "avrfn";
    int groups = 3;
    int blocks = 6;
    int filters = 64;
    int scale = 4;
    std::vector<int> dilations = {1, 2, 3};
    int reduction = 16;
    int ns_iters = 5;
};

void add_model_flags(CLI::App* cmd, ModelFlags& mf)
{
    cmd->add_option("--variant", mf.variant, "architecture variant")
        ->check(CLI::IsMember({"ddrr", "rrsoca", "crcan", "avrfn"}))
        ->capture_default_str();
    cmd->add_option("--groups", mf.groups, "residual groups")->capture_default_str();
    cmd->add_option("--blocks", mf.blocks, "residual blocks per group")->capture_default_str();
    cmd->add_option("--filters", mf.filters, "filters per convolution")->capture_default_str();
    cmd->add_option("--scale", mf.scale, "upscaling factor (2, 3 or 4)")
        ->check(CLI::IsMember({2, 3, 4}))
        ->capture_default_str();
    cmd->add_option("--dilations", mf.dilations, "three dilation rates for the branch module")
        ->expected(3);
    cmd->add_option("--reduction", mf.reduction, "gate bottleneck reduction")
        ->capture_default_str();
    cmd->add_option("--ns-iters", mf.ns_iters, "Newton-Schulz iterations")->capture_default_str();
}

avrfn_model_desc desc_from_flags(const ModelFlags& mf, uint64_t seed)
{
    avrfn_model_desc d;
    avrfn_model_desc_defaults(&d);
    if (mf.variant == "ddrr")
        d.variant = AVRFN_VARIANT_DDRR;
    else if (mf.variant == "rrsoca")
        d.variant = AVRFN_VARIANT_RRSOCA;
    else if (mf.variant == "crcan")
        d.variant = AVRFN_VARIANT_CRCAN;
    else
        d.variant = AVRFN_VARIANT_AVRFN;
    d.groups = mf.groups;
    d.blocks_per_group = mf.blocks;
    d.filters = mf.filters;
    d.scale = mf.scale;
    for (int i = 0; i < 3; ++i)
        d.dilation_rates[i] = mf.dilations[std::size_t(i)];
    d.gate_reduction = mf.reduction;
    d.newton_schulz_iters = mf.ns_iters;
    d.init_seed = seed;
    return d;
}

struct DegradeFlags {
    int scale = 4;
    double noise_mean = 0.0;
    double noise_variance = 10.0;
    bool no_noise = false;
    int lr_patch = 48;
};

void add_degrade_flags(CLI::App* cmd, DegradeFlags& df, bool with_patch, bool with_scale = true)
{
    if (with_scale)
        cmd->add_option("--scale", df.scale, "degradation scale (2, 3 or 4)")
            ->check(CLI::IsMember({2, 3, 4}))
            ->capture_default_str();
    cmd->add_option("--noise-mean", df.noise_mean, "Gaussian noise mean (8-bit levels)")
        ->capture_default_str();
    cmd->add_option("--noise-variance", df.noise_variance,
                    "Gaussian noise variance (squared 8-bit levels)")
        ->capture_default_str();
    cmd->add_flag("--no-noise", df.no_noise, "disable the noise term");
    if (with_patch)
        cmd->add_option("--patch", df.lr_patch, "LR training patch edge")->capture_default_str();
}

avrfn_degrade_desc degrade_from_flags(const DegradeFlags& df, uint64_t seed)
{
    avrfn_degrade_desc d;
    avrfn_degrade_desc_defaults(&d);
    d.scale = df.scale;
    d.noise_mean = df.noise_mean;
    d.noise_variance = df.noise_variance;
    d.noise_enabled = df.no_noise ? 0 : 1;
    d.lr_patch = df.lr_patch;
    d.seed = seed;
    return d;
}

int check(avrfn_status status)
{
    if (status == AVRFN_OK)
        return 0;
    std::fprintf(stderr, "error: %s: %s\n", avrfn_status_string(status), avrfn_last_error());
    return 1;
}

struct ModelHandle {
    avrfn_model* ptr = nullptr;
    ~ModelHandle() { avrfn_model_free(ptr); }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"AVRFN thermal-image super-resolution kit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI/TOML file");
    app.set_version_flag("--version", std::string(avrfn_version()));

    uint64_t seed = 0;
    app.add_option("--seed", seed, "seed for every random draw")->capture_default_str();

    // ---- degrade ----
    auto* degrade_cmd = app.add_subcommand("degrade", "write degraded LR copies of a directory");
    std::string deg_in, deg_out;
    DegradeFlags deg_flags;
    degrade_cmd->add_option("--in", deg_in, "input image directory or manifest")->required();
    degrade_cmd->add_option("--out", deg_out, "output directory")->required();
    add_degrade_flags(degrade_cmd, deg_flags, false);

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train a model on a directory of images");
    std::string train_data, train_out, train_loss_csv;
    ModelFlags train_model;
    DegradeFlags train_degrade;
    int epochs = 300, steps = 100, batch = 16, checkpoint_every = 0;
    double lr = 1e-4, weight_decay = 0.0;
    train_cmd->add_option("--data", train_data, "training image directory or manifest")
        ->required();
    train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
    train_cmd->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    train_cmd->add_option("--steps", steps, "optimizer steps per epoch")->capture_default_str();
    train_cmd->add_option("--batch", batch, "patches per batch")->capture_default_str();
    train_cmd->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--weight-decay", weight_decay, "L2 regularization strength")
        ->capture_default_str();
    train_cmd->add_option("--loss-csv", train_loss_csv, "per-step loss log path");
    train_cmd->add_option("--checkpoint-every", checkpoint_every,
                          "epochs between intermediate checkpoints");
    add_model_flags(train_cmd, train_model);
    add_degrade_flags(train_cmd, train_degrade, true, false); // scale follows the model

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a directory of images");
    std::string eval_ckpt, eval_data, eval_csv, eval_per_image, eval_set = "eval";
    DegradeFlags eval_degrade;
    int threads = 1;
    int border_crop = 0;
    bool baseline = false;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint (omit with --baseline)");
    eval_cmd->add_option("--data", eval_data, "evaluation image directory or manifest")
        ->required();
    eval_cmd->add_option("--out", eval_csv, "metrics CSV path")->required();
    eval_cmd->add_option("--per-image", eval_per_image, "per-image CSV path");
    eval_cmd->add_option("--test-set", eval_set, "name recorded in the CSV")
        ->capture_default_str();
    eval_cmd->add_option("--threads", threads, "evaluation worker threads")
        ->capture_default_str();
    eval_cmd->add_option("--border-crop", border_crop,
                         "pixels trimmed from every edge before scoring")
        ->capture_default_str();
    eval_cmd->add_flag("--baseline", baseline, "score bicubic upscaling instead of a model");
    add_degrade_flags(eval_cmd, eval_degrade, false);

    // ---- infer ----
    auto* infer_cmd = app.add_subcommand("infer", "super-resolve one image");
    std::string infer_ckpt, infer_in, infer_out;
    infer_cmd->add_option("--checkpoint", infer_ckpt, "model checkpoint")->required();
    infer_cmd->add_option("--in", infer_in, "LR input image")->required();
    infer_cmd->add_option("--out", infer_out, "SR output image")->required();

    // ---- analyze ----
    auto* analyze_cmd = app.add_subcommand("analyze", "parameter / receptive-field report");
    ModelFlags analyze_model;
    std::string analyze_csv;
    analyze_cmd->add_option("--csv", analyze_csv, "also write the per-layer table as CSV");
    add_model_flags(analyze_cmd, analyze_model);

    CLI11_PARSE(app, argc, argv);

    if (degrade_cmd->parsed()) {
        avrfn_degrade_desc d = degrade_from_flags(deg_flags, seed);
        return check(avrfn_degrade_dir(deg_in.c_str(), deg_out.c_str(), &d));
    }

    if (train_cmd->parsed()) {
        train_degrade.scale = train_model.scale;
        avrfn_model_desc md = desc_from_flags(train_model, seed);
        avrfn_degrade_desc dd = degrade_from_flags(train_degrade, seed);
        avrfn_train_desc td;
        avrfn_train_desc_defaults(&td);
        td.epochs = epochs;
        td.steps_per_epoch = steps;
        td.batch_size = batch;
        td.learning_rate = lr;
        td.weight_decay = weight_decay;
        td.checkpoint_every = checkpoint_every;

        ModelHandle model;
        if (int rc = check(avrfn_model_create(&md, &model.ptr)))
            return rc;
        auto progress = [](int32_t epoch, int64_t step, double mse, void*) {
            if (step % 50 == 0)
                std::fprintf(stderr, "epoch %d step %" PRId64 " mse %.6f\n", epoch, step, mse);
        };
        return check(avrfn_train_dir(model.ptr, train_data.c_str(), &dd, &td, train_out.c_str(),
                                     train_loss_csv.empty() ? nullptr : train_loss_csv.c_str(),
                                     progress, nullptr));
    }

    if (eval_cmd->parsed()) {
        ModelHandle model;
        if (!eval_ckpt.empty()) {
            if (int rc = check(avrfn_model_load(eval_ckpt.c_str(), &model.ptr)))
                return rc;
            avrfn_model_desc md;
            avrfn_model_describe(model.ptr, &md);
            eval_degrade.scale = md.scale;
        } else if (!baseline) {
            std::fprintf(stderr, "error: eval needs --checkpoint or --baseline\n");
            return 1;
        }
        avrfn_degrade_desc dd = degrade_from_flags(eval_degrade, seed);
        return check(avrfn_eval_dir(model.ptr, eval_data.c_str(), &dd, eval_set.c_str(),
                                    eval_csv.c_str(),
                                    eval_per_image.empty() ? nullptr : eval_per_image.c_str(),
                                    threads, baseline ? 1 : 0, border_crop));
    }

    if (infer_cmd->parsed()) {
        ModelHandle model;
        if (int rc = check(avrfn_model_load(infer_ckpt.c_str(), &model.ptr)))
            return rc;
        return check(avrfn_infer_file(model.ptr, infer_in.c_str(), infer_out.c_str()));
    }

    if (analyze_cmd->parsed()) {
        avrfn_model_desc md = desc_from_flags(analyze_model, seed);
        size_t needed = 0;
        if (int rc = check(avrfn_analyze_text(&md, nullptr, 0, &needed)))
            return rc;
        std::string text(needed + 1, '\0');
        if (int rc = check(avrfn_analyze_text(&md, text.data(), text.size(), nullptr)))
            return rc;
        std::printf("%s", text.c_str());

        // totals and pairwise parameter ratios for the four variants
        std::printf("\nvariant totals at these settings:\n");
        int64_t totals[4] = {0, 0, 0, 0};
        const char* names[4] = {"ddrr", "rrsoca", "crcan", "avrfn"};
        for (int i = 0; i < 4; ++i) {
            ModelFlags mf = analyze_model;
            mf.variant = names[i];
            avrfn_model_desc vd = desc_from_flags(mf, seed);
            if (avrfn_model_total_params(&vd, &totals[i]) == AVRFN_OK)
                std::printf("  %-7s %" PRId64 "\n", names[i], totals[i]);
        }
        std::printf("variant parameter ratios:\n");
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
                if (totals[i] > 0 && totals[j] > 0)
                    std::printf("  %s/%s = %.3f\n", names[i], names[j],
                                double(totals[i]) / double(totals[j]));

        // the classic matched-receptive-field pair: 5x5 dense vs 3x3 two-dilated
        avrfn_conv_desc wide{5, 1, 100, 64, 1};
        avrfn_conv_desc dilated{3, 2, 100, 64, 1};
        double ratio = 0.0;
        if (avrfn_compression_ratio(&wide, &dilated, &ratio) == AVRFN_OK) {
            std::printf("\nmatched-ERF compression example: conv5x5(100->64) %" PRId64
                        " params vs conv3x3,d2(100->64) %" PRId64
                        " params, extent %d each, ratio %.3f\n",
                        avrfn_conv_param_count(&wide), avrfn_conv_param_count(&dilated),
                        avrfn_conv_rf_extent(&wide), ratio);
        }

        if (!analyze_csv.empty())
            return check(avrfn_analyze_csv_file(&md, analyze_csv.c_str()));
        return 0;
    }

    return 0;
}
