// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "core/bicubic.hpp"
#include "core/checkpoint.hpp"

namespace avrfn {

Tensor mse_loss(const Tensor& pred, const Tensor& target)
{
    require(pred.shape() == target.shape(), ErrorCode::shape_mismatch,
            "mse_loss: shapes " + pred.shape().str() + " vs " + target.shape().str());
    Tensor diff = sub(pred, target);
    return mean(mul(diff, diff));
}

namespace {

std::string provenance_str(const Batch& batch)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < batch.provenance.size(); ++i) {
        const PatchProvenance& p = batch.provenance[i];
        if (i)
            os << ' ';
        os << p.image_index << '@' << p.x0 << ',' << p.y0;
    }
    return os.str();
}

} // namespace

FitResult fit(Model& model, Adam& adam, PatchSampler& sampler, const TrainConfig& cfg,
              int start_epoch, std::int64_t start_step, const ProgressFn& progress)
{
    require(cfg.epochs >= 1 && cfg.steps_per_epoch >= 1, ErrorCode::invalid_argument,
            "fit: epochs and steps_per_epoch must be positive");
    if (!adam.initialized())
        adam.init(model.params);

    FitResult result;
    std::int64_t step = start_step;
    int epoch = start_epoch;
    for (; epoch < cfg.epochs; ++epoch) {
        for (int s = 0; s < cfg.steps_per_epoch; ++s) {
            Batch batch = sampler.next();
            double loss_value = 0.0;
            try {
                Graph graph;
                Tensor loss;
                {
                    Graph::Recording rec(graph);
                    Tensor pred = model_forward(model, batch.lr);
                    loss = mse_loss(pred, batch.hr);
                }
                loss_value = loss.item();
                require(std::isfinite(loss_value), ErrorCode::numeric, "non-finite loss");
                adam.zero_grads(model.params);
                graph.backward(loss);
                adam.step(model.params);
            } catch (const Error& e) {
                fail(e.code(), "fit aborted at step " + std::to_string(step + 1) + " (epoch " +
                                   std::to_string(epoch + 1) + ", patches " +
                                   provenance_str(batch) + "): " + e.what());
            }
            ++step;
            result.history.push_back({step, epoch + 1, loss_value});
            if (progress)
                progress(epoch + 1, step, loss_value);
        }
        if (!cfg.checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
            (epoch + 1) % cfg.checkpoint_every == 0) {
            save_checkpoint(cfg.checkpoint_path, model, &adam, epoch + 1, step, sampler.state());
        }
    }
    if (!cfg.checkpoint_path.empty())
        save_checkpoint(cfg.checkpoint_path, model, &adam, epoch, step, sampler.state());
    if (!cfg.loss_csv_path.empty())
        write_loss_csv(cfg.loss_csv_path, result.history);

    result.final_epoch = epoch;
    result.final_step = step;
    return result;
}

void write_loss_csv(const std::string& path, const std::vector<StepRecord>& history)
{
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), ErrorCode::io, "cannot write '" + path + "'");
    f << "step,epoch,mse\n";
    f.precision(17);
    for (const StepRecord& r : history)
        f << r.step << ',' << r.epoch << ',' << r.mse << "\n";
    require(f.good(), ErrorCode::io, "short write to '" + path + "'");
}

GrayImage infer_image(const Model& model, const GrayImage& lr01)
{
    require(!lr01.empty(), ErrorCode::invalid_argument, "infer: empty image");
    Tensor out = model_forward(model, to_tensor(lr01));
    GrayImage sr = from_tensor(out, 1.0);
    for (double& v : sr.pixels)
        v = std::clamp(v, 0.0, 1.0);
    return sr;
}

GrayImage bicubic_upscale(const GrayImage& lr01, int scale)
{
    GrayImage up = bicubic_resize(lr01, lr01.width * scale, lr01.height * scale);
    for (double& v : up.pixels)
        v = std::clamp(v, 0.0, 1.0);
    return up;
}

MetricReport evaluate(const Model* model, const std::vector<EvalPair>& pairs,
                      const EvalOptions& opts)
{
    require(opts.bicubic_baseline || model != nullptr, ErrorCode::invalid_argument,
            "evaluate: need a model unless scoring the bicubic baseline");
    MetricReport report;
    report.test_set = opts.test_set;
    report.per_image.resize(pairs.size());

    int scale = 0;
    if (!pairs.empty()) {
        scale = pairs[0].hr.width / pairs[0].lr.width;
        if (model) {
            require(model->spec.scale == scale, ErrorCode::scale_mismatch,
                    "evaluate: model scale x" + std::to_string(model->spec.scale) +
                        " but pairs are x" + std::to_string(scale));
        }
    }
    report.scale = model ? model->spec.scale : scale;
    report.parameters = model ? model->parameter_count() : 0;

    require(opts.border_crop >= 0, ErrorCode::invalid_argument,
            "evaluate: border crop must be >= 0");
    const int workers = std::max(1, std::min<int>(opts.threads, int(pairs.size())));
    std::atomic<std::size_t> cursor{0};
    auto run = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= pairs.size())
                return;
            const EvalPair& pair = pairs[i];
            GrayImage sr = opts.bicubic_baseline
                               ? bicubic_upscale(pair.lr, pair.hr.width / pair.lr.width)
                               : infer_image(*model, pair.lr);
            GrayImage gt = pair.hr;
            if (opts.border_crop > 0) {
                const int b = opts.border_crop;
                require(sr.width > 2 * b && sr.height > 2 * b, ErrorCode::invalid_argument,
                        "evaluate: border crop larger than the image");
                sr = crop(sr, b, b, sr.width - 2 * b, sr.height - 2 * b);
                gt = crop(gt, b, b, gt.width - 2 * b, gt.height - 2 * b);
            }
            report.per_image[i] = {pair.id, psnr(sr, gt), ssim(sr, gt)};
        }
    };
    if (workers == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t)
            pool.emplace_back(run);
        for (auto& th : pool)
            th.join();
    }
    report.finalize();
    return report;
}

} // namespace avrfn
