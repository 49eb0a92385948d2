// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/checkpoint.hpp"
#include "core/metrics.hpp"
#include "core/trainer.hpp"
#include "support/test_support.hpp"

using namespace avrfn;
using namespace avrfn::test;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir()
    {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("avrfn_train_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

ModelSpec smoke_spec()
{
    ModelSpec s;
    s.variant = Variant::avrfn;
    s.groups = 1;
    s.blocks_per_group = 1;
    s.filters = 8;
    s.scale = 2;
    s.gate_reduction = 4;
    s.init_seed = 7;
    return s;
}

PatchSampler smoke_sampler(uint64_t seed, int batch = 2, int lr_patch = 8)
{
    Rng rng(seed + 100);
    DegradationConfig cfg;
    cfg.scale = 2;
    cfg.lr_patch = lr_patch;
    cfg.seed = seed;
    std::vector<GrayImage> images = {synthetic_image(rng, 96, 96), synthetic_image(rng, 96, 96)};
    return PatchSampler(std::move(images), cfg, batch);
}

std::vector<unsigned char> file_bytes(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("mse_loss values and gradient")
{
    Rng rng(81);
    Tensor a = random_tensor(rng, {1, 3, 3, 1});
    CHECK(mse_loss(a, a).item() == 0.0);

    Tensor b = add(a, 0.1);
    CHECK(mse_loss(b, a).item() == doctest::Approx(0.01).epsilon(1e-12));

    Tensor pred = random_tensor(rng, {1, 2, 3, 2}, -1, 1, true);
    Tensor target = random_tensor(rng, {1, 2, 3, 2});
    auto got = recorded_grad([&](const Tensor& t) { return mse_loss(t, target); }, pred);
    const double n = double(pred.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double analytic = 2.0 * (pred.data()[i] - target.data()[i]) / n;
        CHECK(got[i] == doctest::Approx(analytic).epsilon(1e-10));
    }
    auto fd = numeric_grad([&](const Tensor& t) { return mse_loss(t, target).item(); }, pred);
    CHECK(max_rel_err(got, fd) < 1e-6);

    CHECK_THROWS_AS(mse_loss(a, Tensor::zeros({1, 2, 2, 1})), Error);
}

TEST_CASE("adam first step follows the bias-corrected closed form")
{
    ModelParams params;
    params.add("theta", Tensor::from_data({1, 1, 1, 1}, {1.0}, true));

    AdamConfig cfg;
    cfg.lr = 0.1;
    cfg.epsilon = 1e-7;
    Adam adam(cfg);
    adam.init(params);

    // populate the gradient via a recorded loss: d/dtheta (3*theta) = 3
    const Tensor& theta = params.entries()[0].second;
    adam.zero_grads(params);
    Graph g;
    Tensor loss;
    {
        Graph::Recording rec(g);
        loss = sum(mul(theta, 3.0));
    }
    g.backward(loss);
    adam.step(params);

    const double grad = 3.0;
    const double want = 1.0 - cfg.lr * grad / (std::abs(grad) + cfg.epsilon);
    CHECK(theta.item() == doctest::Approx(want).epsilon(1e-12));
    CHECK(std::abs(1.0 - theta.item()) <= cfg.lr * (1.0 + 1e-6));
}

TEST_CASE("adam leaves parameters unchanged exactly when gradients are zero")
{
    ModelParams params;
    params.add("w", Tensor::from_data({1, 1, 2, 1}, {0.5, -0.25}, true));
    Adam adam(AdamConfig{});
    adam.init(params);

    adam.zero_grads(params);
    adam.step(params);
    CHECK(params.entries()[0].second.data()[0] == 0.5);
    CHECK(params.entries()[0].second.data()[1] == -0.25);

    // a missing gradient is an error
    ModelParams fresh;
    fresh.add("w", Tensor::from_data({1, 1, 1, 1}, {1.0}, true));
    Adam a2(AdamConfig{});
    a2.init(fresh);
    CHECK_THROWS_AS(a2.step(fresh), Error);
}

TEST_CASE("adam drives a quadratic bowl toward zero")
{
    ModelParams params;
    params.add("theta", Tensor::from_data({1, 1, 1, 1}, {1.0}, true));
    AdamConfig cfg;
    cfg.lr = 0.01;
    Adam adam(cfg);
    adam.init(params);

    const Tensor& theta = params.entries()[0].second;
    for (int i = 0; i < 500; ++i) {
        adam.zero_grads(params);
        Graph g;
        Tensor loss;
        {
            Graph::Recording rec(g);
            loss = sum(mul(theta, theta));
        }
        g.backward(loss);
        adam.step(params);
    }
    CHECK(std::abs(theta.item()) < 0.05);
}

TEST_CASE("short fit reduces the loss and is bitwise deterministic")
{
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.steps_per_epoch = 15;
    cfg.adam.lr = 1e-3;

    Model m1 = build_model(smoke_spec());
    Adam a1(cfg.adam);
    PatchSampler s1 = smoke_sampler(11);
    FitResult r1 = fit(m1, a1, s1, cfg);
    REQUIRE(r1.history.size() == 30);
    CHECK(r1.history.back().mse < r1.history.front().mse);

    Model m2 = build_model(smoke_spec());
    Adam a2(cfg.adam);
    PatchSampler s2 = smoke_sampler(11);
    FitResult r2 = fit(m2, a2, s2, cfg);
    for (std::size_t i = 0; i < r1.history.size(); ++i)
        CHECK(r1.history[i].mse == r2.history[i].mse); // identical curves
}

TEST_CASE("resume from a checkpoint continues the loss curve exactly")
{
    TempDir dir;
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.steps_per_epoch = 6;
    cfg.adam.lr = 1e-3;

    // uninterrupted run
    Model full = build_model(smoke_spec());
    Adam fa(cfg.adam);
    PatchSampler fs = smoke_sampler(21);
    FitResult whole = fit(full, fa, fs, cfg);

    // first half, checkpointed
    TrainConfig half = cfg;
    half.epochs = 2;
    half.checkpoint_path = dir.file("half.avrf");
    Model part = build_model(smoke_spec());
    Adam pa(cfg.adam);
    PatchSampler ps = smoke_sampler(21);
    FitResult first = fit(part, pa, ps, half);

    // resume
    Model resumed;
    CheckpointData data = load_checkpoint(half.checkpoint_path, resumed);
    CHECK(data.epoch == 2);
    Adam ra = restore_adam(data, resumed.params);
    PatchSampler rs = smoke_sampler(21);
    rs.restore_state(data.rng_state);
    FitResult second = fit(resumed, ra, rs, cfg, data.epoch, data.global_step);

    REQUIRE(first.history.size() + second.history.size() == whole.history.size());
    for (std::size_t i = 0; i < first.history.size(); ++i)
        CHECK(whole.history[i].mse == first.history[i].mse);
    for (std::size_t i = 0; i < second.history.size(); ++i)
        CHECK(whole.history[first.history.size() + i].mse == second.history[i].mse);
}

TEST_CASE("a poisoned parameter aborts fit with step and provenance diagnostics")
{
    Model m = build_model(smoke_spec());
    const Tensor& kernel = m.params.entries()[0].second;
    std::vector<double> poison(kernel.size(), 1e200);
    Tensor h = kernel;
    h.assign(poison);

    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.steps_per_epoch = 1;
    Adam adam(cfg.adam);
    PatchSampler sampler = smoke_sampler(31);
    try {
        fit(m, adam, sampler, cfg);
        FAIL("expected a numeric error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::numeric);
        CHECK(std::string(e.what()).find("step 1") != std::string::npos);
        CHECK(std::string(e.what()).find("@") != std::string::npos); // patch provenance
    }
}

TEST_CASE("checkpoint files round-trip byte-identically")
{
    TempDir dir;
    Model m = build_model(smoke_spec());
    Adam adam(AdamConfig{});
    adam.init(m.params);

    const std::string p1 = dir.file("one.avrf");
    const std::string p2 = dir.file("two.avrf");
    save_checkpoint(p1, m, &adam, 3, 42, "rngstate 1 2 3");

    Model loaded;
    CheckpointData data = load_checkpoint(p1, loaded);
    CHECK(data.epoch == 3);
    CHECK(data.global_step == 42);
    CHECK(data.rng_state == "rngstate 1 2 3");
    Adam restored = restore_adam(data, loaded.params);
    save_checkpoint(p2, loaded, &restored, data.epoch, data.global_step, data.rng_state);

    CHECK(file_bytes(p1) == file_bytes(p2));

    // corrupting any byte trips the CRC
    auto bytes = file_bytes(p1);
    bytes[bytes.size() / 2] ^= 0x40;
    std::ofstream(dir.file("bad.avrf"), std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    Model scratch;
    CHECK_THROWS_AS(load_checkpoint(dir.file("bad.avrf"), scratch), Error);
}

TEST_CASE("psnr closed forms and symmetry")
{
    Rng rng(91);
    GrayImage a = synthetic_image(rng, 32, 24, 1.0);
    CHECK(std::isinf(psnr(a, a)));

    GrayImage b = a;
    for (double& v : b.pixels)
        v += 16.0 / 255.0;
    const double want = 10.0 * std::log10(255.0 * 255.0 / (16.0 * 16.0));
    CHECK(psnr(a, b) == doctest::Approx(want).epsilon(0.001 / want));
    CHECK(psnr(a, b) == psnr(b, a));

    CHECK_THROWS_AS(psnr(a, make_image(8, 8, 1.0)), Error);
}

TEST_CASE("psnr strictly decreases along a noise-variance ladder")
{
    Rng rng(92);
    GrayImage clean = synthetic_image(rng, 48, 48, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double variance : {1.0, 4.0, 10.0, 25.0}) {
        Rng noise(uint64_t(variance * 100));
        GrayImage noisy = clean;
        for (double& v : noisy.pixels)
            v = std::clamp(v + noise.normal(0.0, std::sqrt(variance)) / 255.0, 0.0, 1.0);
        const double p = psnr(noisy, clean);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("ssim: identity, structural inversion, flip invariance")
{
    Rng rng(93);
    GrayImage a = synthetic_image(rng, 32, 32, 1.0);
    CHECK(ssim(a, a) == 1.0);

    // half-black/half-white against its inversion
    GrayImage halves = make_image(32, 32, 1.0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            halves.at(y, x) = x < 16 ? 0.0 : 1.0;
    GrayImage inverted = halves;
    for (double& v : inverted.pixels)
        v = 1.0 - v;
    CHECK(ssim(halves, inverted) < 0.2);

    GrayImage b = synthetic_image(rng, 32, 32, 1.0);
    GrayImage af = a, bf = b;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            af.at(y, x) = a.at(y, 31 - x);
            bf.at(y, x) = b.at(y, 31 - x);
        }
    CHECK(ssim(af, bf) == doctest::Approx(ssim(a, b)).epsilon(1e-12));

    CHECK_THROWS_AS(ssim(make_image(8, 8, 1.0), make_image(8, 8, 1.0)), Error); // below window
}

TEST_CASE("evaluate: ground truth against itself and the bicubic baseline")
{
    Rng rng(94);
    DegradationConfig cfg;
    cfg.scale = 2;
    cfg.noise_enabled = false;
    std::vector<GrayImage> images = {synthetic_image(rng, 64, 64), synthetic_image(rng, 48, 64)};
    auto pairs = make_eval_pairs(images, {"one", "two"}, cfg);

    // ground truth vs itself through the evaluate harness: same-size bicubic
    // "upscaling" is the identity, so prediction == truth for every image
    std::vector<EvalPair> self_pairs;
    for (const auto& p : pairs)
        self_pairs.push_back({p.id, p.hr, p.hr});
    EvalOptions self_opts;
    self_opts.bicubic_baseline = true;
    MetricReport self_rep = evaluate(nullptr, self_pairs, self_opts);
    for (const ImageScore& s : self_rep.per_image) {
        CHECK(std::isinf(s.psnr)); // sentinel
        CHECK(s.ssim == 1.0);
    }

    EvalOptions opts;
    opts.test_set = "toy";
    opts.bicubic_baseline = true;
    MetricReport rep = evaluate(nullptr, pairs, opts);
    REQUIRE(rep.per_image.size() == 2);
    for (const ImageScore& s : rep.per_image) {
        CHECK(std::isfinite(s.psnr));
        CHECK(s.psnr > 0.0);
        CHECK(s.ssim >= -1.0);
        CHECK(s.ssim <= 1.0);
    }

    // aggregate equals the arithmetic mean of the per-image rows
    double mean_psnr = 0, mean_ssim = 0;
    for (const ImageScore& s : rep.per_image) {
        mean_psnr += s.psnr / double(rep.per_image.size());
        mean_ssim += s.ssim / double(rep.per_image.size());
    }
    CHECK(std::abs(rep.psnr_mean - mean_psnr) < 1e-12);
    CHECK(std::abs(rep.ssim_mean - mean_ssim) < 1e-12);
}

TEST_CASE("evaluate with a model: scale checks and threaded determinism")
{
    Rng rng(95);
    Model m = build_model(smoke_spec()); // scale 2
    DegradationConfig cfg;
    cfg.scale = 2;
    cfg.noise_enabled = false;
    std::vector<GrayImage> images = {synthetic_image(rng, 48, 48), synthetic_image(rng, 64, 48),
                                     synthetic_image(rng, 48, 64)};
    auto pairs = make_eval_pairs(images, {}, cfg);

    EvalOptions serial;
    MetricReport a = evaluate(&m, pairs, serial);
    EvalOptions threaded;
    threaded.threads = 3;
    MetricReport b = evaluate(&m, pairs, threaded);
    REQUIRE(a.per_image.size() == b.per_image.size());
    for (std::size_t i = 0; i < a.per_image.size(); ++i) {
        CHECK(a.per_image[i].id == b.per_image[i].id);
        CHECK(a.per_image[i].psnr == b.per_image[i].psnr);
        CHECK(a.per_image[i].ssim == b.per_image[i].ssim);
    }
    CHECK(a.parameters == m.parameter_count());

    DegradationConfig wrong = cfg;
    wrong.scale = 4;
    auto bad_pairs = make_eval_pairs(images, {}, wrong);
    CHECK_THROWS_AS(evaluate(&m, bad_pairs, serial), Error);
}

TEST_CASE("metric CSV round-trips the aggregate rows")
{
    TempDir dir;
    MetricReport rep;
    rep.test_set = "toy";
    rep.scale = 4;
    rep.parameters = 12345;
    rep.per_image = {{"a", 30.0, 0.9}, {"b", 34.0, 0.8}};
    rep.finalize();

    const std::string path = dir.file("metrics.csv");
    write_metrics_csv(path, {rep});
    std::ifstream f(path);
    std::string header, row;
    std::getline(f, header);
    std::getline(f, row);
    CHECK(header == "test_set,scale,parameters,psnr,ssim,psnr_std,ssim_std");
    CHECK(row.rfind("toy,4,12345,32.0", 0) == 0);

    write_per_image_csv(dir.file("per.csv"), rep);
    std::ifstream pf(dir.file("per.csv"));
    std::string ph, r1, r2;
    std::getline(pf, ph);
    std::getline(pf, r1);
    std::getline(pf, r2);
    CHECK(ph == "image,psnr,ssim");
    CHECK(r1.rfind("a,30", 0) == 0);
    CHECK(r2.rfind("b,34", 0) == 0);
}

TEST_CASE("loss CSV format")
{
    TempDir dir;
    const std::string path = dir.file("loss.csv");
    write_loss_csv(path, {{1, 1, 0.5}, {2, 1, 0.25}});
    std::ifstream f(path);
    std::string header, a, b;
    std::getline(f, header);
    std::getline(f, a);
    std::getline(f, b);
    CHECK(header == "step,epoch,mse");
    CHECK(a == "1,1,0.5");
    CHECK(b == "2,1,0.25");
}
