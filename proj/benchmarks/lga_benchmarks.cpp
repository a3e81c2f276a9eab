#include <benchmark/benchmark.h>

#include "lga/augment.hpp"
#include "lga/eval.hpp"
#include "lga/loss.hpp"
#include "lga/mask.hpp"
#include "lga/model.hpp"
#include "lga/rng.hpp"

namespace {

lga::ModelConfig synthetic_model() {
    lga::ModelConfig config;
    config.backbone.stage_channels = {8, 16, 24, 32, 48};
    config.num_classes = 4;
    config.cls_channels = 96;
    config.loc_channels = {32, 16, 8};
    return config;
}

lga::Tensor random_image(int side, std::uint64_t seed) {
    lga::RngStream rng(seed);
    lga::Tensor img({3, side, side});
    for (auto& v : img.v) v = rng.uniform01();
    return img;
}

void BM_ForwardSynthetic96(benchmark::State& state) {
    const auto params = lga::build_model(synthetic_model(), 1);
    const auto img = random_image(96, 7);
    for (auto _ : state) {
        auto out = lga::forward(params, img);
        benchmark::DoNotOptimize(out.logits);
    }
}
BENCHMARK(BM_ForwardSynthetic96)->Unit(benchmark::kMillisecond);

void BM_TrainStepSynthetic96(benchmark::State& state) {
    auto params = lga::build_model(synthetic_model(), 1);
    const auto img = random_image(96, 7);
    lga::HeatmapTarget target;
    target.grid = lga::Tensor({3, 3});
    auto grads = lga::Gradients::zeros_like(params);
    for (auto _ : state) {
        grads.zero();
        lga::ForwardCache cache;
        auto out = lga::forward(params, img, &cache);
        auto dlogits = lga::classification_loss_grad(out.logits, 0);
        auto dm = lga::mask_loss_grad(out.m_star, target);
        lga::backward(params, cache, out, dlogits, dm, grads);
        benchmark::DoNotOptimize(grads.tensors.front().v.data());
    }
}
BENCHMARK(BM_TrainStepSynthetic96)->Unit(benchmark::kMillisecond);

void BM_ForwardPaper448(benchmark::State& state) {
    lga::ModelConfig config;
    config.num_classes = 40;
    const auto params = lga::build_model(config, 1);
    const auto img = random_image(448, 7);
    for (auto _ : state) {
        auto out = lga::forward(params, img);
        benchmark::DoNotOptimize(out.logits);
    }
}
BENCHMARK(BM_ForwardPaper448)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_BoxesToMask(benchmark::State& state) {
    std::vector<lga::BoundingBox> boxes{{30, 40, 220, 400}, {100, 10, 300, 200}};
    for (auto _ : state) {
        auto mask = lga::boxes_to_mask(boxes, 448, 448);
        benchmark::DoNotOptimize(mask.grid.data());
    }
}
BENCHMARK(BM_BoxesToMask);

void BM_DownsampleMask(benchmark::State& state) {
    const auto mask = lga::boxes_to_mask({{30, 40, 220, 400}}, 448, 448);
    for (auto _ : state) {
        auto t = lga::downsample_mask(mask, 14, 14);
        benchmark::DoNotOptimize(t.grid.data());
    }
}
BENCHMARK(BM_DownsampleMask);

void BM_Augment448(benchmark::State& state) {
    lga::RngStream rng(3);
    lga::Image img(448, 448);
    for (auto& v : img.rgb) v = rng.uniform01();
    const auto mask = lga::boxes_to_mask({{30, 40, 220, 400}}, 448, 448);
    const auto params = lga::draw_params(1, 0, 0);
    for (auto _ : state) {
        auto [i2, m2] = lga::apply_augmentation(img, mask, params);
        benchmark::DoNotOptimize(i2.rgb.data());
        benchmark::DoNotOptimize(m2.grid.data());
    }
}
BENCHMARK(BM_Augment448)->Unit(benchmark::kMillisecond);

void BM_AveragePrecision(benchmark::State& state) {
    lga::RngStream rng(11);
    const int n = static_cast<int>(state.range(0));
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<bool> positives(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        scores[static_cast<std::size_t>(i)] = rng.uniform01();
        positives[static_cast<std::size_t>(i)] = rng.bernoulli(0.1);
    }
    for (auto _ : state) {
        auto ap = lga::average_precision(scores, positives);
        benchmark::DoNotOptimize(ap);
    }
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(10000);

} // namespace

BENCHMARK_MAIN();
