#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lga/loss.hpp"
#include "lga/rng.hpp"

using namespace lga;

TEST_CASE("uniform logits give ln C") {
    const std::vector<double> logits(40, 0.7);
    CHECK(classification_loss(logits, 5) == doctest::Approx(std::log(40.0)).epsilon(1e-12));
    CHECK(std::log(40.0) == doctest::Approx(3.68888).epsilon(1e-5));
}

TEST_CASE("peaked logits, correct and wrong ground truth") {
    const std::vector<double> logits{10, 0, 0, 0};
    // log(1 + 3 e^-10)
    const double small = std::log1p(3.0 * std::exp(-10.0));
    CHECK(classification_loss(logits, 0) == doctest::Approx(small).epsilon(1e-12));
    CHECK(small == doctest::Approx(1.3619e-4).epsilon(1e-4));
    CHECK(classification_loss(logits, 1) == doctest::Approx(10.0 + small).epsilon(1e-12));
}

TEST_CASE("classification_loss rejects a bad class index") {
    CHECK_THROWS_AS(classification_loss({0.0, 1.0}, 2), IndexOutOfRange);
    CHECK_THROWS_AS(classification_loss({0.0, 1.0}, -1), IndexOutOfRange);
}

TEST_CASE("softmax shift invariance within 1e-9") {
    RngStream rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> logits;
        const int C = 2 + rng.below_int(10);
        for (int c = 0; c < C; ++c) logits.push_back(rng.uniform(-8.0, 8.0));
        const int gt = rng.below_int(C);
        const double base = classification_loss(logits, gt);
        const double shift = rng.uniform(-50.0, 50.0);
        std::vector<double> shifted = logits;
        for (auto& s : shifted) s += shift;
        CHECK(std::fabs(classification_loss(shifted, gt) - base) < 1e-9);
    }
}

TEST_CASE("classification loss is nonnegative, zero only in the one-hot limit") {
    RngStream rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> logits;
        for (int c = 0; c < 5; ++c) logits.push_back(rng.uniform(-3.0, 3.0));
        CHECK(classification_loss(logits, rng.below_int(5)) > 0.0);
    }
    // Approaching one-hot drives the loss toward zero.
    CHECK(classification_loss({100.0, 0.0}, 0) < 1e-12);
}

TEST_CASE("mask loss of identical maps is zero") {
    HeatmapTarget gt;
    gt.grid = Tensor({2, 2});
    gt.grid.v = {1, 0, 0.5, 0.25};
    Tensor pred = gt.grid;
    CHECK(mask_loss(pred, gt) == 0.0);
    CHECK(mask_loss(pred, gt, Reduction::sum) == 0.0);
}

TEST_CASE("constant 0.5 prediction against a binary mask costs 0.25 under mean") {
    RngStream rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        HeatmapTarget gt;
        gt.grid = Tensor({4, 4});
        for (auto& v : gt.grid.v) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
        Tensor pred({4, 4});
        pred.fill(0.5);
        CHECK(mask_loss(pred, gt) == doctest::Approx(0.25).epsilon(1e-15));
    }
}

TEST_CASE("hand-computed mask loss example") {
    HeatmapTarget gt;
    gt.grid = Tensor({2, 2});
    gt.grid.v = {1, 1, 0, 0};
    Tensor pred({2, 2});
    pred.v = {1, 0, 0, 0};
    CHECK(mask_loss(pred, gt, Reduction::mean) == doctest::Approx(0.25));
    CHECK(mask_loss(pred, gt, Reduction::sum) == doctest::Approx(1.0));
}

TEST_CASE("mask loss is symmetric") {
    RngStream rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        HeatmapTarget a, b;
        a.grid = Tensor({3, 3});
        b.grid = Tensor({3, 3});
        for (auto& v : a.grid.v) v = rng.uniform01();
        for (auto& v : b.grid.v) v = rng.uniform01();
        CHECK(mask_loss(a.grid, b) == mask_loss(b.grid, a));
    }
}

TEST_CASE("mask loss shape mismatch") {
    HeatmapTarget gt;
    gt.grid = Tensor({2, 2});
    Tensor pred({3, 3});
    CHECK_THROWS_AS(mask_loss(pred, gt), DimensionMismatch);
}

TEST_CASE("combined loss is additive and linear in lambda") {
    ForwardOutputs out;
    out.logits = {1.0, -0.5, 0.25};
    out.m_star = Tensor({2, 2});
    out.m_star.v = {0.2, 0.8, 0.4, 0.1};
    HeatmapTarget gt;
    gt.grid = Tensor({2, 2});
    gt.grid.v = {0, 1, 1, 0};

    const auto at0 = combined_loss(out, 1, gt, 0.0);
    CHECK(at0.total == at0.l_cls);

    const auto at1 = combined_loss(out, 1, gt, 1.0);
    CHECK(at1.total == at1.l_cls + at1.l_mask);

    RngStream rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const double lam = rng.uniform(0.0, 4.0);
        const auto b = combined_loss(out, 1, gt, lam);
        CHECK(b.total == b.l_cls + lam * b.l_mask);
        CHECK(b.l_cls == at1.l_cls);
        CHECK(b.l_mask == at1.l_mask);
    }
}

TEST_CASE("analytic gradients match central finite differences on the toy model") {
    using namespace lga::testing;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto result = gradient_check(toy_model_config(), seed, 16, 1.0, Reduction::mean);
        CAPTURE(seed);
        CAPTURE(result.params_checked);
        CHECK(result.max_rel_err < 1e-4);
    }
}

TEST_CASE("gradient check also passes with sum reduction and sigmoid output") {
    using namespace lga::testing;
    auto config = toy_model_config();
    config.loc_output = LocOutput::sigmoid;
    const auto result = gradient_check(config, 4, 16, 0.7, Reduction::sum);
    CHECK(result.max_rel_err < 1e-4);
}
