#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lga/activation.hpp"
#include "lga/checkpoint.hpp"
#include "lga/loss.hpp"
#include "lga/model.hpp"
#include "lga/rng.hpp"

using namespace lga;

namespace {

ModelConfig tiny_config(int num_classes = 3) {
    ModelConfig config;
    config.backbone.stage_channels = {4, 8};
    config.num_classes = num_classes;
    config.cls_channels = 6;
    config.loc_channels = {4, 3};
    return config;
}

Tensor random_image(int side, std::uint64_t seed) {
    RngStream rng(seed);
    Tensor img({3, side, side});
    for (auto& v : img.v) v = rng.uniform01();
    return img;
}

} // namespace

TEST_CASE("build_model is deterministic in the seed") {
    const auto a = build_model(tiny_config(), 11);
    const auto b = build_model(tiny_config(), 11);
    const auto pa = a.parameter_tensors();
    const auto pb = b.parameter_tensors();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->v == pb[i]->v);

    const auto c = build_model(tiny_config(), 12);
    CHECK(c.parameter_tensors()[0]->v != pa[0]->v);
}

TEST_CASE("default model matches the paper head shapes") {
    ModelConfig config;
    config.num_classes = 40;
    const auto params = build_model(config, 1);

    CHECK(params.fc.weight.shape == std::vector<int>{40, 1024});
    CHECK(params.fc.bias.shape == std::vector<int>{40});
    CHECK(params.cls_conv.weight.shape[0] == 1024);

    // Localization chain D -> 512 -> 64 -> 32 -> 1, four convs.
    REQUIRE(params.loc_convs.size() == 4);
    CHECK(params.loc_convs[0].weight.shape == std::vector<int>{512, 256, 3, 3});
    CHECK(params.loc_convs[1].weight.shape == std::vector<int>{64, 512, 3, 3});
    CHECK(params.loc_convs[2].weight.shape == std::vector<int>{32, 64, 3, 3});
    CHECK(params.loc_convs[3].weight.shape == std::vector<int>{1, 32, 3, 3});

    CHECK(config.backbone.stride() == 32);
    CHECK(params.fc.bias.v == std::vector<double>(40, 0.0));
}

TEST_CASE("stride arithmetic: 448 gives 14x14, 224 gives 7x7") {
    ModelConfig config;
    config.num_classes = 4;
    config.backbone.stage_channels = {4, 4, 4, 4, 8}; // stride 32, slim for speed
    config.cls_channels = 6;
    config.loc_channels = {4, 3};
    const auto params = build_model(config, 2);

    const auto out448 = forward(params, random_image(448, 3));
    CHECK(out448.f_cls.shape == std::vector<int>{6, 14, 14});
    CHECK(out448.m_star.shape == std::vector<int>{14, 14});

    const auto out224 = forward(params, random_image(224, 4));
    CHECK(out224.f_cls.shape == std::vector<int>{6, 7, 7});
    CHECK(out224.m_star.shape == std::vector<int>{7, 7});

    CHECK_THROWS_AS(forward(params, random_image(447, 5)), ShapeError);
}

TEST_CASE("zero input propagates to bias logits") {
    const auto params = build_model(tiny_config(), 3);
    Tensor zero({3, 16, 16});
    const auto out = forward(params, zero);
    for (double s : out.logits) CHECK(s == 0.0); // biases start at zero
    for (double x : out.f_cls.v) CHECK(x >= 0.0);
}

TEST_CASE("V is the spatial mean of F_cls") {
    const auto params = build_model(tiny_config(), 5);
    const auto out = forward(params, random_image(16, 6));
    const long plane = static_cast<long>(out.f_cls.shape[1]) * out.f_cls.shape[2];
    for (int k = 0; k < out.f_cls.shape[0]; ++k) {
        double s = 0.0;
        for (long i = 0; i < plane; ++i) s += out.f_cls.v[static_cast<std::size_t>(k * plane + i)];
        CHECK(out.v[static_cast<std::size_t>(k)] == doctest::Approx(s / plane).epsilon(1e-12));
    }
}

TEST_CASE("predict takes the argmax with lowest-index tie break") {
    ForwardOutputs out;
    out.logits = {0.1, 0.9, 0.3};
    CHECK(predict(out) == 1);
    out.logits = {0.5, 0.5};
    CHECK(predict(out) == 0);
    out.logits = {0.1, std::nan("")};
    CHECK_THROWS_AS(predict(out), NonFiniteLogits);
}

TEST_CASE("argmax commutes with softmax on random logit vectors") {
    RngStream rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        ForwardOutputs out;
        const int C = 2 + rng.below_int(7);
        for (int c = 0; c < C; ++c) out.logits.push_back(rng.uniform(-5.0, 5.0));
        const int direct = predict(out);
        const auto probs = softmax(out.logits);
        int via_softmax = 0;
        for (int c = 1; c < C; ++c)
            if (probs[static_cast<std::size_t>(c)] > probs[static_cast<std::size_t>(via_softmax)]) via_softmax = c;
        CHECK(direct == via_softmax);
    }
}

TEST_CASE("cam_weights returns the FC row and satisfies the linear-head identity") {
    const auto params = build_model(tiny_config(), 7);
    const auto w0 = cam_weights(params, 0);
    REQUIRE(w0.size() == 6);
    for (int k = 0; k < 6; ++k) CHECK(w0[static_cast<std::size_t>(k)] == params.fc.weight.at2(0, k));

    const auto out = forward(params, random_image(16, 8));
    for (int c = 0; c < 3; ++c) {
        const auto wc = cam_weights(params, c);
        double dot = params.fc.bias.v[static_cast<std::size_t>(c)];
        for (int k = 0; k < 6; ++k) dot += wc[static_cast<std::size_t>(k)] * out.v[static_cast<std::size_t>(k)];
        CHECK(dot == doctest::Approx(out.logits[static_cast<std::size_t>(c)]).epsilon(1e-12));
    }

    CHECK_THROWS_AS(cam_weights(params, 3), IndexOutOfRange);
    CHECK_THROWS_AS(cam_weights(params, -1), IndexOutOfRange);
}

TEST_CASE("GAP/FC commutation: mean(PAM_c) + bias_c = S_c for every class") {
    const auto params = build_model(tiny_config(4), 13);
    for (int trial = 0; trial < 5; ++trial) {
        const auto out = forward(params, random_image(32, 20 + static_cast<std::uint64_t>(trial)));
        for (int c = 0; c < 4; ++c) {
            const auto map = pam(out.f_cls, cam_weights(params, c), c);
            const double lhs = map.grid.mean() + params.fc.bias.v[static_cast<std::size_t>(c)];
            CHECK(lhs == doctest::Approx(out.logits[static_cast<std::size_t>(c)]).epsilon(1e-5));
        }
    }
}

TEST_CASE("outputs are finite for inputs in [0,1] at init") {
    const auto params = build_model(tiny_config(), 17);
    const auto out = forward(params, random_image(32, 21));
    for (double x : out.logits) CHECK(std::isfinite(x));
    for (double x : out.m_star.v) CHECK(std::isfinite(x));
    for (double x : out.f_cls.v) CHECK(std::isfinite(x));
}

TEST_CASE("sigmoid loc output bounds the heatmap") {
    auto config = tiny_config();
    config.loc_output = LocOutput::sigmoid;
    const auto params = build_model(config, 19);
    const auto out = forward(params, random_image(16, 22));
    for (double x : out.m_star.v) {
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("checkpoint round trip is bit exact") {
    Checkpoint ckpt;
    ckpt.params = build_model(tiny_config(), 23);
    ckpt.step = 41;
    ckpt.rng_state = 99;
    ckpt.image_size = 64;
    ckpt.class_names = {"a", "b", "c"};
    ckpt.optimizer = "adam";
    ckpt.opt_updates = 17;
    for (const auto* t : ckpt.params.parameter_tensors()) {
        ckpt.opt_m.emplace_back(t->shape);
        ckpt.opt_v.emplace_back(t->shape);
    }
    RngStream rng(31);
    for (auto& t : ckpt.opt_m)
        for (auto& v : t.v) v = rng.normal(0.0, 1.0);

    const std::string path = "test_ckpt_roundtrip.ckpt";
    save_checkpoint(ckpt, path);
    const Checkpoint back = load_checkpoint(path);

    CHECK(back.step == 41);
    CHECK(back.rng_state == 99);
    CHECK(back.image_size == 64);
    CHECK(back.class_names == ckpt.class_names);
    CHECK(back.opt_updates == 17);
    const auto pa = ckpt.params.parameter_tensors();
    const auto pb = back.params.parameter_tensors();
    for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i]->v == pb[i]->v);
    for (std::size_t i = 0; i < ckpt.opt_m.size(); ++i) REQUIRE(ckpt.opt_m[i].v == back.opt_m[i].v);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_checkpoint("no_such_file.ckpt"), IOError);
}
