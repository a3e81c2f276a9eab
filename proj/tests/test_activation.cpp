#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lga/activation.hpp"
#include "lga/rng.hpp"

using namespace lga;

namespace {

Tensor random_fcls(int K, int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    RngStream rng(seed);
    Tensor t({K, h, w});
    for (auto& v : t.v) v = rng.uniform(lo, hi);
    return t;
}

} // namespace

TEST_CASE("normalize_channel hand example") {
    Tensor ch({2, 2});
    ch.v = {0, 2, 4, 8};
    const Tensor n = normalize_channel(ch);
    CHECK(n.v[0] == 0.0);
    CHECK(n.v[1] == 0.25);
    CHECK(n.v[2] == 0.5);
    CHECK(n.v[3] == 1.0);
}

TEST_CASE("normalize_channel maps a constant channel to zeros") {
    Tensor ch({3, 3});
    ch.fill(4.2);
    const Tensor n = normalize_channel(ch);
    for (double v : n.v) CHECK(v == 0.0);
}

TEST_CASE("normalize_channel keeps an exact [0,1] channel unchanged") {
    Tensor ch({2, 2});
    ch.v = {0.0, 0.3, 0.7, 1.0};
    const Tensor n = normalize_channel(ch);
    CHECK(n.v == ch.v);
}

TEST_CASE("sam of a single channel is the normalized channel") {
    Tensor f({1, 2, 2});
    f.v = {1, 3, 5, 9};
    const ActivationMap m = sam(f);
    CHECK(m.kind == ActivationMap::Kind::SAM);
    CHECK(m.grid.v[0] == 0.0);
    CHECK(m.grid.v[1] == doctest::Approx(0.25));
    CHECK(m.grid.v[3] == 1.0);
}

TEST_CASE("sam of constant channels is the zero map") {
    Tensor f({4, 2, 2});
    f.fill(2.0);
    const ActivationMap m = sam(f);
    for (double v : m.grid.v) CHECK(v == 0.0);
}

TEST_CASE("sam matches an independent normalize-then-sum computation") {
    const Tensor f = random_fcls(3, 2, 2, 77, -1.0, 2.0);
    const ActivationMap m = sam(f);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double want = 0.0;
            for (int k = 0; k < 3; ++k) {
                double lo = 1e300, hi = -1e300;
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) {
                        lo = std::min(lo, f.at3(k, a, b));
                        hi = std::max(hi, f.at3(k, a, b));
                    }
                want += hi > lo ? (f.at3(k, i, j) - lo) / (hi - lo) : 0.0;
            }
            CHECK(m.grid.at2(i, j) == doctest::Approx(want).epsilon(1e-12));
        }
}

TEST_CASE("sam is invariant under channel permutation") {
    const Tensor f = random_fcls(5, 3, 3, 101);
    Tensor shuffled = f;
    // Rotate channels by two.
    const long plane = 9;
    for (int k = 0; k < 5; ++k) {
        const int src = (k + 2) % 5;
        std::copy(f.data() + src * plane, f.data() + (src + 1) * plane,
                  shuffled.data() + k * plane);
    }
    const ActivationMap a = sam(f);
    const ActivationMap b = sam(shuffled);
    for (std::size_t i = 0; i < a.grid.v.size(); ++i)
        CHECK(a.grid.v[i] == doctest::Approx(b.grid.v[i]).epsilon(1e-12));
}

TEST_CASE("pam with a unit weight vector picks out that channel") {
    const Tensor f = random_fcls(4, 3, 3, 55);
    std::vector<double> w(4, 0.0);
    w[2] = 1.0;
    const ActivationMap m = pam(f, w, 0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(m.grid.at2(i, j) == f.at3(2, i, j));
}

TEST_CASE("pam with zero weights is the zero map") {
    const Tensor f = random_fcls(4, 3, 3, 56);
    const ActivationMap m = pam(f, std::vector<double>(4, 0.0), 1);
    for (double v : m.grid.v) CHECK(v == 0.0);
}

TEST_CASE("pam is linear in the weights") {
    const Tensor f = random_fcls(6, 2, 3, 57, -1.0, 1.0);
    RngStream rng(58);
    std::vector<double> w1(6), w2(6);
    for (auto& x : w1) x = rng.uniform(-1.0, 1.0);
    for (auto& x : w2) x = rng.uniform(-1.0, 1.0);
    const double a = 1.7, b = -0.4;
    std::vector<double> combo(6);
    for (int k = 0; k < 6; ++k) combo[static_cast<std::size_t>(k)] = a * w1[static_cast<std::size_t>(k)] + b * w2[static_cast<std::size_t>(k)];
    const auto lhs = pam(f, combo, 0);
    const auto m1 = pam(f, w1, 0);
    const auto m2 = pam(f, w2, 0);
    for (std::size_t i = 0; i < lhs.grid.v.size(); ++i)
        CHECK(lhs.grid.v[i] == doctest::Approx(a * m1.grid.v[i] + b * m2.grid.v[i]).epsilon(1e-12));
}

TEST_CASE("positive scaling of weights preserves the argmax cell") {
    const Tensor f = random_fcls(5, 4, 4, 59);
    RngStream rng(60);
    std::vector<double> w(5);
    for (auto& x : w) x = rng.uniform(-1.0, 1.0);
    const auto base = pam(f, w, 0);
    std::vector<double> scaled(5);
    for (int k = 0; k < 5; ++k) scaled[static_cast<std::size_t>(k)] = 3.5 * w[static_cast<std::size_t>(k)];
    const auto big = pam(f, scaled, 0);
    const auto argmax = [](const Tensor& g) {
        return std::distance(g.v.begin(), std::max_element(g.v.begin(), g.v.end()));
    };
    CHECK(argmax(base.grid) == argmax(big.grid));
}

TEST_CASE("pam rejects mismatched weight length") {
    const Tensor f = random_fcls(4, 2, 2, 61);
    CHECK_THROWS_AS(pam(f, std::vector<double>(3, 1.0), 0), DimensionMismatch);
}

TEST_CASE("attention_in_mask trivial and proportional cases") {
    HeatmapTarget target;
    target.grid = Tensor({2, 2});
    target.grid.v = {1, 0, 0, 0}; // 25% coverage

    ActivationMap inside;
    inside.grid = Tensor({2, 2});
    inside.grid.v = {3.0, 0.0, -1.0, 0.0};
    CHECK(attention_in_mask(inside, target) == 1.0);

    ActivationMap uniform;
    uniform.grid = Tensor({2, 2});
    uniform.grid.fill(0.7);
    CHECK(attention_in_mask(uniform, target) == doctest::Approx(0.25));

    ActivationMap negative;
    negative.grid = Tensor({2, 2});
    negative.grid.fill(-1.0);
    CHECK(attention_in_mask(negative, target) == 0.0);
}

TEST_CASE("attention_in_mask equals the direct double loop and stays in [0,1]") {
    RngStream rng(62);
    for (int trial = 0; trial < 100; ++trial) {
        ActivationMap map;
        map.grid = Tensor({3, 4});
        for (auto& v : map.grid.v) v = rng.uniform(-1.0, 2.0);
        HeatmapTarget target;
        target.grid = Tensor({3, 4});
        for (auto& v : target.grid.v) v = rng.uniform01();

        double mass = 0.0, inside = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) {
                const double m = std::max(map.grid.at2(i, j), 0.0);
                mass += m;
                inside += m * target.grid.at2(i, j);
            }
        const double want = mass > 0 ? inside / mass : 0.0;
        const double got = attention_in_mask(map, target);
        CHECK(got == want);
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
    }
}

TEST_CASE("render_overlay of a zero map is a uniform tint") {
    Image img(8, 8);
    RngStream rng(63);
    for (auto& v : img.rgb) v = rng.uniform01();
    ActivationMap map;
    map.grid = Tensor({2, 2}); // all zeros -> normalizes to zero everywhere
    const Image out = render_overlay(img, map);
    const auto zero_color = colormap(0.0);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            for (int c = 0; c < 3; ++c)
                CHECK(out.at(i, j, c) ==
                      doctest::Approx(0.5 * img.at(i, j, c) + 0.5 * zero_color[static_cast<std::size_t>(c)]));
}

TEST_CASE("render_overlay output stays in [0,1] and upsamples 14x14 to 448") {
    Image img(448, 448);
    img.rgb.assign(img.rgb.size(), 0.9);
    ActivationMap map;
    map.grid = Tensor({14, 14});
    RngStream rng(64);
    for (auto& v : map.grid.v) v = rng.uniform(-3.0, 3.0);
    const Image out = render_overlay(img, map);
    CHECK(out.height == 448);
    CHECK(out.width == 448);
    for (double v : out.rgb) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}
