#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lga/mask.hpp"
#include "lga/rng.hpp"

using namespace lga;

namespace {

/// Independent oracle: per-pixel point-in-box test over the raw box list.
HumanMask brute_force_mask(const std::vector<BoundingBox>& boxes, int width, int height) {
    HumanMask mask(height, width);
    for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j) {
            const double cx = j + 0.5, cy = i + 0.5;
            for (const auto& b : boxes)
                if (cx >= b.x_min && cx < b.x_max && cy >= b.y_min && cy < b.y_max) {
                    mask.at(i, j) = 1;
                    break;
                }
        }
    return mask;
}

} // namespace

TEST_CASE("keypoints_to_box expands 1.5x about the tight-box center") {
    Keypoints kps;
    kps.joints[0] = {10, 10, true};
    kps.joints[1] = {20, 30, true};
    const BoundingBox b = keypoints_to_box(kps, 100, 100, /*min_extent=*/0.0);
    CHECK(b.x_min == doctest::Approx(7.5));
    CHECK(b.x_max == doctest::Approx(22.5));
    CHECK(b.y_min == doctest::Approx(5.0));
    CHECK(b.y_max == doctest::Approx(35.0));
}

TEST_CASE("keypoints_to_box clamps when expansion leaves the image") {
    Keypoints kps;
    kps.joints[0] = {0, 0, true};
    kps.joints[1] = {100, 0, true};
    kps.joints[2] = {0, 100, true};
    kps.joints[3] = {100, 100, true};
    const BoundingBox b = keypoints_to_box(kps, 100, 100, 0.0);
    CHECK(b.x_min == 0.0);
    CHECK(b.y_min == 0.0);
    CHECK(b.x_max == 100.0);
    CHECK(b.y_max == 100.0);
}

TEST_CASE("keypoints_to_box with zero visible joints") {
    Keypoints kps;
    CHECK_THROWS_AS(keypoints_to_box(kps, 100, 100), NoVisibleJoints);
}

TEST_CASE("keypoints_to_box grows degenerate axes to min_extent") {
    Keypoints kps;
    kps.joints[0] = {50, 20, true};
    kps.joints[1] = {50, 80, true}; // zero horizontal extent
    const BoundingBox b = keypoints_to_box(kps, 200, 200, /*min_extent=*/32.0);
    CHECK(b.width() == doctest::Approx(48.0)); // 32 * 1.5
    CHECK(b.height() == doctest::Approx(90.0));
}

TEST_CASE("keypoints_to_box output contains every visible joint") {
    RngStream rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        Keypoints kps;
        const int visible = 2 + rng.below_int(kNumJoints - 1);
        for (int k = 0; k < visible; ++k)
            kps.joints[static_cast<std::size_t>(k)] = {rng.uniform(0.0, 128.0), rng.uniform(0.0, 128.0), true};
        const BoundingBox b = keypoints_to_box(kps, 128, 128);
        for (int k = 0; k < visible; ++k) {
            const auto& j = kps.joints[static_cast<std::size_t>(k)];
            CHECK(j.x >= b.x_min);
            CHECK(j.x <= b.x_max);
            CHECK(j.y >= b.y_min);
            CHECK(j.y <= b.y_max);
        }
    }
}

TEST_CASE("boxes_to_mask trivial cases") {
    const HumanMask full = boxes_to_mask({{0, 0, 8, 8}}, 8, 8);
    for (auto v : full.grid) CHECK(v == 1);

    const HumanMask empty = boxes_to_mask({}, 8, 8);
    for (auto v : empty.grid) CHECK(v == 0);
}

TEST_CASE("boxes_to_mask matches the brute-force oracle on two overlapping boxes") {
    const std::vector<BoundingBox> boxes{{0, 0, 2.5, 2.5}, {1.5, 1.5, 4, 4}};
    const HumanMask got = boxes_to_mask(boxes, 4, 4);
    const HumanMask want = brute_force_mask(boxes, 4, 4);
    CHECK(got.grid == want.grid);
}

TEST_CASE("boxes_to_mask matches the brute-force oracle exhaustively") {
    RngStream rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const int w = 1 + rng.below_int(16);
        const int h = 1 + rng.below_int(16);
        std::vector<BoundingBox> boxes;
        const int n = rng.below_int(4);
        for (int k = 0; k < n; ++k) {
            BoundingBox b;
            b.x_min = rng.uniform(-2.0, w - 0.5);
            b.x_max = b.x_min + rng.uniform(0.25, w + 2.0);
            b.y_min = rng.uniform(-2.0, h - 0.5);
            b.y_max = b.y_min + rng.uniform(0.25, h + 2.0);
            boxes.push_back(b);
        }
        const HumanMask got = boxes_to_mask(boxes, w, h);
        const HumanMask want = brute_force_mask(boxes, w, h);
        REQUIRE(got.grid == want.grid);
    }
}

TEST_CASE("adding a box never clears a mask pixel") {
    RngStream rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<BoundingBox> boxes;
        HumanMask prev = boxes_to_mask(boxes, 12, 12);
        for (int k = 0; k < 3; ++k) {
            BoundingBox b;
            b.x_min = rng.uniform(0.0, 10.0);
            b.x_max = b.x_min + rng.uniform(0.5, 6.0);
            b.y_min = rng.uniform(0.0, 10.0);
            b.y_max = b.y_min + rng.uniform(0.5, 6.0);
            boxes.push_back(b);
            const HumanMask next = boxes_to_mask(boxes, 12, 12);
            for (std::size_t p = 0; p < prev.grid.size(); ++p)
                if (prev.grid[p] == 1) CHECK(next.grid[p] == 1);
            prev = next;
        }
    }
}

TEST_CASE("downsample_mask all-ones 448 -> all-ones 14x14") {
    const HumanMask mask = boxes_to_mask({{0, 0, 448, 448}}, 448, 448);
    const HeatmapTarget t = downsample_mask(mask, 14, 14);
    for (double v : t.grid.v) CHECK(v == 1.0);
}

TEST_CASE("downsample_mask left-half mask splits columns exactly") {
    const HumanMask mask = boxes_to_mask({{0, 0, 224, 448}}, 448, 448);
    const HeatmapTarget t = downsample_mask(mask, 14, 14);
    for (int i = 0; i < 14; ++i)
        for (int j = 0; j < 14; ++j) CHECK(t.grid.at2(i, j) == (j < 7 ? 1.0 : 0.0));
}

TEST_CASE("downsample_mask half-covered cell is exactly 0.5") {
    // One 32x32 block whose left half is inside the box.
    const HumanMask mask = boxes_to_mask({{0, 0, 16, 32}}, 32, 32);
    const HeatmapTarget t = downsample_mask(mask, 1, 1);
    CHECK(t.grid.v[0] == 0.5);
}

TEST_CASE("downsample_mask preserves mean mass exactly") {
    RngStream rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<BoundingBox> boxes;
        const int n = 1 + rng.below_int(3);
        for (int k = 0; k < n; ++k) {
            BoundingBox b;
            b.x_min = rng.uniform(0.0, 400.0);
            b.x_max = b.x_min + rng.uniform(1.0, 48.0);
            b.y_min = rng.uniform(0.0, 400.0);
            b.y_max = b.y_min + rng.uniform(1.0, 48.0);
            boxes.push_back(b);
        }
        const HumanMask mask = boxes_to_mask(boxes, 448, 448);
        const HeatmapTarget t = downsample_mask(mask, 14, 14);
        CHECK(t.grid.mean() == mask.mean());
    }
}

TEST_CASE("downsample_mask rejects non-divisible dimensions") {
    const HumanMask mask(30, 30);
    CHECK_THROWS_AS(downsample_mask(mask, 14, 14), DimensionMismatch);
}

TEST_CASE("hard mask target thresholds at 0.5") {
    const HumanMask mask = boxes_to_mask({{0, 0, 20, 32}}, 32, 32); // 20/32 coverage
    CHECK(downsample_mask(mask, 1, 1, MaskTarget::hard).grid.v[0] == 1.0);
    const HumanMask thin = boxes_to_mask({{0, 0, 10, 32}}, 32, 32); // 10/32 coverage
    CHECK(downsample_mask(thin, 1, 1, MaskTarget::hard).grid.v[0] == 0.0);
}
