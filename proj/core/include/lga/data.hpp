#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lga/errors.hpp"
#include "lga/tensor.hpp"

namespace lga {

/// Axis-aligned box in real pixel coordinates, origin at the top-left.
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    bool valid() const { return x_min < x_max && y_min < y_max; }

    /// True when the point lies inside the half-open box [x_min,x_max) x [y_min,y_max).
    bool contains(double x, double y) const {
        return x >= x_min && x < x_max && y >= y_min && y < y_max;
    }
};

/// Intersects the box with [0,width] x [0,height]. Throws EmptyBox when the
/// intersection has no area.
BoundingBox clamp_box(const BoundingBox& box, double width, double height);

constexpr int kNumJoints = 16; // MPII joint order

struct Joint {
    double x = 0.0;
    double y = 0.0;
    bool visible = false;
};

struct Keypoints {
    std::array<Joint, kNumJoints> joints{};

    int num_visible() const {
        int n = 0;
        for (const auto& j : joints)
            if (j.visible) ++n;
        return n;
    }
};

/// Binary person mask at image resolution. Values are exactly 0 or 1.
struct HumanMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> grid; // row-major, {0,1}

    HumanMask() = default;
    HumanMask(int h, int w) : height(h), width(w), grid(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t& at(int i, int j) { return grid[static_cast<std::size_t>(i) * width + j]; }
    std::uint8_t at(int i, int j) const { return grid[static_cast<std::size_t>(i) * width + j]; }

    double mean() const {
        if (grid.empty()) return 0.0;
        long s = 0;
        for (auto v : grid) s += v;
        return static_cast<double>(s) / static_cast<double>(grid.size());
    }
};

/// Regression target for the localization head: fractional person coverage
/// per feature-map cell, values in [0,1].
struct HeatmapTarget {
    Tensor grid; // shape {h, w}

    int height() const { return grid.shape.empty() ? 0 : grid.shape[0]; }
    int width() const { return grid.shape.empty() ? 0 : grid.shape[1]; }
};

/// Ordered class-name list; class indices are positions in it.
struct ActionLabelSpace {
    std::vector<std::string> class_names;

    int num_classes() const { return static_cast<int>(class_names.size()); }

    /// Index of a name, or -1 when absent.
    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < class_names.size(); ++i)
            if (class_names[i] == name) return static_cast<int>(i);
        return -1;
    }
};

/// One dataset record: an image, its action label, and the person evidence
/// used to build the training mask.
struct AnnotatedSample {
    std::string image_path;
    int label = -1;
    std::vector<BoundingBox> boxes;
    std::optional<Keypoints> keypoints;

    bool has_person_evidence() const { return !boxes.empty() || keypoints.has_value(); }
};

} // namespace lga
