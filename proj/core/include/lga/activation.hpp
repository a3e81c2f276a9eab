#pragma once

#include <array>
#include <string>
#include <vector>

#include "lga/data.hpp"
#include "lga/image.hpp"
#include "lga/tensor.hpp"

namespace lga {

/// 2-D attention map over feature-map coordinates. SAM sums min-max
/// normalized channels; PAM is the class-weighted sum at some class.
struct ActivationMap {
    enum class Kind { SAM, PAM };
    Kind kind = Kind::SAM;
    int class_index = -1; // meaningful for PAM only
    Tensor grid;          // {h, w}
};

/// (x - min) / (max - min); a constant channel maps to all zeros.
Tensor normalize_channel(const Tensor& channel);

/// Per-channel min-max normalization followed by a channel sum.
ActivationMap sam(const Tensor& f_cls);

/// Weighted channel sum with the FC-row weights of a class; unnormalized.
ActivationMap pam(const Tensor& f_cls, const std::vector<double>& weights, int class_index);

/// Fraction of the map's rectified mass that falls inside the target:
/// sum(relu(map) * target) / sum(relu(map)); 0 for a nonpositive map.
double attention_in_mask(const ActivationMap& map, const HeatmapTarget& target);

/// Min-max normalizes the map, bilinearly upsamples it to the image size,
/// applies a fixed perceptual colormap and alpha-blends it over the image.
Image render_overlay(const Image& image, const ActivationMap& map, double alpha = 0.5);

/// Fixed perceptual colormap (viridis ramp), t in [0,1].
std::array<double, 3> colormap(double t);

/// Plain-text grid dump, one row per line.
void save_map_text(const Tensor& grid, const std::string& path);

} // namespace lga
