#pragma once

#include <array>
#include <string>
#include <vector>

#include "lga/errors.hpp"
#include "lga/tensor.hpp"

namespace lga {

/// Interleaved RGB image, values in [0,1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> rgb; // H * W * 3

    Image() = default;
    Image(int h, int w) : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3, 0.0) {}

    double& at(int i, int j, int c) { return rgb[(static_cast<std::size_t>(i) * width + j) * 3 + c]; }
    double at(int i, int j, int c) const { return rgb[(static_cast<std::size_t>(i) * width + j) * 3 + c]; }

    std::array<double, 3> channel_means() const;
};

/// Binary PPM (P6), 8-bit per channel. Quantization rounds to nearest.
void save_ppm(const Image& image, const std::string& path);
Image load_ppm(const std::string& path);

/// True when the file starts with the P6 magic (cheap decodability probe).
bool looks_like_ppm(const std::string& path);

/// Bilinear resize to out_h x out_w (stretch, no aspect preservation).
Image resize_bilinear(const Image& image, int out_h, int out_w);

/// Channels-first {3,H,W} tensor view of an image, and back.
Tensor image_to_tensor(const Image& image);
Image tensor_to_image(const Tensor& chw);

} // namespace lga
