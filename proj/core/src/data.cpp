#include "lga/data.hpp"

#include <algorithm>

namespace lga {

BoundingBox clamp_box(const BoundingBox& box, double width, double height) {
    BoundingBox out;
    out.x_min = std::max(box.x_min, 0.0);
    out.y_min = std::max(box.y_min, 0.0);
    out.x_max = std::min(box.x_max, width);
    out.y_max = std::min(box.y_max, height);
    if (!(out.x_min < out.x_max) || !(out.y_min < out.y_max))
        throw EmptyBox("box lies outside the image");
    return out;
}

} // namespace lga
