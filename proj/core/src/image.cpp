#include "lga/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

namespace lga {

std::array<double, 3> Image::channel_means() const {
    std::array<double, 3> m{0.0, 0.0, 0.0};
    const long n = static_cast<long>(height) * width;
    if (n == 0) return m;
    for (long p = 0; p < n; ++p)
        for (int c = 0; c < 3; ++c) m[c] += rgb[p * 3 + c];
    for (int c = 0; c < 3; ++c) m[c] /= static_cast<double>(n);
    return m;
}

void save_ppm(const Image& image, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot open for writing: " + path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width) * 3);
    for (int i = 0; i < image.height; ++i) {
        for (int j = 0; j < image.width; ++j) {
            for (int c = 0; c < 3; ++c) {
                double v = std::clamp(image.at(i, j, c), 0.0, 1.0);
                row[static_cast<std::size_t>(j) * 3 + c] =
                    static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IOError("short write: " + path);
}

namespace {

int read_ppm_token(std::istream& in, const std::string& path) {
    // Skips whitespace and '#' comments between header tokens.
    int ch = in.peek();
    while (ch == '#' || std::isspace(ch)) {
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            in.get();
        }
        ch = in.peek();
    }
    int value = -1;
    if (!(in >> value)) throw IOError("malformed PPM header: " + path);
    return value;
}

} // namespace

Image load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw IOError("not a binary PPM (P6): " + path);
    const int width = read_ppm_token(in, path);
    const int height = read_ppm_token(in, path);
    const int maxval = read_ppm_token(in, path);
    if (width <= 0 || height <= 0 || maxval != 255)
        throw IOError("unsupported PPM geometry in " + path);
    in.get(); // single whitespace after maxval

    Image image(height, width);
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(width) * height * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw IOError("truncated PPM payload: " + path);
    for (std::size_t p = 0; p < raw.size(); ++p)
        image.rgb[p] = static_cast<double>(raw[p]) / 255.0;
    return image;
}

bool looks_like_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[2] = {0, 0};
    in.read(magic, 2);
    return in.gcount() == 2 && magic[0] == 'P' && magic[1] == '6';
}

Image resize_bilinear(const Image& image, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw DimensionMismatch("resize target must be positive");
    if (out_h == image.height && out_w == image.width) return image;

    Image out(out_h, out_w);
    const double sy = static_cast<double>(image.height) / out_h;
    const double sx = static_cast<double>(image.width) / out_w;
    for (int i = 0; i < out_h; ++i) {
        // Pixel-center aligned sampling.
        double fy = (i + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(image.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, image.height - 1);
        const double wy = fy - y0;
        for (int j = 0; j < out_w; ++j) {
            double fx = (j + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(image.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, image.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = image.at(y0, x0, c) * (1.0 - wx) + image.at(y0, x1, c) * wx;
                const double bot = image.at(y1, x0, c) * (1.0 - wx) + image.at(y1, x1, c) * wx;
                out.at(i, j, c) = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

Tensor image_to_tensor(const Image& image) {
    Tensor t({3, image.height, image.width});
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < image.height; ++i)
            for (int j = 0; j < image.width; ++j) t.at3(c, i, j) = image.at(i, j, c);
    return t;
}

Image tensor_to_image(const Tensor& chw) {
    if (chw.shape.size() != 3 || chw.shape[0] != 3)
        throw DimensionMismatch("expected a {3,H,W} tensor");
    Image image(chw.shape[1], chw.shape[2]);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < image.height; ++i)
            for (int j = 0; j < image.width; ++j) image.at(i, j, c) = chw.at3(c, i, j);
    return image;
}

} // namespace lga
