#include "prodemb/image.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace prodemb {

Image bilinear_resize(const Image& src, std::size_t out_h, std::size_t out_w) {
    if (src.empty()) throw_runtime("bilinear_resize: empty image");
    if (out_h == 0 || out_w == 0) {
        throw_runtime("bilinear_resize: zero output size");
    }
    Image out(src.channels, out_h, out_w);
    const double sy = out_h > 1 ? double(src.height - 1) / double(out_h - 1)
                                : 0.0;
    const double sx = out_w > 1 ? double(src.width - 1) / double(out_w - 1)
                                : 0.0;
    for (std::size_t y = 0; y < out_h; ++y) {
        const double fy = y * sy;
        const std::size_t y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - double(y0);
        for (std::size_t x = 0; x < out_w; ++x) {
            const double fx = x * sx;
            const std::size_t x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - double(x0);
            for (std::size_t c = 0; c < src.channels; ++c) {
                const double top = src.at(c, y0, x0) * (1.0 - wx) +
                                   src.at(c, y0, x1) * wx;
                const double bot = src.at(c, y1, x0) * (1.0 - wx) +
                                   src.at(c, y1, x1) * wx;
                out.at(c, y, x) = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

void save_raw_image(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_data("cannot write image file: " + path);
    const std::uint32_t dims[3] = {static_cast<std::uint32_t>(img.channels),
                                   static_cast<std::uint32_t>(img.height),
                                   static_cast<std::uint32_t>(img.width)};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size() * sizeof(double)));
    if (!out) throw_data("short write on image file: " + path);
}

Image load_raw_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data("cannot open image file: " + path);
    std::uint32_t dims[3] = {0, 0, 0};
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in) throw_data("truncated image header: " + path);
    Image img(dims[0], dims[1], dims[2]);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size() * sizeof(double)));
    if (!in) throw_data("truncated image data: " + path);
    return img;
}

} // namespace prodemb
