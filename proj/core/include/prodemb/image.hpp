#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prodemb/error.hpp"

namespace prodemb {

/// Dense C x H x W image, pixel values in [0, 1], 64-bit reals.
struct Image {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels; // row-major per channel

    Image() = default;
    Image(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
        : channels(c), height(h), width(w), pixels(c * h * w, fill) {}

    double& at(std::size_t c, std::size_t y, std::size_t x) {
        return pixels[(c * height + y) * width + x];
    }
    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return pixels[(c * height + y) * width + x];
    }
    bool empty() const { return pixels.empty(); }
};

/// Bilinear resize with corner-aligned sampling: output pixel o maps to
/// source coordinate o * (S-1) / (R-1)  (and 0 when R == 1).
Image bilinear_resize(const Image& src, std::size_t out_h, std::size_t out_w);

/// Raw tensor file: three little-endian uint32 (C, H, W) followed by
/// C*H*W little-endian 64-bit reals.
void save_raw_image(const Image& img, const std::string& path);
Image load_raw_image(const std::string& path);

} // namespace prodemb
