#include "prodemb/vision.hpp"

#include "prodemb/ops.hpp"

namespace prodemb {

DetectorMode detector_mode_from_string(const std::string& s) {
    if (s == "oracle") return DetectorMode::Oracle;
    if (s == "file") return DetectorMode::File;
    if (s == "none" || s == "disabled") return DetectorMode::Disabled;
    throw_config("unknown detector mode: '" + s +
                 "' (expected oracle|file|none)");
}

const char* detector_mode_name(DetectorMode m) {
    switch (m) {
        case DetectorMode::Oracle: return "oracle";
        case DetectorMode::File: return "file";
        case DetectorMode::Disabled: return "none";
    }
    return "?";
}

CoreRegion detect_core(const Image& image, const ProductSide& side,
                       DetectorMode mode) {
    if (image.empty()) throw_data("detect_core: image missing");
    const Bbox full{0, 0, static_cast<std::int64_t>(image.width),
                    static_cast<std::int64_t>(image.height)};
    if (mode == DetectorMode::Disabled || !side.bbox) {
        return CoreRegion{full, RegionSource::FullImageFallback};
    }
    const Bbox& b = *side.bbox;
    if (!(b.x1 >= 0 && b.y1 >= 0 && b.x1 < b.x2 && b.y1 < b.y2 &&
          b.x2 <= static_cast<std::int64_t>(image.width) &&
          b.y2 <= static_cast<std::int64_t>(image.height))) {
        throw_data("detect_core: stored bbox out of bounds");
    }
    return CoreRegion{b, mode == DetectorMode::Oracle ? RegionSource::Oracle
                                                      : RegionSource::File};
}

Image crop(const Image& image, const CoreRegion& region) {
    const Bbox& b = region.bbox;
    if (!(b.x1 >= 0 && b.y1 >= 0 && b.x1 < b.x2 && b.y1 < b.y2 &&
          b.x2 <= static_cast<std::int64_t>(image.width) &&
          b.y2 <= static_cast<std::int64_t>(image.height))) {
        throw_data("crop: degenerate or out-of-bounds region");
    }
    Image out(image.channels, b.height(), b.width());
    for (std::size_t c = 0; c < image.channels; ++c) {
        for (std::size_t y = 0; y < out.height; ++y) {
            for (std::size_t x = 0; x < out.width; ++x) {
                out.at(c, y, x) = image.at(c, y + std::size_t(b.y1),
                                           x + std::size_t(b.x1));
            }
        }
    }
    return out;
}

Tensor patch_matrix(const Image& image, std::size_t resolution,
                    std::size_t patch) {
    if (patch == 0 || resolution % patch != 0) {
        throw_config("patchify: patch " + std::to_string(patch) +
                     " does not divide resolution " +
                     std::to_string(resolution));
    }
    const Image r = (image.height == resolution && image.width == resolution)
                        ? image
                        : bilinear_resize(image, resolution, resolution);
    const std::size_t grid = resolution / patch;
    const std::size_t tokens = grid * grid;
    const std::size_t dims = r.channels * patch * patch;
    std::vector<double> flat(tokens * dims);
    std::size_t row = 0;
    for (std::size_t gy = 0; gy < grid; ++gy) {
        for (std::size_t gx = 0; gx < grid; ++gx, ++row) {
            double* dst = flat.data() + row * dims;
            std::size_t at = 0;
            for (std::size_t c = 0; c < r.channels; ++c) {
                for (std::size_t py = 0; py < patch; ++py) {
                    for (std::size_t px = 0; px < patch; ++px) {
                        dst[at++] =
                            r.at(c, gy * patch + py, gx * patch + px);
                    }
                }
            }
        }
    }
    return Tensor::from({tokens, dims}, std::move(flat));
}

Tensor patchify(const Image& image, std::size_t resolution, std::size_t patch,
                const Tensor& weight, const Tensor& bias) {
    return affine(patch_matrix(image, resolution, patch), weight, bias);
}

} // namespace prodemb
