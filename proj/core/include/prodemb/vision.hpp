#pragma once

#include <string>

#include "prodemb/image.hpp"
#include "prodemb/sample.hpp"
#include "prodemb/tensor.hpp"

namespace prodemb {

/// Where a core region came from. With no usable bbox the full image is
/// used, so the encoder's input layout never changes shape.
enum class RegionSource { Oracle, File, FullImageFallback };

enum class DetectorMode { Oracle, File, Disabled };

DetectorMode detector_mode_from_string(const std::string& s);
const char* detector_mode_name(DetectorMode m);

struct CoreRegion {
    Bbox bbox;
    RegionSource source = RegionSource::FullImageFallback;
};

/// Resolves the core-product region of `image`. Oracle mode reads the
/// generator's recorded ground truth, file mode the record's stored
/// bbox; both live in side.bbox for MBE-format data. Disabled mode, or a
/// side without a bbox, falls back to the full image.
CoreRegion detect_core(const Image& image, const ProductSide& side,
                       DetectorMode mode);

/// Pixel-exact crop, no resampling. Output is (y2-y1) x (x2-x1).
Image crop(const Image& image, const CoreRegion& region);

/// Resizes to `resolution` (square, bilinear, corner-aligned), splits
/// into non-overlapping patch x patch blocks in raster order, flattens
/// each block channel-major, and projects to the model width:
///   tokens = flat_patches [M x C*patch^2] * weight + bias.
/// M is fixed by (resolution / patch)^2 for any input image size.
Tensor patchify(const Image& image, std::size_t resolution, std::size_t patch,
                const Tensor& weight, const Tensor& bias);

/// The flattened-patch matrix before projection; exposed for tests.
Tensor patch_matrix(const Image& image, std::size_t resolution,
                    std::size_t patch);

} // namespace prodemb
