#include <cmath>

#include "doctest.h"
#include "prodemb/synthetic.hpp"
#include "prodemb/tensor.hpp"
#include "prodemb/vision.hpp"

using namespace prodemb;

namespace {
Image numbered_image(std::size_t c, std::size_t h, std::size_t w) {
    Image img(c, h, w);
    double v = 0.0;
    const double step = 1.0 / double(c * h * w);
    for (double& p : img.pixels) {
        p = v;
        v += step;
    }
    return img;
}
} // namespace

TEST_CASE("detect_core mode behavior") {
    Image img = numbered_image(3, 4, 4);
    ProductSide side;
    side.bbox = Bbox{1, 1, 3, 3};

    CoreRegion file = detect_core(img, side, DetectorMode::File);
    CHECK(file.bbox == Bbox{1, 1, 3, 3});
    CHECK(file.source == RegionSource::File);

    CoreRegion oracle = detect_core(img, side, DetectorMode::Oracle);
    CHECK(oracle.bbox == Bbox{1, 1, 3, 3});
    CHECK(oracle.source == RegionSource::Oracle);

    ProductSide no_bbox;
    CoreRegion fb = detect_core(img, no_bbox, DetectorMode::File);
    CHECK(fb.bbox == Bbox{0, 0, 4, 4});
    CHECK(fb.source == RegionSource::FullImageFallback);

    CoreRegion off = detect_core(img, side, DetectorMode::Disabled);
    CHECK(off.bbox == Bbox{0, 0, 4, 4});
    CHECK(off.source == RegionSource::FullImageFallback);
}

TEST_CASE("crop copies the exact pixel block") {
    Image img = numbered_image(1, 4, 4);
    Image inner = crop(img, CoreRegion{Bbox{1, 1, 3, 3}});
    CHECK(inner.height == 2);
    CHECK(inner.width == 2);
    for (std::size_t y = 0; y < 2; ++y) {
        for (std::size_t x = 0; x < 2; ++x) {
            CHECK(inner.at(0, y, x) == img.at(0, y + 1, x + 1));
        }
    }

    Image full = crop(img, CoreRegion{Bbox{0, 0, 4, 4}});
    CHECK(full.pixels == img.pixels);

    Image corner = crop(img, CoreRegion{Bbox{0, 0, 1, 1}});
    CHECK(corner.height == 1);
    CHECK(corner.width == 1);
    CHECK(corner.at(0, 0, 0) == img.at(0, 0, 0));

    CHECK_THROWS_AS(crop(img, CoreRegion{Bbox{2, 2, 2, 3}}), Error);
}

TEST_CASE("bilinear resize is corner aligned") {
    Image img(1, 2, 2);
    img.at(0, 0, 0) = 0.0;
    img.at(0, 0, 1) = 1.0;
    img.at(0, 1, 0) = 1.0;
    img.at(0, 1, 1) = 0.0;
    Image up = bilinear_resize(img, 3, 3);
    CHECK(up.at(0, 0, 0) == 0.0);
    CHECK(up.at(0, 0, 2) == 1.0);
    CHECK(up.at(0, 2, 0) == 1.0);
    CHECK(up.at(0, 2, 2) == 0.0);
    CHECK(up.at(0, 1, 1) == doctest::Approx(0.5));
    CHECK(up.at(0, 0, 1) == doctest::Approx(0.5));
}

TEST_CASE("patchify token count and projection") {
    const std::size_t resolution = 4, patch = 2;
    Image img = numbered_image(1, 4, 4);
    Tensor pm = patch_matrix(img, resolution, patch);
    CHECK(pm.shape() == Shape{4, 4}); // M=4 tokens, 1*2*2 dims

    // raster order: token 0 is the top-left patch
    CHECK(pm.value()[0] == img.at(0, 0, 0));
    CHECK(pm.value()[1] == img.at(0, 0, 1));
    CHECK(pm.value()[2] == img.at(0, 1, 0));
    CHECK(pm.value()[3] == img.at(0, 1, 1));

    SUBCASE("zero image with zero bias gives zero tokens") {
        Image zeros(1, 4, 4);
        Tensor w = Tensor::full({4, 3}, 0.7);
        Tensor tokens = patchify(zeros, resolution, patch, w,
                                 Tensor::zeros({3}));
        for (double v : tokens.value()) CHECK(v == 0.0);
    }

    SUBCASE("token count is fixed for any input size") {
        Image odd = numbered_image(1, 7, 5);
        Tensor t = patch_matrix(odd, resolution, patch);
        CHECK(t.dim(0) == 4);
    }

    SUBCASE("determinism") {
        Tensor w = Tensor::full({4, 3}, 0.3);
        Tensor b = Tensor::full({3}, 0.1);
        Tensor t1 = patchify(img, resolution, patch, w, b);
        Tensor t2 = patchify(img, resolution, patch, w, b);
        for (std::size_t i = 0; i < t1.numel(); ++i) {
            CHECK(t1.value()[i] == t2.value()[i]);
        }
    }

    SUBCASE("patch must divide resolution") {
        CHECK_THROWS_AS(patch_matrix(img, 4, 3), Error);
    }
}

TEST_CASE("synthetic oracle bbox has IoU 1 with the generator bbox") {
    GenConfig cfg;
    cfg.identities = 8;
    cfg.categories = 4;
    cfg.image_size = 16;
    cfg.train_per_identity = 1;
    SyntheticData data = generate_synthetic(cfg);
    for (const ProductSample& s : data.train) {
        CoreRegion r =
            detect_core(*s.query.image, s.query, DetectorMode::Oracle);
        const Bbox& a = r.bbox;
        const Bbox& b = *s.query.bbox;
        const double ix = std::max(
            0.0, double(std::min(a.x2, b.x2) - std::max(a.x1, b.x1)));
        const double iy = std::max(
            0.0, double(std::min(a.y2, b.y2) - std::max(a.y1, b.y1)));
        const double inter = ix * iy;
        const double uni = double(a.width() * a.height()) +
                           double(b.width() * b.height()) - inter;
        CHECK(inter / uni == 1.0);
    }
}
