#include <cmath>

#include "doctest.h"
#include "morphkit/augment.hpp"
#include "morphkit/error.hpp"

using namespace morphkit;

namespace {

ImageBuffer textured(int w, int h) {
    ImageBuffer img(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = 0.5f + 0.45f * static_cast<float>(std::cos(0.21 * x - 0.33 * y + 2 * c));
    return img;
}

bool geometric(Transform t) {
    return t == Transform::horizontal_skew || t == Transform::vertical_skew || t == Transform::rotation ||
           t == Transform::scale;
}

}  // namespace

TEST_CASE("default augmentation probability") { CHECK(AugmentParams{}.p_aug == 0.4); }

TEST_CASE("p_aug = 0 is the identity") {
    const ImageBuffer img = textured(40, 30);
    for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(augment(img, AugmentParams::disabled(), seed) == img);
}

TEST_CASE("augmentation is seeded") {
    const ImageBuffer img = textured(40, 30);
    AugmentParams p;
    p.p_aug = 1.0;
    CHECK(augment(img, p, 3) == augment(img, p, 3));
    CHECK_FALSE(augment(img, p, 3) == augment(img, p, 4));
}

TEST_CASE("every transform at its midpoint yields a valid image") {
    const AugmentParams p;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const ImageBuffer img = textured(24 + static_cast<int>(seed) * 5, 36 - static_cast<int>(seed) * 2);
        const BBox box{2.0, 3.0, img.width() - 4.0, img.height() - 2.0};
        for (Transform t : kTransformOrder) {
            CAPTURE(transform_name(t));
            Rng rng(seed);
            for (double v : {p.range(t).lo, p.range(t).midpoint(), p.range(t).hi}) {
                const AugmentResult r = apply_transform(img, box, t, v, rng);
                REQUIRE_FALSE(r.image.empty());
                for (float px : r.image.pixels()) REQUIRE((px >= 0.0f && px <= 1.0f));
                if (!geometric(t)) {
                    CHECK(r.image.width() == img.width());
                    CHECK(r.image.height() == img.height());
                    CHECK(r.box == box);
                }
                CHECK(r.box.valid());
                CHECK(r.box.x1 >= 0.0);
                CHECK(r.box.y1 >= 0.0);
                CHECK(r.box.x2 <= r.image.width());
                CHECK(r.box.y2 <= r.image.height());
            }
        }
    }
}

TEST_CASE("transform names round trip") {
    for (Transform t : kTransformOrder) CHECK(parse_transform(transform_name(t)) == t);
    CHECK_THROWS_AS(parse_transform("fog"), ConfigError);
}

TEST_CASE("range validation and widening") {
    AugmentParams p;
    CHECK_NOTHROW(p.validate());
    p.range(Transform::rotation) = {true, 10.0, -10.0};
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = AugmentParams{};
    p.p_aug = 1.5;
    CHECK_THROWS_AS(p.validate(), ConfigError);

    const AugmentParams w = AugmentParams{}.widened(1.5);
    CHECK(w.range(Transform::rotation).lo == doctest::Approx(-30.0));
    CHECK(w.range(Transform::contrast).hi == doctest::Approx(1.375));
    CHECK_NOTHROW(w.validate());
}

TEST_CASE("poisoning stamps before augmenting") {
    const ImageBuffer obj = textured(48, 48);
    const BBox box{0, 0, 48, 48};
    TriggerSpec spec;
    spec.patch = default_trigger_patch(16);
    spec.size_r = 16;

    SUBCASE("digital baseline") {
        spec.scale_s = 1.0;
        const BBox fp = placement_anchor(box, spec.placement, 16).front();
        const PixelRect r = rasterize(fp);
        const ImageBuffer direct = stamp(obj, resize(spec.patch, 16, 16, Interpolation::bilinear), r.x, r.y);
        CHECK(poison_object(obj, box, spec, AugmentParams::disabled(), 1) == direct);
    }
    SUBCASE("step one only") {
        const BBox fp = placement_anchor(box, spec.placement, 16).front();
        CHECK(poison_object(obj, box, spec, AugmentParams::disabled(), 1) == physicalize_stamp(obj, spec, fp));
    }
    SUBCASE("augmentation sees the stamped object") {
        AugmentParams p;
        p.p_aug = 1.0;
        const BBox fp = placement_anchor(box, spec.placement, 16).front();
        const ImageBuffer stamped = physicalize_stamp(obj, spec, fp);
        const AugmentResult got = poison_object_with_box(obj, box, spec, p, 9);
        const AugmentResult want = augment_with_box(stamped, box, p, derive_seed(9, "augment"));
        CHECK(got.image == want.image);
    }
}
