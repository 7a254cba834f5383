#include <cmath>
#include <random>

#include "doctest.h"
#include "morphkit/error.hpp"
#include "morphkit/trigger.hpp"

using namespace morphkit;

namespace {

ImageBuffer textured(int w, int h) {
    ImageBuffer img(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = 0.5f + 0.4f * static_cast<float>(std::sin(0.3 * x + 0.7 * y + c));
    return img;
}

TriggerSpec spec_with(double s, int r) {
    TriggerSpec spec;
    spec.patch = default_trigger_patch(r);
    spec.size_r = r;
    spec.scale_s = s;
    return spec;
}

bool inside_grown(int x, int y, const PixelRect& r, int grow) {
    return x >= r.x - grow && x < r.x + r.w + grow && y >= r.y - grow && y < r.y + r.h + grow;
}

}  // namespace

TEST_CASE("trigger defaults") {
    const TriggerSpec spec;
    CHECK(spec.scale_s == 16.0);
    CHECK(spec.size_r == 76);
    CHECK(spec.n_variants == 4);
}

TEST_CASE("physicalize with s = 1 is the direct stamp") {
    const ImageBuffer obj = textured(60, 50);
    const TriggerSpec spec = spec_with(1.0, 17);
    const BBox anchor{11, 9, 28, 26};
    const ImageBuffer direct = stamp(obj, resize(spec.patch, 17, 17, Interpolation::bilinear), 11, 9);
    CHECK(physicalize_stamp(obj, spec, anchor) == direct);
}

TEST_CASE("physicalize touches only the footprint and its halo") {
    const ImageBuffer flat(80, 80, 3, 0.42f);
    const TriggerSpec spec = spec_with(16.0, 20);
    const BBox anchor{30, 40, 50, 60};
    const PixelRect fp = rasterize(anchor);
    const ImageBuffer out = physicalize_stamp(flat, spec, anchor);
    REQUIRE(out.width() == 80);
    REQUIRE(out.height() == 80);
    for (int y = 0; y < 80; ++y)
        for (int x = 0; x < 80; ++x)
            if (!inside_grown(x, y, fp, kHaloPx))
                for (int c = 0; c < 3; ++c) CHECK(out.at(x, y, c) == 0.42f);
    for (float v : out.pixels()) CHECK((v >= 0.0f && v <= 1.0f));

    const ImageBuffer tex = textured(80, 80);
    const ImageBuffer out2 = physicalize_stamp(tex, spec, anchor);
    for (int y = 0; y < 80; ++y)
        for (int x = 0; x < 80; ++x)
            if (!inside_grown(x, y, fp, kHaloPx))
                for (int c = 0; c < 3; ++c) CHECK(out2.at(x, y, c) == tex.at(x, y, c));
}

TEST_CASE("scaling blurs a non-constant patch") {
    const ImageBuffer obj = textured(90, 90);
    const BBox anchor{20, 20, 58, 58};
    const PixelRect fp = rasterize(anchor);
    const ImageBuffer direct = physicalize_stamp(obj, spec_with(1.0, 38), anchor);
    for (double s : {2.0, 4.0, 16.0}) {
        const ImageBuffer phys = physicalize_stamp(obj, spec_with(s, 38), anchor);
        double mad = 0.0;
        for (int y = fp.y; y < fp.y + fp.h; ++y)
            for (int x = fp.x; x < fp.x + fp.w; ++x)
                for (int c = 0; c < 3; ++c) mad += std::abs(phys.at(x, y, c) - direct.at(x, y, c));
        CHECK(mad / (fp.w * fp.h * 3) > 0.0);
    }
}

TEST_CASE("physicalize rejects footprints outside the object") {
    const ImageBuffer obj = textured(30, 30);
    CHECK_THROWS_AS(physicalize_stamp(obj, spec_with(16.0, 10), BBox{25, 0, 35, 10}), BoundsError);
}

TEST_CASE("placement fractions") {
    const BBox box{0, 0, 100, 100};
    const BBox low = placement_anchor(box, Placement::low, 20).front();
    CHECK(low.cx() == doctest::Approx(50.0));
    CHECK(low.cy() == doctest::Approx(72.0));
    CHECK(low.width() == 20.0);
    const BBox high = placement_anchor(box, Placement::high, 20).front();
    CHECK(high.cy() == doctest::Approx(28.0));
    const BBox roof = placement_anchor(box, Placement::roof, 20).front();
    CHECK(roof.cy() == doctest::Approx(20.0));

    const auto pieces = placement_anchor(box, Placement::multi_piece, 20);
    REQUIRE(pieces.size() == 2);
    CHECK((pieces[0].y2 <= pieces[1].y1 || pieces[1].y2 <= pieces[0].y1));

    CHECK_THROWS_AS(placement_anchor(BBox{0, 0, 15, 40}, Placement::low, 20), PlacementError);
}

TEST_CASE("outside footprints avoid every annotation box") {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> pos(0.0, 100.0), ext(10.0, 30.0);
    for (const int margin : {0, 3}) {
        const double grow = kHaloPx + margin;
        for (int trial = 0; trial < 300; ++trial) {
            std::vector<BBox> boxes;
            for (int i = 0; i < 3; ++i) {
                const double x = pos(gen), y = pos(gen);
                boxes.push_back({x, y, std::min(128.0, x + ext(gen)), std::min(128.0, y + ext(gen))});
            }
            const PlacementContext ctx{128, 128, boxes, margin};
            std::vector<BBox> fps;
            try {
                fps = placement_anchor(boxes[0], Placement::outside, 12, {}, &ctx);
            } catch (const PlacementError&) {
                continue;
            }
            REQUIRE(fps.size() == 1);
            const PixelRect fp = rasterize(fps[0]);
            CHECK(rect_within(fp, 128, 128));
            const BBox halo{fp.x - grow, fp.y - grow, fp.x + fp.w + grow, fp.y + fp.h + grow};
            for (const auto& b : boxes) CHECK(intersection_area(halo, b) == 0.0);
        }
    }
}

TEST_CASE("trigger variants") {
    const ImageBuffer obj = textured(64, 64);
    const BBox anchor{20, 30, 44, 54};
    TriggerSpec spec = spec_with(16.0, 24);

    SUBCASE("degenerate jitter reproduces the plain stamp") {
        spec.n_variants = 1;
        spec.jitter = {0, 0.0, 1.0};
        const auto v = make_trigger_variants(spec, obj, anchor, 99);
        REQUIRE(v.size() == 1);
        CHECK(v[0] == physicalize_stamp(obj, spec, anchor));
    }
    SUBCASE("seeded, distinct and of the requested count") {
        const auto a = make_trigger_variants(spec, obj, anchor, 5);
        const auto b = make_trigger_variants(spec, obj, anchor, 5);
        REQUIRE(a.size() == 4);
        CHECK(a == b);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = i + 1; j < a.size(); ++j) CHECK_FALSE(a[i] == a[j]);
        CHECK_FALSE(make_trigger_variants(spec, obj, anchor, 6) == a);
    }
}
