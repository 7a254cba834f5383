#include <filesystem>
#include <random>

#include "doctest.h"
#include "morphkit/error.hpp"
#include "morphkit/imaging.hpp"
#include "oracles.hpp"

using namespace morphkit;

namespace {

ImageBuffer gradient(int w, int h) {
    ImageBuffer img(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            img.at(x, y, 0) = static_cast<float>(x) / static_cast<float>(w);
            img.at(x, y, 1) = static_cast<float>(y) / static_cast<float>(h);
            img.at(x, y, 2) = 0.25f;
        }
    return img;
}

}  // namespace

TEST_CASE("image buffer rejects bad data") {
    CHECK_THROWS_AS(ImageBuffer(2, 2, 3, std::vector<float>(11, 0.0f)), ArgumentError);
    std::vector<float> data(12, 0.5f);
    data[7] = 1.5f;
    CHECK_THROWS_AS(ImageBuffer(2, 2, 3, data), ValidationError);
    CHECK_THROWS_AS(ImageBuffer(-1, 2, 3), ArgumentError);
}

TEST_CASE("iou of two offset squares") {
    CHECK(iou({0, 0, 10, 10}, {5, 5, 15, 15}) == doctest::Approx(25.0 / 175.0).epsilon(1e-12));
    CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
    CHECK(iou({0, 0, 10, 10}, {10, 0, 20, 10}) == 0.0);
    CHECK(iou({0, 0, 0, 10}, {0, 0, 10, 10}) == 0.0);
}

TEST_CASE("iou matches pixel rasterization on fuzzed pairs") {
    std::mt19937 gen(7);
    std::uniform_int_distribution<int> pos(0, 160), ext(1, 80);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const int ax = pos(gen), ay = pos(gen), bx = pos(gen) / 2 + 20, by = pos(gen) / 2 + 20;
        const oracle::QBox qa{ax, ay, ax + ext(gen), ay + ext(gen)};
        const oracle::QBox qb{bx, by, bx + ext(gen), by + ext(gen)};
        const BBox a{qa.x1 / 4.0, qa.y1 / 4.0, qa.x2 / 4.0, qa.y2 / 4.0};
        const BBox b{qb.x1 / 4.0, qb.y1 / 4.0, qb.x2 / 4.0, qb.y2 / 4.0};
        CHECK(std::abs(iou(a, b) - oracle::raster_iou(qa, qb)) <= 1e-6);
        CHECK(iou(a, b) == iou(b, a));
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("nearest upscale of a checkerboard doubles each cell") {
    ImageBuffer board(4, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) board.at(x, y, 0) = static_cast<float>((x + y) % 2);
    const ImageBuffer big = resize(board, 8, 8, Interpolation::nearest);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) CHECK(big.at(x, y, 0) == board.at(x / 2, y / 2, 0));
}

TEST_CASE("bilinear resize keeps constants and identity sizes") {
    const ImageBuffer flat(13, 7, 3, 0.37f);
    const ImageBuffer up = resize(flat, 40, 21);
    const ImageBuffer down = resize(flat, 5, 3);
    for (float v : up.pixels()) CHECK(v == 0.37f);
    for (float v : down.pixels()) CHECK(v == 0.37f);
    const ImageBuffer g = gradient(9, 6);
    CHECK(resize(g, 9, 6) == g);
}

TEST_CASE("crop of a gradient reads the source pixels") {
    const ImageBuffer g = gradient(100, 80);
    const ImageBuffer c = crop(g, BBox{10, 20, 30, 45});
    REQUIRE(c.width() == 20);
    REQUIRE(c.height() == 25);
    for (int y = 0; y < c.height(); ++y)
        for (int x = 0; x < c.width(); ++x)
            for (int ch = 0; ch < 3; ++ch) CHECK(c.at(x, y, ch) == g.at(x + 10, y + 20, ch));
    CHECK_THROWS_AS(crop(g, PixelRect{90, 0, 20, 10}), BoundsError);
}

TEST_CASE("stamp then crop returns the patch") {
    const ImageBuffer base = gradient(64, 48);
    ImageBuffer patch(10, 6, 3, 0.9f);
    patch.at(3, 2, 1) = 0.1f;
    const ImageBuffer out = stamp(base, patch, 20, 30);
    CHECK(crop(out, PixelRect{20, 30, 10, 6}) == patch);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 64; ++x)
            if (x < 20 || x >= 30 || y < 30 || y >= 36)
                for (int c = 0; c < 3; ++c) CHECK(out.at(x, y, c) == base.at(x, y, c));
    CHECK_THROWS_AS(stamp(base, patch, 60, 0), BoundsError);
}

TEST_CASE("rasterize rounds half away from zero") {
    CHECK(round_px(2.5) == 3);
    CHECK(round_px(-2.5) == -3);
    CHECK(rasterize(BBox{1.5, 2.4, 10.5, 7.6}) == PixelRect{2, 2, 9, 6});
}

TEST_CASE("png round trip is exact on the 8-bit grid") {
    ImageBuffer g = gradient(31, 17);
    quantize_8bit(g);
    const auto path = std::filesystem::temp_directory_path() / "morphkit_imaging_test.png";
    write_png(g, path.string());
    const ImageBuffer back = read_png(path.string());
    std::filesystem::remove(path);
    CHECK(back == g);
}
