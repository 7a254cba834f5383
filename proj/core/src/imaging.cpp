#include "morphkit/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <png.h>

#include "morphkit/error.hpp"

namespace morphkit {

ImageBuffer::ImageBuffer(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels < 1) throw ArgumentError("invalid image dimensions");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * static_cast<std::size_t>(channels),
                 std::clamp(fill, 0.0f, 1.0f));
}

ImageBuffer::ImageBuffer(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (width < 0 || height < 0 || channels < 1) throw ArgumentError("invalid image dimensions");
    const auto expected =
        static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * static_cast<std::size_t>(channels);
    if (data_.size() != expected)
        throw ArgumentError("image data length " + std::to_string(data_.size()) + " != " + std::to_string(expected));
    for (float v : data_) {
        if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("image intensity outside [0,1]");
    }
}

void ImageBuffer::clamp() noexcept {
    for (float& v : data_) v = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
}

int round_px(double v) noexcept { return static_cast<int>(std::round(v)); }

PixelRect rasterize(const BBox& box) noexcept {
    const int x1 = round_px(box.x1);
    const int y1 = round_px(box.y1);
    return {x1, y1, round_px(box.x2) - x1, round_px(box.y2) - y1};
}

BBox to_bbox(const PixelRect& r) noexcept {
    return {static_cast<double>(r.x), static_cast<double>(r.y), static_cast<double>(r.x + r.w),
            static_cast<double>(r.y + r.h)};
}

bool rect_within(const PixelRect& r, int width, int height) noexcept {
    return !r.empty() && r.x >= 0 && r.y >= 0 && r.x + r.w <= width && r.y + r.h <= height;
}

bool rects_intersect(const PixelRect& a, const PixelRect& b) noexcept {
    if (a.empty() || b.empty()) return false;
    return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

BBox clamp_box(const BBox& box, int width, int height) noexcept {
    return {std::clamp(box.x1, 0.0, static_cast<double>(width)), std::clamp(box.y1, 0.0, static_cast<double>(height)),
            std::clamp(box.x2, 0.0, static_cast<double>(width)), std::clamp(box.y2, 0.0, static_cast<double>(height))};
}

ImageBuffer crop(const ImageBuffer& img, const PixelRect& r) {
    if (!rect_within(r, img.width(), img.height())) {
        throw BoundsError("crop rectangle (" + std::to_string(r.x) + "," + std::to_string(r.y) + "," +
                          std::to_string(r.w) + "x" + std::to_string(r.h) + ") outside " +
                          std::to_string(img.width()) + "x" + std::to_string(img.height()) + " image");
    }
    ImageBuffer out(r.w, r.h, img.channels());
    const auto row = static_cast<std::size_t>(r.w) * static_cast<std::size_t>(img.channels());
    auto src = img.pixels();
    auto dst = out.pixels();
    for (int y = 0; y < r.h; ++y) {
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(img.index(r.x, r.y + y, 0)), row,
                    dst.begin() + static_cast<std::ptrdiff_t>(out.index(0, y, 0)));
    }
    return out;
}

ImageBuffer crop(const ImageBuffer& img, const BBox& box) { return crop(img, rasterize(box)); }

float sample_bilinear(const ImageBuffer& img, double sx, double sy, int c) noexcept {
    return detail::bilinear_at([&](int x, int y) { return img.at(x, y, c); }, img.width(), img.height(), sx, sy);
}

ImageBuffer resize(const ImageBuffer& img, int width, int height, Interpolation method) {
    if (width < 1 || height < 1) throw ArgumentError("resize target dimensions must be >= 1");
    if (img.empty()) throw ArgumentError("cannot resize an empty image");
    ImageBuffer out(width, height, img.channels());
    const double scale_x = static_cast<double>(img.width()) / width;
    const double scale_y = static_cast<double>(img.height()) / height;
    const int channels = img.channels();

    if (method == Interpolation::nearest) {
        for (int y = 0; y < height; ++y) {
            const int sy = std::min(img.height() - 1, static_cast<int>(std::floor((y + 0.5) * scale_y)));
            for (int x = 0; x < width; ++x) {
                const int sx = std::min(img.width() - 1, static_cast<int>(std::floor((x + 0.5) * scale_x)));
                for (int c = 0; c < channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
            }
        }
        return out;
    }

    for (int y = 0; y < height; ++y) {
        const double sy = detail::source_coord(y, scale_y);
        for (int x = 0; x < width; ++x) {
            const double sx = detail::source_coord(x, scale_x);
            for (int c = 0; c < channels; ++c) out.at(x, y, c) = sample_bilinear(img, sx, sy, c);
        }
    }
    out.clamp();
    return out;
}

namespace {

void check_footprint(const ImageBuffer& base, const ImageBuffer& patch, int x, int y) {
    if (patch.channels() != base.channels()) throw ArgumentError("patch/base channel mismatch");
    const PixelRect footprint{x, y, patch.width(), patch.height()};
    if (!rect_within(footprint, base.width(), base.height())) {
        throw BoundsError("stamp footprint at (" + std::to_string(x) + "," + std::to_string(y) + ") size " +
                          std::to_string(patch.width()) + "x" + std::to_string(patch.height()) +
                          " exceeds base bounds");
    }
}

}  // namespace

void stamp_into(ImageBuffer& base, const ImageBuffer& patch, int x, int y) {
    check_footprint(base, patch, x, y);
    const auto row = static_cast<std::size_t>(patch.width()) * static_cast<std::size_t>(patch.channels());
    auto src = patch.pixels();
    auto dst = base.pixels();
    for (int py = 0; py < patch.height(); ++py) {
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(patch.index(0, py, 0)), row,
                    dst.begin() + static_cast<std::ptrdiff_t>(base.index(x, y + py, 0)));
    }
}

ImageBuffer stamp(const ImageBuffer& base, const ImageBuffer& patch, int x, int y) {
    ImageBuffer out = base;
    stamp_into(out, patch, x, y);
    return out;
}

void blend_into(ImageBuffer& base, const ImageBuffer& patch, int x, int y, float opacity) {
    check_footprint(base, patch, x, y);
    opacity = std::clamp(opacity, 0.0f, 1.0f);
    if (opacity == 1.0f) {
        stamp_into(base, patch, x, y);
        return;
    }
    for (int py = 0; py < patch.height(); ++py)
        for (int px = 0; px < patch.width(); ++px)
            for (int c = 0; c < patch.channels(); ++c) {
                float& dst = base.at(x + px, y + py, c);
                dst = std::clamp(opacity * patch.at(px, py, c) + (1.0f - opacity) * dst, 0.0f, 1.0f);
            }
}

double intersection_area(const BBox& a, const BBox& b) noexcept {
    const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

double iou(const BBox& a, const BBox& b) noexcept {
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

float luma(const ImageBuffer& img, int x, int y) noexcept {
    if (img.channels() < 3) return img.at(x, y, 0);
    return 0.299f * img.at(x, y, 0) + 0.587f * img.at(x, y, 1) + 0.114f * img.at(x, y, 2);
}

void quantize_8bit(ImageBuffer& img) noexcept {
    for (float& v : img.pixels()) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
}

ImageBuffer read_png(const std::string& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("cannot read PNG '" + path + "': " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("cannot decode PNG '" + path + "': " + image.message);
    }
    std::vector<float> data(buffer.size());
    std::transform(buffer.begin(), buffer.end(), data.begin(),
                   [](png_byte b) { return static_cast<float>(b) / 255.0f; });
    return ImageBuffer(static_cast<int>(image.width), static_cast<int>(image.height), 3, std::move(data));
}

void write_png(const ImageBuffer& img, const std::string& path) {
    if (img.channels() != 3) throw ArgumentError("PNG writer expects 3-channel RGB");
    std::vector<png_byte> buffer(img.size());
    auto px = img.pixels();
    for (std::size_t i = 0; i < buffer.size(); ++i)
        buffer[i] = static_cast<png_byte>(std::lround(std::clamp(px[i], 0.0f, 1.0f) * 255.0f));
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr))
        throw IoError("cannot write PNG '" + path + "': " + image.message);
}

}  // namespace morphkit
