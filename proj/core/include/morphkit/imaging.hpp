#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace morphkit {

// Interleaved, row-major image with real intensities in [0, 1].
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(int width, int height, int channels = 3, float fill = 0.0f);
    // Takes ownership of `data`; throws ArgumentError on a size mismatch and
    // ValidationError when an intensity falls outside [0, 1].
    ImageBuffer(int width, int height, int channels, std::vector<float> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t size() const noexcept { return data_.size(); }

    float& at(int x, int y, int c) noexcept { return data_[index(x, y, c)]; }
    float at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }

    std::span<float> pixels() noexcept { return data_; }
    std::span<const float> pixels() const noexcept { return data_; }

    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(channels_) +
               static_cast<std::size_t>(c);
    }

    void clamp() noexcept;

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

// Axis-aligned box in real pixel coordinates; x2/y2 are exclusive edges.
struct BBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const noexcept { return x2 - x1; }
    double height() const noexcept { return y2 - y1; }
    double area() const noexcept { return valid() ? width() * height() : 0.0; }
    double cx() const noexcept { return 0.5 * (x1 + x2); }
    double cy() const noexcept { return 0.5 * (y1 + y2); }
    bool valid() const noexcept { return x1 < x2 && y1 < y2; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

// Integer pixel rectangle [x, x + w) x [y, y + h).
struct PixelRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool empty() const noexcept { return w <= 0 || h <= 0; }
    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

enum class Interpolation { nearest, bilinear };

// Half-away-from-zero rounding used for every box rasterization.
int round_px(double v) noexcept;
PixelRect rasterize(const BBox& box) noexcept;
BBox to_bbox(const PixelRect& r) noexcept;
bool rect_within(const PixelRect& r, int width, int height) noexcept;
bool rects_intersect(const PixelRect& a, const PixelRect& b) noexcept;
BBox clamp_box(const BBox& box, int width, int height) noexcept;

ImageBuffer crop(const ImageBuffer& img, const BBox& box);
ImageBuffer crop(const ImageBuffer& img, const PixelRect& rect);
ImageBuffer resize(const ImageBuffer& img, int width, int height, Interpolation method = Interpolation::bilinear);

// Bilinear sample with half-pixel centres and edge clamping; shared by every
// resampling path so identical coordinates give identical values.
float sample_bilinear(const ImageBuffer& img, double sx, double sy, int c) noexcept;

namespace detail {

// Source coordinate of destination index d under a half-pixel-centre mapping.
inline double source_coord(int d, double scale) noexcept { return (static_cast<double>(d) + 0.5) * scale - 0.5; }

inline float lerp(float a, float b, float t) noexcept { return a + (b - a) * t; }

// Bilinear interpolation over any pixel source fetch(x, y) of size sw x sh.
template <class Fetch>
float bilinear_at(const Fetch& fetch, int sw, int sh, double sx, double sy) noexcept {
    if (sx < 0.0) sx = 0.0;
    if (sy < 0.0) sy = 0.0;
    if (sx > sw - 1) sx = sw - 1;
    if (sy > sh - 1) sy = sh - 1;
    const int x0 = static_cast<int>(sx);
    const int y0 = static_cast<int>(sy);
    const int x1 = x0 + 1 < sw ? x0 + 1 : x0;
    const int y1 = y0 + 1 < sh ? y0 + 1 : y0;
    const auto tx = static_cast<float>(sx - x0);
    const auto ty = static_cast<float>(sy - y0);
    const float top = lerp(fetch(x0, y0), fetch(x1, y0), tx);
    const float bottom = lerp(fetch(x0, y1), fetch(x1, y1), tx);
    return lerp(top, bottom, ty);
}

}  // namespace detail

ImageBuffer stamp(const ImageBuffer& base, const ImageBuffer& patch, int x, int y);
// In-place variant used by compositing code.
void stamp_into(ImageBuffer& base, const ImageBuffer& patch, int x, int y);
// Alpha-composites patch over base: opacity * patch + (1 - opacity) * base.
void blend_into(ImageBuffer& base, const ImageBuffer& patch, int x, int y, float opacity);

double iou(const BBox& a, const BBox& b) noexcept;
double intersection_area(const BBox& a, const BBox& b) noexcept;

// Luma (BT.601) of a pixel; single-channel images return the channel value.
float luma(const ImageBuffer& img, int x, int y) noexcept;

// 8-bit RGB PNG codec. Intensities are quantized to 1/255 on write.
ImageBuffer read_png(const std::string& path);
void write_png(const ImageBuffer& img, const std::string& path);
// Snaps every intensity to the nearest multiple of 1/255.
void quantize_8bit(ImageBuffer& img) noexcept;

}  // namespace morphkit
