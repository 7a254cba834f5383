#include "morphkit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "morphkit/error.hpp"

namespace morphkit {

namespace {

struct Limits {
    double lo;
    double hi;
    double identity;
};

constexpr std::array<Limits, kTransformOrder.size()> kLimits = {{
    {-60.0, 60.0, 0.0},    // horizontal_skew
    {-60.0, 60.0, 0.0},    // vertical_skew
    {-180.0, 180.0, 0.0},  // rotation
    {0.05, 4.0, 1.0},      // scale
    {0.0, 1.0, 0.0},       // shadow
    {-1.0, 1.0, 0.0},      // brightness
    {0.0, 4.0, 1.0},       // contrast
    {0.0, 4.0, 1.0},       // sharpness
    {0.0, 0.5, 0.0},       // noise
    {1.0, 31.0, 1.0},      // motion_blur
}};

constexpr std::array<std::string_view, kTransformOrder.size()> kNames = {
    "horizontal_skew", "vertical_skew", "rotation", "scale",   "shadow",
    "brightness",      "contrast",      "sharpness", "noise", "motion_blur",
};

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

// Maps the image through a 2x2 linear map about its centre, keeping dims.
// Out-of-image source positions replicate the border.
AugmentResult warp_linear(const ImageBuffer& img, const BBox& box, double a, double b, double c, double d) {
    const double det = a * d - b * c;
    if (std::abs(det) < 1e-12) return {img, box};
    const double ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
    const double cx = img.width() / 2.0, cy = img.height() / 2.0;
    ImageBuffer out(img.width(), img.height(), img.channels());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double px = x + 0.5 - cx, py = y + 0.5 - cy;
            const double sx = ia * px + ib * py + cx - 0.5;
            const double sy = ic * px + id * py + cy - 0.5;
            for (int ch = 0; ch < img.channels(); ++ch) out.at(x, y, ch) = sample_bilinear(img, sx, sy, ch);
        }
    }
    out.clamp();

    double x1 = 1e300, y1 = 1e300, x2 = -1e300, y2 = -1e300;
    for (auto [px, py] : {std::pair{box.x1, box.y1}, std::pair{box.x2, box.y1}, std::pair{box.x1, box.y2},
                          std::pair{box.x2, box.y2}}) {
        const double qx = a * (px - cx) + b * (py - cy) + cx;
        const double qy = c * (px - cx) + d * (py - cy) + cy;
        x1 = std::min(x1, qx);
        y1 = std::min(y1, qy);
        x2 = std::max(x2, qx);
        y2 = std::max(y2, qy);
    }
    BBox mapped = clamp_box({x1, y1, x2, y2}, img.width(), img.height());
    if (!mapped.valid()) mapped = {0.0, 0.0, static_cast<double>(img.width()), static_cast<double>(img.height())};
    return {std::move(out), mapped};
}

ImageBuffer box_blur3(const ImageBuffer& img) {
    ImageBuffer out(img.width(), img.height(), img.channels());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) {
                float acc = 0.0f;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int sx = std::clamp(x + dx, 0, img.width() - 1);
                        const int sy = std::clamp(y + dy, 0, img.height() - 1);
                        acc += img.at(sx, sy, c);
                    }
                out.at(x, y, c) = acc / 9.0f;
            }
    return out;
}

float mean_luma(const ImageBuffer& img) {
    double acc = 0.0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) acc += luma(img, x, y);
    return static_cast<float>(acc / std::max(1, img.width() * img.height()));
}

}  // namespace

std::string_view transform_name(Transform t) noexcept { return kNames[static_cast<std::size_t>(t)]; }

Transform parse_transform(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == name) return kTransformOrder[i];
    throw ConfigError("unknown augmentation '" + std::string(name) + "'");
}

void AugmentParams::validate() const {
    if (!(p_aug >= 0.0 && p_aug <= 1.0)) throw ConfigError("augment.p_aug: must be in [0,1]");
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const auto& r = ranges[i];
        const auto& lim = kLimits[i];
        const std::string key = "augment." + std::string(kNames[i]);
        if (!(r.lo <= r.hi)) throw ConfigError(key + ": empty range (lo > hi)");
        if (r.lo < lim.lo || r.hi > lim.hi)
            throw ConfigError(key + ": range outside [" + std::to_string(lim.lo) + ", " + std::to_string(lim.hi) + "]");
    }
}

AugmentParams AugmentParams::widened(double factor) const {
    AugmentParams out = *this;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const auto& lim = kLimits[i];
        auto& r = out.ranges[i];
        r.lo = std::clamp(lim.identity + (r.lo - lim.identity) * factor, lim.lo, lim.hi);
        r.hi = std::clamp(lim.identity + (r.hi - lim.identity) * factor, lim.lo, lim.hi);
    }
    return out;
}

AugmentResult apply_transform(const ImageBuffer& img, const BBox& box, Transform t, double value, Rng& rng) {
    switch (t) {
        case Transform::horizontal_skew: return warp_linear(img, box, 1.0, std::tan(radians(value)), 0.0, 1.0);
        case Transform::vertical_skew: return warp_linear(img, box, 1.0, 0.0, std::tan(radians(value)), 1.0);
        case Transform::rotation: {
            const double r = radians(value);
            return warp_linear(img, box, std::cos(r), -std::sin(r), std::sin(r), std::cos(r));
        }
        case Transform::scale: {
            const int w = std::max(1, round_px(img.width() * value));
            const int h = std::max(1, round_px(img.height() * value));
            const double fx = static_cast<double>(w) / img.width(), fy = static_cast<double>(h) / img.height();
            BBox b = clamp_box({box.x1 * fx, box.y1 * fy, box.x2 * fx, box.y2 * fy}, w, h);
            if (!b.valid()) b = {0.0, 0.0, static_cast<double>(w), static_cast<double>(h)};
            return {resize(img, w, h, Interpolation::bilinear), b};
        }
        case Transform::shadow: {
            const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double qx = rng.uniform(0.0, img.width()), qy = rng.uniform(0.0, img.height());
            const double nx = std::cos(angle), ny = std::sin(angle);
            const auto keep = static_cast<float>(1.0 - value);
            ImageBuffer out = img;
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x)
                    if ((x + 0.5 - qx) * nx + (y + 0.5 - qy) * ny > 0.0)
                        for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) *= keep;
            out.clamp();
            return {std::move(out), box};
        }
        case Transform::brightness: {
            ImageBuffer out = img;
            const auto gain = static_cast<float>(1.0 + value);
            for (float& v : out.pixels()) v *= gain;
            out.clamp();
            return {std::move(out), box};
        }
        case Transform::contrast: {
            ImageBuffer out = img;
            const float m = mean_luma(img);
            const auto f = static_cast<float>(value);
            for (float& v : out.pixels()) v = m + (v - m) * f;
            out.clamp();
            return {std::move(out), box};
        }
        case Transform::sharpness: {
            const ImageBuffer smooth = box_blur3(img);
            ImageBuffer out = img;
            const auto f = static_cast<float>(value);
            auto src = img.pixels();
            auto sm = smooth.pixels();
            auto dst = out.pixels();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = sm[i] + f * (src[i] - sm[i]);
            out.clamp();
            return {std::move(out), box};
        }
        case Transform::noise: {
            ImageBuffer out = img;
            for (float& v : out.pixels()) v += static_cast<float>(rng.normal(0.0, value));
            out.clamp();
            return {std::move(out), box};
        }
        case Transform::motion_blur: {
            int length = std::max(1, round_px(value));
            if (length % 2 == 0) ++length;
            if (length == 1) return {img, box};
            const double angle = rng.uniform(0.0, std::numbers::pi);
            const double dx = std::cos(angle), dy = std::sin(angle);
            const int half = length / 2;
            ImageBuffer out(img.width(), img.height(), img.channels());
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x)
                    for (int c = 0; c < img.channels(); ++c) {
                        float acc = 0.0f;
                        for (int k = -half; k <= half; ++k) acc += sample_bilinear(img, x + k * dx, y + k * dy, c);
                        out.at(x, y, c) = acc / static_cast<float>(length);
                    }
            out.clamp();
            return {std::move(out), box};
        }
    }
    return {img, box};
}

AugmentResult augment_with_box(const ImageBuffer& obj, const BBox& box, const AugmentParams& params,
                               std::uint64_t seed) {
    params.validate();
    AugmentResult cur{obj, box};
    if (params.p_aug <= 0.0) return cur;
    Rng fire(derive_seed(seed, "fire"));
    for (std::size_t i = 0; i < kTransformOrder.size(); ++i) {
        const bool fires = fire.bernoulli(params.p_aug);
        const auto& r = params.ranges[i];
        if (!fires || !r.enabled) continue;
        Rng local(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const double value = local.uniform(r.lo, r.hi);
        cur = apply_transform(cur.image, cur.box, kTransformOrder[i], value, local);
    }
    return cur;
}

ImageBuffer augment(const ImageBuffer& obj, const AugmentParams& params, std::uint64_t seed) {
    const BBox full{0.0, 0.0, static_cast<double>(obj.width()), static_cast<double>(obj.height())};
    return augment_with_box(obj, full, params, seed).image;
}

AugmentResult poison_object_with_box(const ImageBuffer& obj, const BBox& obj_box, const TriggerSpec& spec,
                                     const AugmentParams& params, std::uint64_t seed, std::optional<int> variant) {
    if (spec.placement == Placement::outside)
        throw ArgumentError("out-of-box triggers are stamped at scene level, not per object");
    const auto anchors = placement_anchor(obj_box, spec.placement, spec.size_r, spec.geometry);
    ImageBuffer stamped = obj;
    const std::uint64_t stamp_seed = derive_seed(seed, "stamp");
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        stamped = variant ? make_trigger_variant(spec, stamped, anchors[k], derive_seed(stamp_seed, k), *variant)
                          : physicalize_stamp(stamped, spec, anchors[k]);
    }
    return augment_with_box(stamped, obj_box, params, derive_seed(seed, "augment"));
}

ImageBuffer poison_object(const ImageBuffer& obj, const BBox& obj_box, const TriggerSpec& spec,
                          const AugmentParams& params, std::uint64_t seed, std::optional<int> variant) {
    return poison_object_with_box(obj, obj_box, spec, params, seed, variant).image;
}

}  // namespace morphkit
