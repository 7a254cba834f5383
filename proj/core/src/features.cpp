#include "morphkit/features.hpp"

#include <algorithm>
#include <cmath>

#include "morphkit/error.hpp"

namespace morphkit {

void FeatureParams::validate() const {
    if (window < 1 || grid < 1 || window % grid != 0) throw ConfigError("detector.window: must be a multiple of detector.grid");
    if (gray_weight < 0.0 || hist_weight < 0.0 || gray_weight + hist_weight <= 0.0)
        throw ConfigError("detector.gray_weight/hist_weight: must be nonnegative and not both zero");
    if (!(contrast_floor > 0.0)) throw ConfigError("detector.contrast_floor: must be > 0");
}

int hist_bin(float r, float g, float b) noexcept {
    return (r >= 0.5f ? 4 : 0) + (g >= 0.5f ? 2 : 0) + (b >= 0.5f ? 1 : 0);
}

BlockGrid::BlockGrid(const ImageBuffer& img, int cell) : cols_(img.width() / cell), rows_(img.height() / cell), cell_(cell) {
    if (cell < 1) throw ArgumentError("cell size must be >= 1");
    if (img.channels() != 3) throw ArgumentError("features expect RGB images");
    cells_.resize(static_cast<std::size_t>(cols_ * rows_));
    for (int by = 0; by < rows_; ++by)
        for (int bx = 0; bx < cols_; ++bx) {
            Cell& c = cells_[static_cast<std::size_t>(by * cols_ + bx)];
            for (int y = by * cell; y < (by + 1) * cell; ++y)
                for (int x = bx * cell; x < (bx + 1) * cell; ++x) {
                    const float r = img.at(x, y, 0), g = img.at(x, y, 1), b = img.at(x, y, 2);
                    c.luma += 0.299 * r + 0.587 * g + 0.114 * b;
                    ++c.hist[static_cast<std::size_t>(hist_bin(r, g, b))];
                }
            c.luma /= static_cast<double>(cell * cell);
        }
}

FeatureVector BlockGrid::window_feature(int bx, int by, const FeatureParams& params) const {
    const int n = params.grid;
    if (bx < 0 || by < 0 || bx + n > cols_ || by + n > rows_) throw BoundsError("feature window outside block grid");
    FeatureVector f(static_cast<std::size_t>(params.dims()), 0.0);
    std::array<double, kHistBins> hist{};
    double mean = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const Cell& c = at(bx + i, by + j);
            f[static_cast<std::size_t>(j * n + i)] = c.luma;
            mean += c.luma;
            for (int k = 0; k < kHistBins; ++k) hist[static_cast<std::size_t>(k)] += c.hist[static_cast<std::size_t>(k)];
        }
    mean /= n * n;
    double norm = 0.0;
    for (int i = 0; i < n * n; ++i) {
        f[static_cast<std::size_t>(i)] -= mean;
        norm += f[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)];
    }
    const double gray_scale = params.gray_weight / std::max(std::sqrt(norm), params.contrast_floor);
    for (int i = 0; i < n * n; ++i) f[static_cast<std::size_t>(i)] *= gray_scale;

    double total = 0.0;
    for (double h : hist) total += h;
    for (int k = 0; k < kHistBins; ++k)
        f[static_cast<std::size_t>(n * n + k)] =
            total > 0.0 ? params.hist_weight * std::sqrt(hist[static_cast<std::size_t>(k)] / total) : 0.0;
    l2_normalize(f);
    return f;
}

FeatureVector crop_feature(const ImageBuffer& crop, const FeatureParams& params) {
    if (crop.empty()) throw ArgumentError("empty crop");
    if (crop.width() == params.window && crop.height() == params.window)
        return BlockGrid(crop, params.cell()).window_feature(0, 0, params);
    const ImageBuffer sized = resize(crop, params.window, params.window, Interpolation::bilinear);
    return BlockGrid(sized, params.cell()).window_feature(0, 0, params);
}

double l2_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double acc = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

void l2_normalize(FeatureVector& v) noexcept {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm <= 0.0) return;
    for (double& x : v) x /= norm;
}

namespace {

int cell_of(int p, int extent, int grid) { return std::min(grid - 1, static_cast<int>((p + 0.5) * grid / extent)); }

constexpr std::array<double, 3> kLumaWeights = {0.299, 0.587, 0.114};

}  // namespace

FeatureExtractor linear_luma_features(int grid) {
    if (grid < 1) throw ArgumentError("grid must be >= 1");
    FeatureExtractor fx;
    fx.features = [grid](const ImageBuffer& img) {
        FeatureVector f(static_cast<std::size_t>(grid * grid), 0.0);
        std::vector<int> count(f.size(), 0);
        for (int y = 0; y < img.height(); ++y) {
            const int cy = cell_of(y, img.height(), grid);
            for (int x = 0; x < img.width(); ++x) {
                const auto k = static_cast<std::size_t>(cy * grid + cell_of(x, img.width(), grid));
                f[k] += luma(img, x, y);
                ++count[k];
            }
        }
        for (std::size_t k = 0; k < f.size(); ++k)
            if (count[k] > 0) f[k] /= count[k];
        return f;
    };
    fx.vjp = [grid](const ImageBuffer& img, std::span<const double> v) {
        std::vector<int> count(static_cast<std::size_t>(grid * grid), 0);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                ++count[static_cast<std::size_t>(cell_of(y, img.height(), grid) * grid + cell_of(x, img.width(), grid))];
        std::vector<float> g(img.size(), 0.0f);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const auto k =
                    static_cast<std::size_t>(cell_of(y, img.height(), grid) * grid + cell_of(x, img.width(), grid));
                const double w = v[k] / count[k];
                for (int c = 0; c < img.channels(); ++c)
                    g[img.index(x, y, c)] =
                        static_cast<float>(w * (img.channels() >= 3 ? kLumaWeights[static_cast<std::size_t>(c)] : 1.0));
            }
        return g;
    };
    return fx;
}

FeatureExtractor window_features(const FeatureParams& params) {
    params.validate();
    FeatureExtractor fx;
    fx.features = [params](const ImageBuffer& img) { return crop_feature(img, params); };
    return fx;
}

std::vector<float> feature_vjp(const FeatureExtractor& f, const ImageBuffer& x, std::span<const double> v) {
    if (f.vjp) return f.vjp(x, v);
    constexpr float h = 1e-3f;
    std::vector<float> g(x.size(), 0.0f);
    ImageBuffer probe = x;
    auto px = probe.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        const float orig = px[i];
        px[i] = std::min(1.0f, orig + h);
        const float hi = px[i];
        const FeatureVector fp = f.features(probe);
        px[i] = std::max(0.0f, orig - h);
        const float lo = px[i];
        const FeatureVector fm = f.features(probe);
        px[i] = orig;
        if (hi == lo) continue;
        double dot = 0.0;
        for (std::size_t k = 0; k < v.size() && k < fp.size(); ++k) dot += v[k] * (fp[k] - fm[k]);
        g[i] = static_cast<float>(dot / (hi - lo));
    }
    return g;
}

}  // namespace morphkit
