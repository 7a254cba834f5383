#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "morphkit/imaging.hpp"

namespace morphkit {

using FeatureVector = std::vector<double>;

inline constexpr int kHistBins = 8;

// Window descriptor: zero-mean luma thumbnail (grid x grid cells) next to a
// square-rooted 8-bin colour histogram (one bit per RGB channel, threshold
// 0.5). Each block is weighted, then the whole vector is l2-normalized.
struct FeatureParams {
    int window = 32;
    int grid = 8;
    double gray_weight = 1.0;
    double hist_weight = 1.0;
    // Lower bound on the thumbnail norm before normalization, so flat
    // texture is not inflated to unit contrast.
    double contrast_floor = 1.0;

    int cell() const noexcept { return window / grid; }
    int dims() const noexcept { return grid * grid + kHistBins; }
    void validate() const;
    friend bool operator==(const FeatureParams&, const FeatureParams&) = default;
};

int hist_bin(float r, float g, float b) noexcept;

// Per-cell sums over a tiling of the image into cell x cell blocks; window
// descriptors are assembled from these, so a window crop and the same window
// inside a larger image produce bit-identical features.
class BlockGrid {
public:
    BlockGrid(const ImageBuffer& img, int cell);

    int cols() const noexcept { return cols_; }
    int rows() const noexcept { return rows_; }
    int cell() const noexcept { return cell_; }

    // Descriptor of the window whose top-left cell is (bx, by).
    FeatureVector window_feature(int bx, int by, const FeatureParams& params) const;

private:
    struct Cell {
        double luma = 0.0;
        std::array<int, kHistBins> hist{};
    };
    const Cell& at(int bx, int by) const noexcept { return cells_[static_cast<std::size_t>(by * cols_ + bx)]; }

    int cols_ = 0;
    int rows_ = 0;
    int cell_ = 1;
    std::vector<Cell> cells_;
};

// Descriptor of an arbitrary crop, resized (bilinear) to the window first.
FeatureVector crop_feature(const ImageBuffer& crop, const FeatureParams& params);

double l2_distance(std::span<const double> a, std::span<const double> b) noexcept;
void l2_normalize(FeatureVector& v) noexcept;

// A feature map with an optional vector-Jacobian product. Without `vjp`,
// gradients fall back to central finite differences.
struct FeatureExtractor {
    std::function<FeatureVector(const ImageBuffer&)> features;
    // Returns d<v, f(x)>/dx laid out like x's pixel array.
    std::function<std::vector<float>(const ImageBuffer&, std::span<const double>)> vjp;
};

// Linear map: mean luma over a grid x grid partition of the image (cells
// assigned by pixel centre). Exact gradients.
FeatureExtractor linear_luma_features(int grid = 8);

// The detector descriptor; gradients by finite differences.
FeatureExtractor window_features(const FeatureParams& params);

std::vector<float> feature_vjp(const FeatureExtractor& f, const ImageBuffer& x, std::span<const double> v);

}  // namespace morphkit
