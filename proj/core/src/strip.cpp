#include "morphkit/strip.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "morphkit/error.hpp"
#include "morphkit/parallel.hpp"
#include "morphkit/plot.hpp"
#include "morphkit/rng.hpp"

namespace morphkit {

EntropyAggregation parse_aggregation(std::string_view name) {
    if (name == "mean") return EntropyAggregation::mean;
    if (name == "max") return EntropyAggregation::max;
    throw ConfigError("unknown entropy aggregation '" + std::string(name) + "' (mean|max)");
}

std::string_view aggregation_name(EntropyAggregation a) noexcept { return a == EntropyAggregation::mean ? "mean" : "max"; }

void StripConfig::validate() const {
    if (n_overlays < 1) throw ConfigError("strip.n_overlays: must be >= 1");
    if (!(frr_target > 0.0 && frr_target < 0.5)) throw ConfigError("strip.frr_target: must be in (0, 0.5)");
    if (!(blend > 0.0 && blend < 1.0)) throw ConfigError("strip.blend: must be in (0, 1)");
}

ImageBuffer superimpose(const ImageBuffer& x, const ImageBuffer& benign, double blend) {
    if (x.channels() != benign.channels()) throw ArgumentError("superimpose: channel counts differ");
    const ImageBuffer& b = (benign.width() == x.width() && benign.height() == x.height())
                               ? benign
                               : resize(benign, x.width(), x.height(), Interpolation::bilinear);
    ImageBuffer out = x;
    const auto w = static_cast<float>(blend);
    auto dst = out.pixels();
    const auto src = b.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = w * dst[i] + (1.0f - w) * src[i];
    out.clamp();
    return out;
}

double shannon_entropy(std::span<const double> p) noexcept {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

namespace {

std::vector<std::size_t> pick_overlays(std::size_t pool, int n, std::uint64_t seed) {
    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(pool - 1)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(n));
    return idx;
}

}  // namespace

double strip_score(const ToyDetector& det, const ImageBuffer& x, const BBox& target_box,
                   std::span<const ImageBuffer> benign_set, const StripConfig& cfg, std::uint64_t seed,
                   std::size_t workers) {
    cfg.validate();
    if (benign_set.size() < static_cast<std::size_t>(cfg.n_overlays))
        throw ArgumentError("strip: benign set smaller than n_overlays");
    const PixelRect rect = rasterize(clamp_box(target_box, x.width(), x.height()));
    if (rect.empty() || !target_box.valid()) throw EvaluationError("strip: degenerate target box");
    const ImageBuffer x_crop = crop(x, rect);
    const auto picks = pick_overlays(benign_set.size(), cfg.n_overlays, seed);
    std::vector<double> entropies(picks.size());
    parallel_for(picks.size(), workers, [&](std::size_t i) {
        const ImageBuffer& b = benign_set[picks[i]];
        // Only the crop is scored, so only the crop is blended.
        const ImageBuffer b_crop = (b.width() == x.width() && b.height() == x.height())
                                       ? crop(b, rect)
                                       : crop(resize(b, x.width(), x.height(), Interpolation::bilinear), rect);
        entropies[i] = shannon_entropy(class_scores(det, superimpose(x_crop, b_crop, cfg.blend)));
    });
    if (cfg.aggregation == EntropyAggregation::max) return *std::max_element(entropies.begin(), entropies.end());
    double sum = 0.0;
    for (double e : entropies) sum += e;
    return sum / static_cast<double>(entropies.size());
}

std::vector<double> strip_scores(const ToyDetector& det, std::span<const StripFrame> frames,
                                 std::span<const ImageBuffer> benign_set, const StripConfig& cfg, std::uint64_t seed,
                                 std::size_t workers) {
    std::vector<double> out(frames.size());
    parallel_for(frames.size(), workers, [&](std::size_t i) {
        out[i] = strip_score(det, *frames[i].image, frames[i].box, benign_set, cfg,
                             derive_seed(seed, static_cast<std::uint64_t>(i)));
    });
    return out;
}

double calibrate_threshold(std::span<const double> benign_entropies, double frr_target) {
    if (benign_entropies.empty()) throw CalibrationError("no benign entropies to calibrate on");
    if (!(frr_target > 0.0 && frr_target < 1.0)) throw CalibrationError("frr_target must be in (0, 1)");
    std::vector<double> sorted(benign_entropies.begin(), benign_entropies.end());
    std::sort(sorted.begin(), sorted.end());
    // Flagging is strict, so at most k of the n values fall below sorted[k].
    const auto k = static_cast<std::size_t>(std::floor(frr_target * static_cast<double>(sorted.size()) + 1e-9));
    return sorted[std::min(k, sorted.size() - 1)];
}

double flag_rate(std::span<const double> entropies, double threshold) noexcept {
    if (entropies.empty()) return 0.0;
    const auto n = std::count_if(entropies.begin(), entropies.end(), [&](double e) { return strip_flags(e, threshold); });
    return static_cast<double>(n) / static_cast<double>(entropies.size());
}

RocCurve roc_auc(std::span<const double> benign, std::span<const double> trojan) {
    if (benign.empty() || trojan.empty()) throw ArgumentError("roc_auc: both entropy lists must be nonempty");
    std::vector<double> b(benign.begin(), benign.end()), t(trojan.begin(), trojan.end());
    std::sort(b.begin(), b.end());
    std::sort(t.begin(), t.end());
    std::vector<double> cuts;
    cuts.reserve(b.size() + t.size());
    std::merge(b.begin(), b.end(), t.begin(), t.end(), std::back_inserter(cuts));
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    RocCurve roc;
    const auto nb = static_cast<double>(b.size()), nt = static_cast<double>(t.size());
    // Each cut flags everything strictly below it; a final cut above the
    // maximum flags everything.
    auto point = [&](auto below_b, auto below_t) {
        return std::pair{static_cast<double>(below_b) / nb, static_cast<double>(below_t) / nt};
    };
    for (double c : cuts)
        roc.points.push_back(point(std::lower_bound(b.begin(), b.end(), c) - b.begin(),
                                   std::lower_bound(t.begin(), t.end(), c) - t.begin()));
    roc.points.push_back({1.0, 1.0});
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
        const auto [x0, y0] = roc.points[i - 1];
        const auto [x1, y1] = roc.points[i];
        roc.auc += (x1 - x0) * 0.5 * (y0 + y1);
    }
    return roc;
}

std::string roc_csv(const RocCurve& roc) {
    std::string out = "fpr,tpr\n";
    for (const auto& [x, y] : roc.points) out += format_fixed6(x) + "," + format_fixed6(y) + "\n";
    return out;
}

std::string roc_svg(const RocCurve& roc) {
    PlotSeries s{"STRIP", {roc.points.begin(), roc.points.end()}, "#d62728"};
    PlotSeries chance{"chance", {{0.0, 0.0}, {1.0, 1.0}}, "#999999"};
    PlotSpec spec;
    spec.title = "STRIP ROC (AUC " + format_fixed6(roc.auc) + ")";
    spec.x_label = "false positive rate";
    spec.y_label = "true positive rate";
    spec.x_lo = spec.y_lo = 0.0;
    spec.x_hi = spec.y_hi = 1.0;
    return svg_line_chart(spec, {s, chance});
}

}  // namespace morphkit
