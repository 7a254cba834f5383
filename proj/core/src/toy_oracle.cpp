#include "morphkit/toy_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <set>
#include <sstream>

#include "morphkit/error.hpp"
#include "morphkit/parallel.hpp"
#include "morphkit/rng.hpp"

namespace morphkit {

namespace {

constexpr std::array<std::string_view, 8> kShapeNames = {"circle", "square", "triangle", "diamond",
                                                         "cross",  "ring",   "hexagon",  "bar"};

bool inside_shape(ShapeKind kind, double u, double v) {
    switch (kind) {
        case ShapeKind::circle: return u * u + v * v <= 1.0;
        case ShapeKind::square: return std::max(std::abs(u), std::abs(v)) <= 0.85;
        case ShapeKind::triangle: return v >= -0.9 && v <= 0.8 && std::abs(u) <= (v + 0.9) / 1.7;
        case ShapeKind::diamond: return std::abs(u) + std::abs(v) <= 1.0;
        case ShapeKind::cross:
            return (std::abs(u) <= 0.3 && std::abs(v) <= 0.95) || (std::abs(v) <= 0.3 && std::abs(u) <= 0.95);
        case ShapeKind::ring: {
            const double r2 = u * u + v * v;
            return r2 <= 1.0 && r2 >= 0.55 * 0.55;
        }
        case ShapeKind::hexagon: return std::max(std::abs(u) * 0.866 + std::abs(v) * 0.5, std::abs(v)) <= 0.9;
        case ShapeKind::bar: return std::abs(u) <= 0.95 && std::abs(v) <= 0.35;
    }
    return false;
}

}  // namespace

ShapeKind parse_shape(std::string_view name) {
    for (std::size_t i = 0; i < kShapeNames.size(); ++i)
        if (kShapeNames[i] == name) return static_cast<ShapeKind>(i);
    throw ConfigError("unknown shape '" + std::string(name) + "'");
}

std::string_view shape_name(ShapeKind kind) noexcept { return kShapeNames[static_cast<std::size_t>(kind)]; }

void SyntheticSceneSpec::validate() const {
    if (canvas < 16) throw ConfigError("oracle.canvas: must be >= 16");
    if (classes.size() < 2) throw ConfigError("oracle.classes: need at least 2 classes");
    for (std::size_t i = 0; i < classes.size(); ++i)
        for (std::size_t j = i + 1; j < classes.size(); ++j)
            if (classes[i].color == classes[j].color)
                throw ConfigError("oracle.classes: colours of '" + classes[i].name + "' and '" + classes[j].name +
                                  "' coincide");
    if (render_size < 8) throw ConfigError("oracle.render_size: must be >= 8");
    if (!(shape_fill > 0.0 && shape_fill <= 1.0)) throw ConfigError("oracle.shape_fill: must be in (0,1]");
    if (background_lattice < 1) throw ConfigError("oracle.background_lattice: must be >= 1");
    if (!(distance_ref_m > 0.0 && distance_ref_px > 0.0)) throw ConfigError("oracle.distance_ref_m/distance_ref_px: must be > 0");
}

SyntheticSceneSpec SyntheticSceneSpec::default_spec(int n_classes) {
    static const ShapeClass kPalette[] = {
        {"red_circle", ShapeKind::circle, {0.85f, 0.15f, 0.15f}},
        {"blue_square", ShapeKind::square, {0.15f, 0.25f, 0.85f}},
        {"green_triangle", ShapeKind::triangle, {0.15f, 0.70f, 0.20f}},
        {"white_diamond", ShapeKind::diamond, {0.92f, 0.92f, 0.92f}},
        {"orange_cross", ShapeKind::cross, {0.95f, 0.42f, 0.10f}},
        {"purple_ring", ShapeKind::ring, {0.62f, 0.20f, 0.75f}},
        {"cyan_hexagon", ShapeKind::hexagon, {0.10f, 0.75f, 0.80f}},
        {"black_bar", ShapeKind::bar, {0.08f, 0.08f, 0.10f}},
    };
    constexpr int kPaletteSize = static_cast<int>(std::size(kPalette));
    if (n_classes < 2 || n_classes > kPaletteSize)
        throw ConfigError("oracle.n_classes: the built-in palette supports 2.." + std::to_string(kPaletteSize) + " classes");
    SyntheticSceneSpec spec;
    spec.classes.assign(kPalette, kPalette + n_classes);
    return spec;
}

ImageBuffer render_background(const SyntheticSceneSpec& spec, int width, int height, std::uint64_t seed) {
    Rng rng(seed);
    const int lattice = spec.background_lattice;
    const int lw = width / lattice + 2, lh = height / lattice + 2;
    const double level = spec.background_level + rng.uniform(-0.05, 0.05);
    ImageBuffer grid(lw, lh, 3);
    for (int y = 0; y < lh; ++y)
        for (int x = 0; x < lw; ++x) {
            const double common = rng.uniform(-1.0, 1.0) * spec.background_amplitude;
            for (int c = 0; c < 3; ++c) {
                const double tint = rng.uniform(-0.3, 0.3) * spec.background_amplitude;
                grid.at(x, y, c) = static_cast<float>(std::clamp(level + common + tint, 0.0, 1.0));
            }
        }
    const double ox = rng.uniform(0.0, lattice), oy = rng.uniform(0.0, lattice);
    ImageBuffer out(width, height, 3);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = sample_bilinear(grid, (x + ox) / lattice, (y + oy) / lattice, c);
                out.at(x, y, c) = v + static_cast<float>(rng.normal(0.0, spec.background_grain));
            }
    out.clamp();
    return out;
}

ImageBuffer render_object(const SyntheticSceneSpec& spec, int class_id, std::uint64_t seed) {
    if (class_id < 0 || class_id >= spec.n_classes()) throw ArgumentError("class id outside synthetic spec");
    const ShapeClass& cls = spec.classes[static_cast<std::size_t>(class_id)];
    Rng rng(seed);
    const int n = spec.render_size;
    ImageBuffer img = render_background(spec, n, n, derive_seed(seed, "background"));
    std::array<float, 3> color{};
    for (int c = 0; c < 3; ++c)
        color[static_cast<std::size_t>(c)] = static_cast<float>(
            std::clamp(cls.color[static_cast<std::size_t>(c)] + rng.uniform(-spec.color_jitter, spec.color_jitter), 0.0, 1.0));
    const double angle = rng.uniform(-spec.rotation_jitter_deg, spec.rotation_jitter_deg) * std::numbers::pi / 180.0;
    const double ca = std::cos(angle), sa = std::sin(angle);
    constexpr int kSuper = 4;
    const double half = n / 2.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            int hits = 0;
            for (int sy = 0; sy < kSuper; ++sy)
                for (int sx = 0; sx < kSuper; ++sx) {
                    const double px = (x + (sx + 0.5) / kSuper - half) / (half * spec.shape_fill);
                    const double py = (y + (sy + 0.5) / kSuper - half) / (half * spec.shape_fill);
                    const double u = ca * px + sa * py, v = -sa * px + ca * py;
                    hits += inside_shape(cls.kind, u, v) ? 1 : 0;
                }
            const float a = static_cast<float>(hits) / (kSuper * kSuper);
            if (a <= 0.0f) continue;
            for (int c = 0; c < 3; ++c) {
                float& v = img.at(x, y, c);
                v = a * color[static_cast<std::size_t>(c)] + (1.0f - a) * v;
            }
        }
    img.clamp();
    return img;
}

std::vector<LibraryObject> render_library(const SyntheticSceneSpec& spec, std::uint64_t seed) {
    std::vector<LibraryObject> lib;
    lib.reserve(spec.classes.size());
    for (int c = 0; c < spec.n_classes(); ++c)
        lib.push_back({render_object(spec, c, derive_seed(seed, static_cast<std::uint64_t>(c))), c, false, true});
    return lib;
}

Dataset gen_synthetic_dataset(const SyntheticSceneSpec& spec, int n_scenes, const GridConfig& cfg,
                              std::uint64_t seed, std::string_view prefix, std::size_t workers) {
    spec.validate();
    cfg.validate();
    if (n_scenes < 1) throw ArgumentError("n_scenes must be >= 1");
    Dataset ds;
    for (const auto& c : spec.classes) ds.class_names.push_back(c.name);
    ds.scenes.resize(static_cast<std::size_t>(n_scenes));
    parallel_for(ds.scenes.size(), workers, [&](std::size_t i) {
        char id[32];
        std::snprintf(id, sizeof id, "%05zu", i);
        Scene base;
        base.scene_id = std::string(prefix) + id;
        const std::uint64_t scene_seed = derive_seed(seed, base.scene_id);
        base.image = render_background(spec, spec.canvas, spec.canvas, derive_seed(scene_seed, "background"));
        const auto library = render_library(spec, derive_seed(scene_seed, "library"));
        GridOutcome placed = grid_place_detailed(base, library, cfg, derive_seed(scene_seed, "grid"));
        for (std::size_t idx : placed.appended) {
            auto& a = placed.scene.annotations[idx];
            a.distance_m = spec.distance_ref_m * spec.distance_ref_px / std::max(a.box.width(), a.box.height());
        }
        ds.scenes[i] = std::move(placed.scene);
    });
    return ds;
}

// ---- detector ---------------------------------------------------------------

void ToyDetectorParams::validate() const {
    features.validate();
    if (!(beta > 0.0)) throw ConfigError("detector.beta: must be > 0");
    if (!(nms_iou > 0.0 && nms_iou <= 1.0)) throw ConfigError("detector.nms_iou: must be in (0,1]");
    if (!(score_floor >= 0.0 && score_floor <= 1.0)) throw ConfigError("detector.score_floor: must be in [0,1]");
    if (scales.empty()) throw ConfigError("detector.scales: need at least one scale");
    for (double s : scales)
        if (!(s > 0.0)) throw ConfigError("detector.scales: scales must be > 0");
    if (effective_stride() % features.cell() != 0)
        throw ConfigError("detector.stride: must be a multiple of window / grid");
    if (negatives_per_object < 1) throw ConfigError("detector.negatives_per_object: must be >= 1");
    if (!(negative_max_iou >= 0.0 && negative_max_iou < 1.0))
        throw ConfigError("detector.negative_max_iou: must be in [0,1)");
}

namespace {

struct SceneFeatures {
    std::vector<std::pair<int, FeatureVector>> positives;
    std::vector<FeatureVector> negatives;
};

SceneFeatures scene_features(const Scene& scene, const ToyDetectorParams& params) {
    SceneFeatures out;
    const int w = scene.image.width(), h = scene.image.height();
    for (const auto& a : scene.annotations) {
        PixelRect r = rasterize(clamp_box(a.box, w, h));
        if (r.empty()) continue;
        out.positives.emplace_back(a.class_id, crop_feature(crop(scene.image, r), params.features));
    }
    Rng rng(derive_seed(params.seed, scene.scene_id));
    const int window = params.features.window;
    const int max_side = std::min({2 * window, w, h});
    const int min_side = std::min(window / 2, max_side);
    if (max_side < 1) return out;
    const std::size_t wanted =
        static_cast<std::size_t>(params.negatives_per_object) * std::max<std::size_t>(1, scene.annotations.size());
    for (std::size_t n = 0; n < wanted; ++n) {
        for (int attempt = 0; attempt < 20; ++attempt) {
            const int side = static_cast<int>(rng.uniform_int(min_side, max_side));
            const PixelRect r{static_cast<int>(rng.uniform_int(0, w - side)), static_cast<int>(rng.uniform_int(0, h - side)),
                              side, side};
            const BBox b = to_bbox(r);
            const bool clear = std::all_of(scene.annotations.begin(), scene.annotations.end(), [&](const ObjectAnnotation& a) {
                return iou(a.box, b) < params.negative_max_iou;
            });
            if (!clear) continue;
            out.negatives.push_back(crop_feature(crop(scene.image, r), params.features));
            break;
        }
    }
    return out;
}

FeatureVector normalized_mean(const std::vector<const FeatureVector*>& vs, std::size_t dims) {
    FeatureVector m(dims, 0.0);
    for (const auto* v : vs)
        for (std::size_t i = 0; i < dims; ++i) m[i] += (*v)[i];
    for (double& x : m) x /= static_cast<double>(vs.size());
    l2_normalize(m);
    return m;
}

}  // namespace

ToyDetector train(const Dataset& ds, const ToyDetectorParams& params) {
    params.validate();
    if (ds.num_classes() < 1) throw TrainingError("dataset has no classes");
    // Accumulate in scene_id order so the centroids do not depend on the
    // order scenes appear in the dataset.
    std::vector<std::size_t> order(ds.scenes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ds.scenes[a].scene_id < ds.scenes[b].scene_id; });

    std::vector<SceneFeatures> per_scene(ds.scenes.size());
    for (std::size_t i = 0; i < order.size(); ++i) per_scene[i] = scene_features(ds.scenes[order[i]], params);

    const auto dims = static_cast<std::size_t>(params.features.dims());
    std::vector<std::vector<const FeatureVector*>> by_class(static_cast<std::size_t>(ds.num_classes()));
    std::vector<const FeatureVector*> negatives;
    for (const auto& sf : per_scene) {
        for (const auto& [cls, f] : sf.positives) {
            if (cls < 0 || cls >= ds.num_classes()) throw TrainingError("annotation class outside class map");
            by_class[static_cast<std::size_t>(cls)].push_back(&f);
        }
        for (const auto& f : sf.negatives) negatives.push_back(&f);
    }

    ToyDetector det;
    det.params = params;
    det.class_names = ds.class_names;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].empty())
            throw TrainingError("class '" + ds.class_names[c] + "' has no annotated crops");
        det.centroids.push_back(normalized_mean(by_class[c], dims));
    }
    if (negatives.empty()) throw TrainingError("no background crops could be sampled");
    det.background = normalized_mean(negatives, dims);
    return det;
}

std::vector<double> scores_from_feature(const ToyDetector& det, std::span<const double> feature) {
    std::vector<double> logits;
    logits.reserve(det.centroids.size() + 1);
    for (const auto& c : det.centroids) logits.push_back(-det.params.beta * l2_distance(feature, c));
    logits.push_back(-det.params.beta * l2_distance(feature, det.background));
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& l : logits) {
        l = std::exp(l - top);
        total += l;
    }
    for (double& l : logits) l /= total;
    return logits;
}

std::vector<double> class_scores(const ToyDetector& det, const ImageBuffer& crop_img) {
    return scores_from_feature(det, crop_feature(crop_img, det.params.features));
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
    std::vector<Detection> kept;
    for (const auto& d : dets) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                            [&](const Detection& k) { return iou(k.box, d.box) > iou_threshold; });
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

std::vector<Detection> detect(const ToyDetector& det, const ImageBuffer& img) {
    const auto& p = det.params;
    const int window = p.features.window;
    const int cell = p.features.cell();
    const int step = p.effective_stride() / cell;
    const int n_classes = det.num_classes();
    std::vector<Detection> candidates;
    for (double scale : p.scales) {
        const int sw = std::max(1, round_px(img.width() * scale));
        const int sh = std::max(1, round_px(img.height() * scale));
        if (sw < window || sh < window) continue;
        const ImageBuffer scaled =
            (sw == img.width() && sh == img.height()) ? img : resize(img, sw, sh, Interpolation::bilinear);
        const BlockGrid grid(scaled, cell);
        const double fx = static_cast<double>(sw) / img.width();
        const double fy = static_cast<double>(sh) / img.height();
        for (int by = 0; by + p.features.grid <= grid.rows(); by += step) {
            for (int bx = 0; bx + p.features.grid <= grid.cols(); bx += step) {
                const FeatureVector f = grid.window_feature(bx, by, p.features);
                const auto scores = scores_from_feature(det, f);
                const auto best = static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
                if (best >= n_classes || scores[static_cast<std::size_t>(best)] < p.score_floor) continue;
                const double x = bx * cell, y = by * cell;
                Detection d;
                d.box = clamp_box({x / fx, y / fy, (x + window) / fx, (y + window) / fy}, img.width(), img.height());
                d.class_id = best;
                d.confidence = scores[static_cast<std::size_t>(best)];
                candidates.push_back(d);
            }
        }
    }
    // Generation order (scale, row, column) breaks confidence ties.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
    return nms(std::move(candidates), p.nms_iou);
}

DetectionLog detect_dataset(const ToyDetector& det, const Dataset& ds, std::size_t workers) {
    DetectionLog log;
    log.frames.resize(ds.scenes.size());
    parallel_for(ds.scenes.size(), workers, [&](std::size_t i) {
        log.frames[i] = {ds.scenes[i].scene_id, static_cast<std::int64_t>(i), detect(det, ds.scenes[i].image)};
    });
    return log;
}

std::string detector_to_json(const ToyDetector& det) {
    using nlohmann::ordered_json;
    const auto& p = det.params;
    ordered_json doc;
    doc["format"] = "morphkit-toy-detector";
    doc["version"] = 1;
    doc["params"] = {
        {"window", p.features.window},
        {"grid", p.features.grid},
        {"gray_weight", p.features.gray_weight},
        {"hist_weight", p.features.hist_weight},
        {"contrast_floor", p.features.contrast_floor},
        {"beta", p.beta},
        {"nms_iou", p.nms_iou},
        {"score_floor", p.score_floor},
        {"scales", p.scales},
        {"stride", p.stride},
        {"negatives_per_object", p.negatives_per_object},
        {"negative_max_iou", p.negative_max_iou},
        {"seed", p.seed},
    };
    doc["class_names"] = det.class_names;
    doc["centroids"] = det.centroids;
    doc["background"] = det.background;
    return doc.dump(2) + "\n";
}

void save_detector(const ToyDetector& det, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write detector '" + path.string() + "'");
    out << detector_to_json(det);
}

ToyDetector load_detector(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open detector '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "morphkit-toy-detector")
            throw ValidationError("'" + path.string() + "' is not a toy detector document");
        ToyDetector det;
        const auto& p = doc.at("params");
        det.params.features.window = p.at("window").get<int>();
        det.params.features.grid = p.at("grid").get<int>();
        det.params.features.gray_weight = p.at("gray_weight").get<double>();
        det.params.features.hist_weight = p.at("hist_weight").get<double>();
        det.params.features.contrast_floor = p.at("contrast_floor").get<double>();
        det.params.beta = p.at("beta").get<double>();
        det.params.nms_iou = p.at("nms_iou").get<double>();
        det.params.score_floor = p.at("score_floor").get<double>();
        det.params.scales = p.at("scales").get<std::vector<double>>();
        det.params.stride = p.at("stride").get<int>();
        det.params.negatives_per_object = p.at("negatives_per_object").get<int>();
        det.params.negative_max_iou = p.at("negative_max_iou").get<double>();
        det.params.seed = p.at("seed").get<std::uint64_t>();
        det.params.validate();
        det.class_names = doc.at("class_names").get<std::vector<std::string>>();
        det.centroids = doc.at("centroids").get<std::vector<FeatureVector>>();
        det.background = doc.at("background").get<FeatureVector>();
        const auto dims = static_cast<std::size_t>(det.params.features.dims());
        if (det.centroids.size() != det.class_names.size())
            throw ValidationError("detector: one centroid per class required");
        for (const auto& c : det.centroids)
            if (c.size() != dims) throw ValidationError("detector: centroid has wrong dimension");
        if (det.background.size() != dims) throw ValidationError("detector: background centroid has wrong dimension");
        return det;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

}  // namespace morphkit
