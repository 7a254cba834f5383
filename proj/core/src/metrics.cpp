#include "morphkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "morphkit/error.hpp"
#include "morphkit/parallel.hpp"
#include "morphkit/plot.hpp"
#include "morphkit/rng.hpp"

namespace morphkit {

std::size_t Matching::true_positives() const noexcept {
    return static_cast<std::size_t>(std::count_if(matched_gt.begin(), matched_gt.end(), [](int g) { return g >= 0; }));
}

Matching match_detections(std::span<const Detection> dets, std::span<const ObjectAnnotation> gts, double iou_thr) {
    Matching m;
    m.order.resize(dets.size());
    std::iota(m.order.begin(), m.order.end(), std::size_t{0});
    std::stable_sort(m.order.begin(), m.order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });
    m.matched_gt.assign(dets.size(), -1);
    std::vector<bool> taken(gts.size(), false);
    for (std::size_t d : m.order) {
        int best = -1;
        double best_iou = -1.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g] || gts[g].class_id != dets[d].class_id) continue;
            const double o = iou(dets[d].box, gts[g].box);
            // Strictly greater keeps the lower index on ties.
            if (o >= iou_thr && o > best_iou) {
                best = static_cast<int>(g);
                best_iou = o;
            }
        }
        if (best >= 0) {
            taken[static_cast<std::size_t>(best)] = true;
            m.matched_gt[d] = best;
        }
    }
    return m;
}

double average_precision(std::span<const RankedHit> ranked, std::size_t n_gt) {
    if (n_gt == 0) throw EvaluationError("average precision is undefined without ground truth");
    const std::size_t n = ranked.size();
    std::vector<double> precision(n);
    std::vector<std::size_t> tp_count(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (ranked[i].true_positive) ++tp;
        tp_count[i] = tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double sum = 0.0;
    std::size_t k = 0;
    for (std::size_t j = 0; j <= 100; ++j) {
        // First rank whose recall reaches j/100, compared in integers.
        while (k < n && tp_count[k] * 100 < j * n_gt) ++k;
        if (k == n) break;
        sum += precision[k];
    }
    return sum / 101.0;
}

namespace {

struct SceneMatch {
    const std::vector<Detection>* dets = nullptr;
    Matching matching;
};

std::vector<SceneMatch> match_all(const DetectionLog& log, const Dataset& ds, double iou_thr, std::size_t workers) {
    static const std::vector<Detection> kNone;
    std::vector<SceneMatch> out(ds.scenes.size());
    parallel_for(ds.scenes.size(), workers, [&](std::size_t i) {
        const auto* frame = log.find(ds.scenes[i].scene_id);
        out[i].dets = frame ? &frame->detections : &kNone;
        out[i].matching = match_detections(*out[i].dets, ds.scenes[i].annotations, iou_thr);
    });
    return out;
}

std::vector<std::size_t> gt_per_class(const Dataset& ds) {
    std::vector<std::size_t> n(static_cast<std::size_t>(ds.num_classes()), 0);
    for (const auto& s : ds.scenes)
        for (const auto& a : s.annotations) ++n.at(static_cast<std::size_t>(a.class_id));
    return n;
}

std::vector<std::optional<double>> ap_from_matches(const std::vector<SceneMatch>& matches, const Dataset& ds) {
    const auto n_gt = gt_per_class(ds);
    std::vector<std::vector<RankedHit>> hits(n_gt.size());
    // Scene order then per-scene rank breaks confidence ties.
    for (const auto& sm : matches)
        for (std::size_t d : sm.matching.order) {
            const Detection& det = (*sm.dets)[d];
            if (det.class_id < 0 || static_cast<std::size_t>(det.class_id) >= hits.size()) continue;
            hits[static_cast<std::size_t>(det.class_id)].push_back({det.confidence, sm.matching.matched_gt[d] >= 0});
        }
    std::vector<std::optional<double>> ap(n_gt.size());
    for (std::size_t c = 0; c < n_gt.size(); ++c) {
        if (n_gt[c] == 0) continue;
        std::stable_sort(hits[c].begin(), hits[c].end(),
                         [](const RankedHit& a, const RankedHit& b) { return a.confidence > b.confidence; });
        ap[c] = average_precision(hits[c], n_gt[c]);
    }
    return ap;
}

double mean_present(const std::vector<std::optional<double>>& v) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& x : v)
        if (x) {
            sum += *x;
            ++n;
        }
    return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace

std::vector<std::optional<double>> class_average_precision(const DetectionLog& log, const Dataset& ds,
                                                           double iou_thr, std::size_t workers) {
    return ap_from_matches(match_all(log, ds, iou_thr, workers), ds);
}

EvalReport map_at(const DetectionLog& log, const Dataset& ds, std::size_t workers) {
    if (ds.scenes.empty()) throw EvaluationError("cannot evaluate an empty dataset");
    const auto n_gt = gt_per_class(ds);
    if (std::accumulate(n_gt.begin(), n_gt.end(), std::size_t{0}) == 0)
        throw EvaluationError("dataset has no ground-truth objects");

    EvalReport r;
    r.frames = ds.scenes.size();
    r.gt_objects = std::accumulate(n_gt.begin(), n_gt.end(), std::size_t{0});
    for (const auto& s : ds.scenes)
        if (const auto* f = log.find(s.scene_id)) r.detections += f->detections.size();

    std::vector<std::vector<std::optional<double>>> per_thr;
    for (double thr : kCocoThresholds) {
        const auto matches = match_all(log, ds, thr, workers);
        if (thr == 0.50)
            for (const auto& m : matches) r.matches_50 += m.matching.true_positives();
        per_thr.push_back(ap_from_matches(matches, ds));
    }
    r.map_50 = mean_present(per_thr[0]);
    r.map_75 = mean_present(per_thr[5]);
    for (std::size_t c = 0; c < n_gt.size(); ++c) {
        ClassAp row;
        row.name = ds.class_names[c];
        row.n_gt = n_gt[c];
        row.ap_50 = per_thr[0][c];
        row.ap_75 = per_thr[5][c];
        if (n_gt[c] > 0) {
            double s = 0.0;
            for (const auto& t : per_thr) s += *t[c];
            row.ap_50_95 = s / static_cast<double>(per_thr.size());
        }
        r.per_class.push_back(row);
    }
    double sum = 0.0;
    for (const auto& t : per_thr) sum += mean_present(t);
    r.map_50_95 = sum / static_cast<double>(per_thr.size());
    return r;
}

std::optional<double> AsrCounts::ratio() const noexcept {
    if (identified == 0) return std::nullopt;
    return static_cast<double>(success) / static_cast<double>(identified);
}

std::optional<std::size_t> flagged_trigger(const Scene& scene) {
    for (std::size_t i = 0; i < scene.annotations.size(); ++i)
        if (scene.annotations[i].triggered) return i;
    return std::nullopt;
}

namespace {

// Best-overlap detection at IoU >= 0.5; ties prefer higher confidence, then
// the earlier detection.
const Detection* identify(const FrameDetections* frame, const BBox& box) {
    if (!frame) return nullptr;
    const Detection* best = nullptr;
    double best_iou = 0.0;
    for (const auto& d : frame->detections) {
        const double o = iou(d.box, box);
        if (o < 0.5) continue;
        if (!best || o > best_iou || (o == best_iou && d.confidence > best->confidence)) {
            best = &d;
            best_iou = o;
        }
    }
    return best;
}

template <class Visit>
void for_each_triggered(const DetectionLog& log, const Dataset& ds, const TriggeredSelector& select, Visit visit) {
    for (const auto& scene : ds.scenes) {
        const auto idx = select(scene);
        if (!idx) continue;
        if (*idx >= scene.annotations.size()) throw EvaluationError("selector returned an out-of-range annotation");
        const auto& obj = scene.annotations[*idx];
        visit(obj, identify(log.find(scene.scene_id), obj.box));
    }
}

}  // namespace

AsrCounts asr_counts(const DetectionLog& log, const Dataset& ds, int target, const TriggeredSelector& select) {
    AsrCounts c;
    for_each_triggered(log, ds, select, [&](const ObjectAnnotation&, const Detection* hit) {
        ++c.frames;
        if (!hit) return;
        ++c.identified;
        if (hit->class_id == target) ++c.success;
    });
    return c;
}

double asr(const DetectionLog& log, const Dataset& ds, int target, const TriggeredSelector& select) {
    const AsrCounts c = asr_counts(log, ds, target, select);
    if (c.frames == 0) throw EvaluationError("trigger selector matched no frame");
    if (c.identified == 0) throw EvaluationError("triggered object was never identified by the detector");
    return *c.ratio();
}

DistanceCurve asr_vs_distance(const DetectionLog& log, const Dataset& ds, int target, std::span<const double> edges_m,
                              const TriggeredSelector& select) {
    if (edges_m.size() < 2) throw ArgumentError("distance binning needs at least two edges");
    for (std::size_t i = 1; i < edges_m.size(); ++i)
        if (!(edges_m[i] > edges_m[i - 1])) throw ArgumentError("distance bin edges must be strictly increasing");
    DistanceCurve curve;
    for (std::size_t i = 0; i + 1 < edges_m.size(); ++i) curve.bins.push_back({edges_m[i], edges_m[i + 1], {}});
    std::size_t with_distance = 0;
    for_each_triggered(log, ds, select, [&](const ObjectAnnotation& obj, const Detection* hit) {
        if (!obj.distance_m) return;
        ++with_distance;
        const double d = *obj.distance_m;
        if (hit && (!curve.first_detected_m || d > *curve.first_detected_m)) curve.first_detected_m = d;
        const auto it = std::upper_bound(edges_m.begin(), edges_m.end(), d);
        if (it == edges_m.begin() || it == edges_m.end()) return;
        auto& c = curve.bins[static_cast<std::size_t>(it - edges_m.begin() - 1)].counts;
        ++c.frames;
        if (!hit) return;
        ++c.identified;
        if (hit->class_id == target) ++c.success;
    });
    if (with_distance == 0) throw EvaluationError("triggered objects carry no distance metadata");
    return curve;
}

namespace {

nlohmann::ordered_json opt(const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nullptr; }

nlohmann::ordered_json asr_json(const AsrCounts& c) {
    return {{"frames", c.frames}, {"identified", c.identified}, {"success", c.success}, {"asr", opt(c.ratio())}};
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
    nlohmann::ordered_json doc;
    doc["map_50"] = r.map_50;
    doc["map_75"] = r.map_75;
    doc["map_50_95"] = r.map_50_95;
    doc["counts"] = {{"frames", r.frames}, {"gt_objects", r.gt_objects}, {"detections", r.detections},
                     {"matches_50", r.matches_50}};
    auto& pc = doc["per_class"] = nlohmann::ordered_json::array();
    for (const auto& c : r.per_class)
        pc.push_back({{"class", c.name}, {"n_gt", c.n_gt}, {"ap_50", opt(c.ap_50)}, {"ap_75", opt(c.ap_75)},
                      {"ap_50_95", opt(c.ap_50_95)}});
    doc["asr"] = r.asr ? asr_json(*r.asr) : nlohmann::ordered_json(nullptr);
    if (r.asr_by_distance) {
        nlohmann::ordered_json bins = nlohmann::ordered_json::array();
        for (const auto& b : r.asr_by_distance->bins) {
            auto j = asr_json(b.counts);
            j["lo_m"] = b.lo_m;
            j["hi_m"] = b.hi_m;
            bins.push_back(std::move(j));
        }
        doc["asr_by_distance"] = {{"bins", bins}, {"first_detected_m", opt(r.asr_by_distance->first_detected_m)}};
    } else {
        doc["asr_by_distance"] = nullptr;
    }
    return doc.dump(2) + "\n";
}

std::uint64_t sweep_seed(std::uint64_t master, double rate) {
    char key[48];
    std::snprintf(key, sizeof key, "rate:%.6f", rate);
    return derive_seed(master, key);
}

std::vector<SweepRow> injection_sweep(std::span<const double> rates, std::uint64_t seed, const SweepCycle& cycle) {
    if (rates.empty()) throw ArgumentError("sweep needs at least one rate");
    for (double r : rates)
        if (!(r > 0.0 && r <= 1.0)) throw ArgumentError("sweep rates must lie in (0, 1]");
    std::vector<SweepRow> rows;
    rows.reserve(rates.size());
    for (double r : rates) {
        SweepRow row = cycle(r, sweep_seed(seed, r));
        row.rate = r;
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
    std::string out = "rate,map_50,asr,asr_success,asr_identified,asr_frames\n";
    for (const auto& r : rows) {
        const auto a = r.asr.ratio();
        out += format_fixed6(r.rate) + "," + format_fixed6(r.map_50) + "," + (a ? format_fixed6(*a) : "") + "," +
               std::to_string(r.asr.success) + "," + std::to_string(r.asr.identified) + "," +
               std::to_string(r.asr.frames) + "\n";
    }
    return out;
}

std::string sweep_svg(std::span<const SweepRow> rows) {
    PlotSeries asr_s{"ASR", {}, "#d62728"}, map_s{"mAP@0.5", {}, "#1f77b4"};
    for (const auto& r : rows) {
        if (auto a = r.asr.ratio()) asr_s.points.emplace_back(r.rate, *a);
        map_s.points.emplace_back(r.rate, r.map_50);
    }
    PlotSpec spec;
    spec.title = "Backdoor injection rate";
    spec.x_label = "injection rate";
    spec.y_label = "ratio";
    spec.y_lo = 0.0;
    spec.y_hi = 1.0;
    return svg_line_chart(spec, {asr_s, map_s});
}

}  // namespace morphkit
