// morphkit: poison, train, evaluate and defend from the command line.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "morphkit/annotation_io.hpp"
#include "morphkit/attack.hpp"
#include "morphkit/config.hpp"
#include "morphkit/error.hpp"
#include "morphkit/manifest.hpp"
#include "morphkit/metrics.hpp"
#include "morphkit/parallel.hpp"
#include "morphkit/pipeline.hpp"
#include "morphkit/rng.hpp"
#include "morphkit/strip.hpp"
#include "morphkit/toy_oracle.hpp"
#include "staging.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace morphkit;
using namespace morphkit::cli;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;

struct Common {
    std::string config;
    std::size_t threads = 0;
    bool force = false;
    std::string format = "native";
};

struct Loaded {
    RunConfig cfg;
    std::size_t workers = 1;
    DatasetFormat format = DatasetFormat::native;
};

Loaded load_common(const Common& c) {
    Loaded l;
    l.cfg = c.config.empty() ? default_run_config() : load_run_config(c.config);
    if (const auto seed = seed_from_env()) set_master_seed(l.cfg, *seed);
    l.workers = c.threads ? c.threads : default_worker_count();
    l.format = parse_dataset_format(c.format);
    return l;
}

ManifestInfo manifest_info(const std::string& command, const Loaded& l, std::string summary = {}) {
    return {command, l.cfg.master_seed, l.cfg.source, std::move(summary)};
}

void require_input_dir(const std::string& flag, const fs::path& dir) {
    if (!fs::exists(dir)) throw ValidationError(flag + ": '" + dir.string() + "' does not exist");
    if (!fs::is_directory(dir)) throw ValidationError(flag + ": '" + dir.string() + "' is not a directory");
    if (fs::is_empty(dir)) throw ValidationError(flag + ": '" + dir.string() + "' is empty");
}

Dataset load_input(const std::string& flag, const fs::path& dir, DatasetFormat format, std::size_t workers) {
    require_input_dir(flag, dir);
    Dataset ds = load_dataset(dir, format, workers);
    if (ds.scenes.empty()) throw ValidationError(flag + ": '" + dir.string() + "' holds no scenes");
    return ds;
}

void require_file(const std::string& flag, const fs::path& p) {
    if (!fs::is_regular_file(p)) throw ValidationError(flag + ": '" + p.string() + "' is not a readable file");
}

// Writes `files` (name -> content) plus a manifest as one staged group.
void write_file_group(const std::vector<std::pair<fs::path, std::string>>& files, const ManifestInfo& info,
                      bool force) {
    std::vector<fs::path> finals;
    for (const auto& f : files) finals.push_back(f.first);
    fs::path manifest = files.front().first;
    manifest += ".manifest.json";
    finals.push_back(manifest);
    StagedFiles staged(finals, force);
    std::vector<ManifestArtifact> arts;
    for (std::size_t i = 0; i < files.size(); ++i) {
        write_text_file(staged.path(i), files[i].second);
        arts.push_back(describe_file(files[i].first.filename().string(), staged.path(i)));
    }
    write_text_file(staged.path(files.size()), manifest_text(info, arts));
    staged.commit();
}

fs::path sibling(const fs::path& p, const std::string& ext) {
    fs::path out = p;
    out.replace_extension(ext);
    return out;
}

// ---- synth -----------------------------------------------------------------

int cmd_synth(const Common& c, const std::string& out, int scenes, const std::string& prefix) {
    const Loaded l = load_common(c);
    l.cfg.validate();
    if (scenes < 1) throw ValidationError("--scenes: must be >= 1");
    const Dataset ds = gen_synthetic_dataset(l.cfg.oracle.scenes, scenes, l.cfg.oracle.grid,
                                             derive_seed(l.cfg.master_seed, "synth:" + prefix), prefix, l.workers);
    StagedDir staged(out, c.force);
    write_dataset(ds, staged.path(), l.format, l.workers);
    json summary{{"scenes", ds.scenes.size()}, {"prefix", prefix}};
    write_manifest(staged.path(), manifest_info("synth", l, summary.dump()));
    staged.commit();
    std::printf("synth: %zu scenes -> %s\n", ds.scenes.size(), out.c_str());
    return kExitOk;
}

// ---- poison ----------------------------------------------------------------

std::string plan_json(const PoisonPlan& plan, const ApplyStats& stats) {
    json j;
    j["variant"] = std::string(variant_name(plan.variant));
    j["population"] = plan.population;
    j["requested"] = plan.requested;
    j["selected"] = plan.selected;
    j["realized_fraction"] = plan.realized_fraction();
    j["poisoned_objects"] = stats.poisoned_objects;
    j["grid_scenes"] = stats.grid_scenes;
    j["grid_poisoned_objects"] = stats.grid_poisoned_objects;
    json scenes = json::array();
    for (const auto& d : plan.scenes) {
        json marks = json::array();
        for (const auto& m : d.marks)
            marks.push_back({{"annotation", m.annotation},
                             {"placement", std::string(placement_name(m.placement))},
                             {"variant", m.variant},
                             {"size_r", m.size_r}});
        scenes.push_back({{"scene_id", d.scene_id}, {"marks", std::move(marks)}});
    }
    j["scenes"] = std::move(scenes);
    return j.dump(2) + "\n";
}

int cmd_poison(const Common& c, std::string in, std::string out) {
    Loaded l = load_common(c);
    if (in.empty()) in = l.cfg.in_root.string();
    if (out.empty()) out = l.cfg.out_root.string();
    if (in.empty()) throw ValidationError("--in: required (or paths.in in the config)");
    if (out.empty()) throw ValidationError("--out: required (or paths.out in the config)");
    const Dataset ds = load_input("--in", in, l.format, l.workers);
    l.cfg.attack.validate(ds.num_classes());
    const PoisonPlan plan = plan_poisoning(ds, l.cfg.attack);
    ApplyStats stats;
    const Dataset poisoned = apply_plan(ds, plan, l.cfg.attack, l.workers, &stats);

    StagedDir staged(out, c.force);
    write_dataset(poisoned, staged.path(), l.format, l.workers);
    write_text_file(staged.path() / "plan.json", plan_json(plan, stats));
    json summary{{"variant", std::string(variant_name(plan.variant))},
                 {"population", plan.population},
                 {"selected", plan.selected},
                 {"realized_fraction", plan.realized_fraction()},
                 {"grid_scenes", stats.grid_scenes}};
    write_manifest(staged.path(), manifest_info("poison", l, summary.dump()));
    staged.commit();
    std::printf("poison: %zu/%zu objects poisoned (%s), %zu grid scenes -> %s\n", plan.selected, plan.population,
                std::string(variant_name(plan.variant)).c_str(), stats.grid_scenes, out.c_str());
    return kExitOk;
}

// ---- oracle ----------------------------------------------------------------

int cmd_oracle_train(const Common& c, const std::string& in, const std::string& out) {
    const Loaded l = load_common(c);
    l.cfg.oracle.detector.validate();
    const Dataset ds = load_input("--in", in, l.format, l.workers);
    const ToyDetector det = train(ds, l.cfg.oracle.detector);
    write_file_group({{out, detector_to_json(det)}}, manifest_info("oracle train", l), c.force);
    std::printf("oracle train: %d classes from %zu scenes -> %s\n", det.num_classes(), ds.scenes.size(), out.c_str());
    return kExitOk;
}

int cmd_oracle_detect(const Common& c, const std::string& detector, const std::string& in, const std::string& out) {
    const Loaded l = load_common(c);
    require_file("--detector", detector);
    const ToyDetector det = load_detector(detector);
    const Dataset ds = load_input("--in", in, l.format, l.workers);
    if (ds.num_classes() != det.num_classes())
        throw ValidationError("--in: dataset has " + std::to_string(ds.num_classes()) + " classes, detector has " +
                              std::to_string(det.num_classes()));
    const DetectionLog log = detect_dataset(det, ds, l.workers);
    const fs::path manifest_target = out;
    std::vector<fs::path> finals{out, fs::path(out + ".manifest.json")};
    StagedFiles staged(finals, c.force);
    write_detections(log, staged.path(0));
    write_text_file(staged.path(1), manifest_text(manifest_info("oracle detect", l),
                                                  {describe_file(manifest_target.filename().string(), staged.path(0))}));
    staged.commit();
    std::printf("oracle detect: %zu detections over %zu frames -> %s\n", log.record_count(), log.frames.size(),
                out.c_str());
    return kExitOk;
}

// ---- eval ------------------------------------------------------------------

int cmd_eval(const Common& c, const std::string& gt, const std::string& det_path, const std::string& report,
             std::optional<int> target, std::vector<double> bins) {
    const Loaded l = load_common(c);
    const Dataset ds = load_input("--gt", gt, l.format, l.workers);
    require_file("--det", det_path);
    const DetectionLog log = load_detections(det_path, &ds);
    EvalReport rep = map_at(log, ds, l.workers);
    if (target) {
        if (*target < 0 || *target >= ds.num_classes()) throw ValidationError("--target: class out of range");
        rep.asr = asr_counts(log, ds, *target);
        if (rep.asr->frames == 0) throw EvaluationError("--target: no scene carries a triggered object");
        if (bins.empty()) bins = l.cfg.eval.distance_bins_m;
        bool has_distance = false;
        for (const auto& s : ds.scenes)
            if (const auto idx = flagged_trigger(s); idx && s.annotations[*idx].distance_m) has_distance = true;
        if (has_distance) rep.asr_by_distance = asr_vs_distance(log, ds, *target, bins);
    }
    const std::string text = report_to_json(rep) + "\n";
    write_file_group({{report, text}}, manifest_info("eval", l), c.force);
    std::printf("eval: mAP@0.5 %.4f  mAP@0.75 %.4f  mAP@0.5:0.95 %.4f", rep.map_50, rep.map_75, rep.map_50_95);
    if (rep.asr && rep.asr->ratio()) std::printf("  ASR %.4f", *rep.asr->ratio());
    std::printf(" -> %s\n", report.c_str());
    return kExitOk;
}

// ---- sweep / e2e -----------------------------------------------------------

int cmd_sweep(const Common& c, const std::string& out) {
    const Loaded l = load_common(c);
    const SweepResult r = run_sweep(l.cfg, l.workers);
    StagedDir staged(out, c.force);
    write_text_file(staged.path() / "sweep.csv", sweep_csv(r.rows));
    write_text_file(staged.path() / "sweep.svg", sweep_svg(r.rows));
    const std::string summary = sweep_json(r);
    write_text_file(staged.path() / "sweep.json", summary + "\n");
    write_manifest(staged.path(), manifest_info("sweep", l, summary));
    staged.commit();
    for (const auto& row : r.rows)
        std::printf("rate %.3f  mAP@0.5 %.4f  ASR %s\n", row.rate, row.map_50,
                    row.asr.ratio() ? std::to_string(*row.asr.ratio()).c_str() : "n/a");
    return kExitOk;
}

int cmd_e2e(const Common& c, const std::string& out) {
    const Loaded l = load_common(c);
    const E2eSummary s = run_e2e(l.cfg, l.workers);
    StagedDir staged(out, c.force);
    write_text_file(staged.path() / "e2e.csv", e2e_csv(s));
    const std::string summary = e2e_json(s);
    write_text_file(staged.path() / "e2e.json", summary + "\n");
    write_manifest(staged.path(), manifest_info("e2e", l, summary));
    staged.commit();
    std::printf("e2e: clean mAP@0.5 %.4f  MORPHING mAP@0.5 %.4f ASR %.4f  baseline ASR %.4f  STRIP AUC %.4f\n",
                s.clean_map_50, s.morphing_map_50, s.morphing_asr, s.baseline_asr, s.strip_auc);
    return kExitOk;
}

// ---- strip -----------------------------------------------------------------

// One scored region per scene: the triggered object, else the first object.
std::vector<StripFrame> strip_frames(const Dataset& ds) {
    std::vector<StripFrame> out;
    for (const auto& s : ds.scenes) {
        if (s.annotations.empty()) continue;
        const std::size_t idx = flagged_trigger(s).value_or(0);
        out.push_back({&s.image, s.annotations[idx].box});
    }
    return out;
}

int cmd_strip(const Common& c, const std::string& detector, const std::string& frames_dir,
              const std::string& benign_dir, std::optional<double> frr, std::optional<int> overlays,
              const std::string& out) {
    Loaded l = load_common(c);
    if (frr) l.cfg.strip.frr_target = *frr;
    if (overlays) l.cfg.strip.n_overlays = *overlays;
    l.cfg.strip.validate();
    require_file("--detector", detector);
    const ToyDetector det = load_detector(detector);
    const Dataset frames = load_input("--frames", frames_dir, l.format, l.workers);
    const Dataset benign = load_input("--benign", benign_dir, l.format, l.workers);
    std::vector<ImageBuffer> pool;
    for (const auto& s : benign.scenes) pool.push_back(s.image);
    if (pool.size() < static_cast<std::size_t>(l.cfg.strip.n_overlays))
        throw ValidationError("--benign: needs at least n_overlays = " + std::to_string(l.cfg.strip.n_overlays) +
                              " scenes");
    const auto benign_frames = strip_frames(benign);
    const auto test_frames = strip_frames(frames);
    if (benign_frames.empty()) throw ValidationError("--benign: no annotated objects to calibrate on");
    if (test_frames.empty()) throw ValidationError("--frames: no annotated objects to score");
    const std::uint64_t seed = derive_seed(l.cfg.master_seed, "strip");
    const auto be = strip_scores(det, benign_frames, pool, l.cfg.strip, derive_seed(seed, "benign"), l.workers);
    const auto te = strip_scores(det, test_frames, pool, l.cfg.strip, derive_seed(seed, "frames"), l.workers);
    const double threshold = calibrate_threshold(be, l.cfg.strip.frr_target);
    const RocCurve roc = roc_auc(be, te);
    json summary{{"frr_target", l.cfg.strip.frr_target},
                 {"threshold", threshold},
                 {"realized_frr", flag_rate(be, threshold)},
                 {"detection_rate", flag_rate(te, threshold)},
                 {"auc", roc.auc},
                 {"benign_frames", be.size()},
                 {"scored_frames", te.size()},
                 {"n_overlays", l.cfg.strip.n_overlays},
                 {"aggregation", std::string(aggregation_name(l.cfg.strip.aggregation))}};
    const fs::path csv = out;
    write_file_group({{csv, roc_csv(roc)},
                      {sibling(csv, ".svg"), roc_svg(roc)},
                      {sibling(csv, ".json"), summary.dump(2) + "\n"}},
                     manifest_info("strip", l, summary.dump()), c.force);
    std::printf("strip: threshold %.6f  FRR %.4f  detection rate %.4f  AUC %.4f -> %s\n", threshold,
                flag_rate(be, threshold), flag_rate(te, threshold), roc.auc, out.c_str());
    return kExitOk;
}

// ---- report ----------------------------------------------------------------

int cmd_report(const Common& c, const std::vector<std::string>& inputs, const std::string& out) {
    const Loaded l = load_common(c);
    const std::string header = sweep_csv({}).substr(0, sweep_csv({}).find('\n'));
    struct Row {
        double rate;
        std::size_t order;
        std::string line;
    };
    std::vector<Row> rows;
    for (const auto& in : inputs) {
        fs::path p = in;
        if (fs::is_directory(p)) p /= "sweep.csv";
        require_file("--in", p);
        std::istringstream ss(read_text_file(p));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(ss, line)) {
            ++line_no;
            if (line_no == 1) {
                if (line != header) throw ParseError(p.string(), 1, "not a sweep table (header mismatch)");
                continue;
            }
            if (line.empty()) continue;
            const auto comma = line.find(',');
            double rate = 0.0;
            try {
                rate = std::stod(line.substr(0, comma));
            } catch (const std::exception&) {
                throw ParseError(p.string(), line_no, "bad rate field");
            }
            rows.push_back({rate, rows.size(), line});
        }
    }
    if (rows.empty()) throw ValidationError("--in: no sweep rows found");
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.rate < b.rate; });
    std::string text = header + "\n";
    for (const auto& r : rows) text += r.line + "\n";
    write_file_group({{out, text}}, manifest_info("report", l), c.force);
    std::printf("report: %zu rows -> %s\n", rows.size(), out.c_str());
    return kExitOk;
}

void add_common(CLI::App* cmd, Common& c, bool with_format = true) {
    cmd->add_option("--config", c.config, "run config (TOML)")->check(CLI::ExistingFile);
    cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)");
    cmd->add_flag("--force", c.force, "replace existing outputs");
    if (with_format) cmd->add_option("--format", c.format, "dataset format: native|coco-json|yolo-txt");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"morphkit: physical-world data poisoning toolkit for object detection"};
    app.require_subcommand(1);
    Common common;
    std::function<int()> action;

    std::string out, in, gt, det, report, detector, frames, benign;
    int scenes = 200;
    std::string prefix = "scene";
    std::optional<int> target;
    std::vector<double> bins;
    std::optional<double> frr;
    std::optional<int> overlays;
    std::vector<std::string> inputs;

    auto* synth = app.add_subcommand("synth", "render a synthetic shape dataset");
    add_common(synth, common);
    synth->add_option("--out", out, "output dataset directory")->required();
    synth->add_option("--scenes", scenes, "number of scenes");
    synth->add_option("--prefix", prefix, "scene id prefix");
    synth->callback([&] { action = [&] { return cmd_synth(common, out, scenes, prefix); }; });

    auto* poison = app.add_subcommand("poison", "poison a dataset with the configured attack");
    add_common(poison, common);
    poison->add_option("--in", in, "clean dataset directory");
    poison->add_option("--out", out, "poisoned dataset directory");
    poison->callback([&] { action = [&] { return cmd_poison(common, in, out); }; });

    auto* oracle = app.add_subcommand("oracle", "toy nearest-centroid detector");
    oracle->require_subcommand(1);
    auto* otrain = oracle->add_subcommand("train", "train a detector on a dataset");
    add_common(otrain, common);
    otrain->add_option("--in", in, "training dataset directory")->required();
    otrain->add_option("--out", out, "detector JSON")->required();
    otrain->callback([&] { action = [&] { return cmd_oracle_train(common, in, out); }; });
    auto* odetect = oracle->add_subcommand("detect", "run a detector over a dataset");
    add_common(odetect, common);
    odetect->add_option("--detector", detector, "detector JSON")->required();
    odetect->add_option("--in", in, "dataset directory")->required();
    odetect->add_option("--out", out, "detection log (JSON lines)")->required();
    odetect->callback([&] { action = [&] { return cmd_oracle_detect(common, detector, in, out); }; });

    auto* eval = app.add_subcommand("eval", "mAP and ASR for a detection log");
    add_common(eval, common);
    eval->add_option("--gt", gt, "ground-truth dataset directory")->required();
    eval->add_option("--det", det, "detection log (JSON lines)")->required();
    eval->add_option("--report", report, "report JSON")->required();
    eval->add_option("--target", target, "target class for ASR over triggered objects");
    eval->add_option("--distance-bins", bins, "ASR distance bin edges in metres")->delimiter(',');
    eval->callback([&] { action = [&] { return cmd_eval(common, gt, det, report, target, bins); }; });

    auto* sweep = app.add_subcommand("sweep", "injection-rate sweep on the synthetic task");
    add_common(sweep, common, false);
    sweep->add_option("--out", out, "output directory")->required();
    sweep->callback([&] { action = [&] { return cmd_sweep(common, out); }; });

    auto* e2e = app.add_subcommand("e2e", "clean vs MORPHING vs digital baseline on the synthetic task");
    add_common(e2e, common, false);
    e2e->add_option("--out", out, "output directory")->required();
    e2e->callback([&] { action = [&] { return cmd_e2e(common, out); }; });

    auto* strip = app.add_subcommand("strip", "STRIP entropy defense");
    add_common(strip, common);
    strip->add_option("--detector", detector, "detector JSON")->required();
    strip->add_option("--frames", frames, "dataset of frames to score")->required();
    strip->add_option("--benign", benign, "held-out benign dataset (overlays and calibration)")->required();
    strip->add_option("--frr", frr, "target false rejection rate");
    strip->add_option("--overlays", overlays, "benign overlays per frame");
    strip->add_option("--out", out, "ROC CSV (a .svg and .json are written alongside)")->required();
    strip->callback([&] { action = [&] { return cmd_strip(common, detector, frames, benign, frr, overlays, out); }; });

    auto* rep = app.add_subcommand("report", "merge sweep tables sorted by rate");
    add_common(rep, common, false);
    rep->add_option("--in", inputs, "sweep CSV files or sweep output directories")->required();
    rep->add_option("--out", out, "merged CSV")->required();
    rep->callback([&] { action = [&] { return cmd_report(common, inputs, out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        return action ? action() : kExitInvalid;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "morphkit: invalid config: %s\n", e.what());
        return kExitInvalid;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "morphkit: invalid input: %s\n", e.what());
        return kExitInvalid;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "morphkit: parse error: %s\n", e.what());
        return kExitInvalid;
    } catch (const ArgumentError& e) {
        std::fprintf(stderr, "morphkit: invalid argument: %s\n", e.what());
        return kExitInvalid;
    } catch (const Error& e) {
        std::fprintf(stderr, "morphkit: %s\n", e.what());
        return kExitFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "morphkit: unexpected failure: %s\n", e.what());
        return kExitFailure;
    }
}
