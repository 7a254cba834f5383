#include "morphkit/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "morphkit/error.hpp"
#include "morphkit/rng.hpp"
#include "toml.hpp"

namespace morphkit {
namespace {

using json = nlohmann::ordered_json;

// Typed access to one TOML table; every key read is recorded so leftovers
// can be reported as unknown.
class Section {
public:
    Section(const json* node, std::string path) : node_(node), path_(std::move(path)) {
        if (node_ && !node_->is_object()) throw ConfigError(path_ + ": expected a table");
    }

    const json* find(const std::string& key) {
        used_.insert(key);
        if (!node_) return nullptr;
        const auto it = node_->find(key);
        return it == node_->end() ? nullptr : &*it;
    }

    std::string field(const std::string& key) const { return path_ + "." + key; }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) out = as_number(*v, field(key));
    }
    void integer(const std::string& key, int& out) {
        if (const json* v = find(key)) {
            const std::int64_t i = as_integer(*v, field(key));
            if (i < INT32_MIN || i > INT32_MAX) throw ConfigError(field(key) + ": out of range");
            out = static_cast<int>(i);
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(field(key) + ": expected true or false");
            out = v->get<bool>();
        }
    }
    bool string(const std::string& key, std::string& out) {
        const json* v = find(key);
        if (!v) return false;
        if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
        out = v->get<std::string>();
        return true;
    }
    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) throw ConfigError(field(key) + ": expected an array of numbers");
            out.clear();
            for (const auto& e : *v) out.push_back(as_number(e, field(key)));
        }
    }
    void integers(const std::string& key, std::vector<int>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) throw ConfigError(field(key) + ": expected an array of integers");
            out.clear();
            for (const auto& e : *v) out.push_back(static_cast<int>(as_integer(e, field(key))));
        }
    }

    void finish() const {
        if (!node_) return;
        for (const auto& [k, v] : node_->items())
            if (!used_.count(k)) throw ConfigError(field(k) + ": unknown key");
    }

private:
    static double as_number(const json& v, const std::string& where) {
        if (!v.is_number()) throw ConfigError(where + ": expected a number");
        return v.get<double>();
    }
    static std::int64_t as_integer(const json& v, const std::string& where) {
        if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
        return v.get<std::int64_t>();
    }

    const json* node_;
    std::string path_;
    std::set<std::string> used_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

// Re-raises a sub-config error under a section prefix, e.g. the synthetic
// corpus grid reports "oracle.grid.k" rather than "grid.k".
template <class F>
void with_prefix(const std::string& from, const std::string& to, F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        std::string what = e.what();
        if (what.rfind(from, 0) == 0) what = to + what.substr(from.size());
        throw ConfigError(what);
    }
}

void read_grid(Section& s, GridConfig& g) {
    s.integer("k", g.k);
    s.integer("num_classes_n", g.num_classes_n);
    s.number("per_cell_prob", g.per_cell_prob);
    s.integer("jitter", g.jitter);
    s.number("size_min", g.size_min);
    s.number("size_max", g.size_max);
    s.integer("max_tries", g.max_tries);
}

}  // namespace

RunConfig default_run_config() {
    RunConfig cfg;
    AttackConfig& a = cfg.attack;
    a.variant = AttackVariant::lma_single_location_invariant;
    a.target_label = 0;
    a.injection_rate = 0.15;
    a.trigger.patch = default_trigger_patch(a.trigger.size_r);
    a.trigger.placement = Placement::low;
    a.trigger_relative_size = 0.7;
    a.grid = GridConfig::with_classes(cfg.oracle.scenes.n_classes(), 3);
    set_master_seed(cfg, cfg.master_seed);
    return cfg;
}

void set_master_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.master_seed = seed;
    cfg.attack.seed = derive_seed(seed, "attack");
    cfg.oracle.detector.seed = derive_seed(seed, "detector");
}

void RunConfig::validate() const {
    const int n = oracle.scenes.n_classes();
    attack.validate(n);
    with_prefix("grid.", "oracle.grid.", [&] { oracle.grid.validate(); });
    oracle.scenes.validate();
    oracle.detector.validate();
    if (oracle.train_scenes < 1) throw ConfigError("oracle.train_scenes: must be >= 1");
    if (oracle.test_scenes < 1) throw ConfigError("oracle.test_scenes: must be >= 1");
    if (oracle.detector.features.window > oracle.scenes.canvas)
        throw ConfigError("detector.window: larger than oracle.canvas");
    strip.validate();
    if (eval.distance_bins_m.size() < 2) throw ConfigError("eval.distance_bins: need at least two edges");
    for (std::size_t i = 1; i < eval.distance_bins_m.size(); ++i)
        if (!(eval.distance_bins_m[i] > eval.distance_bins_m[i - 1]))
            throw ConfigError("eval.distance_bins: edges must be strictly increasing");
    if (!(eval.test_widen >= 1.0)) throw ConfigError("eval.test_widen: must be >= 1");
    if (sweep.rates.empty()) throw ConfigError("sweep.rates: need at least one rate");
    for (double r : sweep.rates)
        if (!(r > 0.0 && r <= 1.0)) throw ConfigError("sweep.rates: every rate must be in (0, 1]");
    if (sweep.seeds < 1) throw ConfigError("sweep.seeds: must be >= 1");
    if (e2e.seeds < 1) throw ConfigError("e2e.seeds: must be >= 1");
    if (e2e.strip_frames < 2) throw ConfigError("e2e.strip_frames: must be >= 2");
    if (!in_root.empty() && !std::filesystem::exists(in_root))
        throw ConfigError("paths.in: '" + in_root.string() + "' does not exist");
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir, const std::string& origin) {
    const json root = detail::parse_toml(text, origin);
    RunConfig cfg = default_run_config();
    cfg.source = std::string(text);

    static const std::set<std::string> kSections{"run",    "paths", "attack", "trigger", "augment", "grid",
                                                 "oracle", "detector", "eval", "strip",  "sweep",  "e2e"};
    for (const auto& [k, v] : root.items()) {
        if (!v.is_object()) throw ConfigError(k + ": top-level keys must live in a section");
        if (!kSections.count(k)) throw ConfigError(k + ": unknown section");
    }
    const auto section = [&](const char* name) {
        const auto it = root.find(name);
        return Section(it == root.end() ? nullptr : &*it, name);
    };

    {
        Section s = section("run");
        if (const json* v = s.find("seed")) {
            if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
                throw ConfigError("run.seed: expected a nonnegative integer");
            set_master_seed(cfg, v->get<std::uint64_t>());
        }
        s.finish();
    }
    {
        Section s = section("paths");
        std::string p;
        if (s.string("in", p)) cfg.in_root = resolve(base_dir, p);
        if (s.string("out", p)) cfg.out_root = resolve(base_dir, p);
        s.finish();
    }

    AttackConfig& a = cfg.attack;
    {
        Section s = section("oracle");
        SyntheticSceneSpec& sc = cfg.oracle.scenes;
        int n_classes = sc.n_classes();
        s.integer("n_classes", n_classes);
        if (n_classes != sc.n_classes()) {
            const SyntheticSceneSpec fresh = SyntheticSceneSpec::default_spec(n_classes);
            sc.classes = fresh.classes;
            a.grid.num_classes_n = n_classes;
            a.grid.per_cell_prob = 1.0 / n_classes;
        }
        s.integer("canvas", sc.canvas);
        s.number("background_level", sc.background_level);
        s.number("background_amplitude", sc.background_amplitude);
        s.integer("background_lattice", sc.background_lattice);
        s.number("background_grain", sc.background_grain);
        s.number("color_jitter", sc.color_jitter);
        s.number("rotation_jitter_deg", sc.rotation_jitter_deg);
        s.integer("render_size", sc.render_size);
        s.number("shape_fill", sc.shape_fill);
        s.number("distance_ref_m", sc.distance_ref_m);
        s.number("distance_ref_px", sc.distance_ref_px);
        s.integer("train_scenes", cfg.oracle.train_scenes);
        s.integer("test_scenes", cfg.oracle.test_scenes);
        if (const json* g = s.find("grid")) {
            Section gs(g, "oracle.grid");
            read_grid(gs, cfg.oracle.grid);
            gs.finish();
        }
        s.finish();
    }
    {
        Section s = section("attack");
        std::string name;
        if (s.string("variant", name)) a.variant = parse_variant(name);
        s.integer("target_label", a.target_label);
        s.integer("target_low", a.target_low);
        s.integer("target_high", a.target_high);
        s.integers("source_classes", a.source_classes);
        s.number("injection_rate", a.injection_rate);
        s.number("epsilon", a.epsilon);
        s.integer("pgd_steps", a.pgd_steps);
        s.number("pgd_step", a.pgd_step);
        s.boolean("trigger_variants", a.trigger_variants);
        s.finish();
    }
    {
        Section s = section("trigger");
        TriggerSpec& t = a.trigger;
        std::string value;
        s.integer("size_r", t.size_r);
        s.number("relative_size", a.trigger_relative_size);
        if (s.string("placement", value)) {
            try {
                t.placement = parse_placement(value);
            } catch (const ConfigError&) {
                throw ConfigError("trigger.placement: unknown placement '" + value + "'");
            }
        }
        s.number("scale_s", t.scale_s);
        s.integer("n_variants", t.n_variants);
        s.integer("jitter_px", t.jitter.anchor_px);
        s.number("jitter_brightness", t.jitter.brightness);
        s.number("opacity_min", t.jitter.opacity_min);
        s.number("low_center", t.geometry.low_center);
        s.number("high_center", t.geometry.high_center);
        s.number("roof_center", t.geometry.roof_center);
        s.integer("outside_gap", t.geometry.outside_gap);
        if (s.string("patch", value)) {
            cfg.trigger_patch = resolve(base_dir, value);
            if (!std::filesystem::exists(cfg.trigger_patch))
                throw ConfigError("trigger.patch: '" + cfg.trigger_patch.string() + "' does not exist");
            try {
                t.patch = read_png(cfg.trigger_patch.string());
            } catch (const Error& e) {
                throw ConfigError(std::string("trigger.patch: ") + e.what());
            }
        } else if (t.size_r >= 1) {
            t.patch = default_trigger_patch(t.size_r);
        }
        s.finish();
    }
    {
        Section s = section("augment");
        s.number("p_aug", a.augment.p_aug);
        if (const json* v = s.find("disabled")) {
            if (!v->is_array()) throw ConfigError("augment.disabled: expected an array of transform names");
            for (const auto& e : *v) {
                if (!e.is_string()) throw ConfigError("augment.disabled: expected transform names");
                try {
                    a.augment.range(parse_transform(e.get<std::string>())).enabled = false;
                } catch (const ConfigError&) {
                    throw ConfigError("augment.disabled: unknown transform '" + e.get<std::string>() + "'");
                }
            }
        }
        for (Transform t : kTransformOrder) {
            const std::string key(transform_name(t));
            std::vector<double> range;
            s.numbers(key, range);
            if (s.find(key) == nullptr) continue;
            if (range.size() != 2) throw ConfigError("augment." + key + ": expected [lo, hi]");
            a.augment.range(t).lo = range[0];
            a.augment.range(t).hi = range[1];
        }
        s.finish();
    }
    {
        Section s = section("grid");
        read_grid(s, a.grid);
        s.integer("scenes_per_poisoned", a.grid_scenes_per_poisoned);
        s.boolean("poisoning", a.grid_poisoning);
        s.finish();
    }
    {
        Section s = section("detector");
        ToyDetectorParams& d = cfg.oracle.detector;
        s.integer("window", d.features.window);
        s.integer("grid", d.features.grid);
        s.number("gray_weight", d.features.gray_weight);
        s.number("hist_weight", d.features.hist_weight);
        s.number("contrast_floor", d.features.contrast_floor);
        s.number("beta", d.beta);
        s.number("nms_iou", d.nms_iou);
        s.number("score_floor", d.score_floor);
        s.numbers("scales", d.scales);
        s.integer("stride", d.stride);
        s.integer("negatives_per_object", d.negatives_per_object);
        s.number("negative_max_iou", d.negative_max_iou);
        s.finish();
    }
    {
        Section s = section("eval");
        s.numbers("distance_bins", cfg.eval.distance_bins_m);
        s.number("test_widen", cfg.eval.test_widen);
        s.finish();
    }
    {
        Section s = section("strip");
        std::string agg;
        s.integer("n_overlays", cfg.strip.n_overlays);
        s.number("frr", cfg.strip.frr_target);
        s.number("blend", cfg.strip.blend);
        if (s.string("aggregation", agg)) {
            try {
                cfg.strip.aggregation = parse_aggregation(agg);
            } catch (const ConfigError&) {
                throw ConfigError("strip.aggregation: unknown value '" + agg + "' (mean|max)");
            }
        }
        s.finish();
    }
    {
        Section s = section("sweep");
        s.numbers("rates", cfg.sweep.rates);
        s.integer("seeds", cfg.sweep.seeds);
        s.finish();
    }
    {
        Section s = section("e2e");
        s.integer("seeds", cfg.e2e.seeds);
        s.integer("strip_frames", cfg.e2e.strip_frames);
        s.finish();
    }

    with_prefix("strip.frr_target", "strip.frr", [&] { cfg.validate(); });
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path.parent_path(), path.string());
}

std::optional<std::uint64_t> seed_from_env() {
    const char* v = std::getenv("MORPHKIT_SEED");
    if (!v || !*v) return std::nullopt;
    const std::string_view s(v);
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError("MORPHKIT_SEED: expected a nonnegative integer, got '" + std::string(s) + "'");
    return seed;
}

}  // namespace morphkit
