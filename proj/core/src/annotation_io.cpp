#include "morphkit/annotation_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "morphkit/error.hpp"
#include "morphkit/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace morphkit {

namespace {

// Float noise from normalized formats may push an edge past the border by a
// hair; anything beyond this is a genuine violation.
constexpr double kEdgeTolerance = 1e-3;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string quoted(const std::string& s) { return json(s).dump(); }

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

json parse_json_file(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), line_of_offset(text, e.byte), e.what());
    }
}

// Field accessors raising ParseError with a JSON-pointer style location.
const json& field(const json& obj, const char* key, const std::string& file, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key))
        throw ParseError(file, 0, where + ": missing field '" + key + "'");
    return obj.at(key);
}

double number_field(const json& obj, const char* key, const std::string& file, const std::string& where) {
    const json& v = field(obj, key, file, where);
    if (!v.is_number()) throw ParseError(file, 0, where + "/" + key + ": expected number");
    return v.get<double>();
}

std::int64_t int_field(const json& obj, const char* key, const std::string& file, const std::string& where) {
    const json& v = field(obj, key, file, where);
    if (!v.is_number_integer()) throw ParseError(file, 0, where + "/" + key + ": expected integer");
    return v.get<std::int64_t>();
}

std::string string_field(const json& obj, const char* key, const std::string& file, const std::string& where) {
    const json& v = field(obj, key, file, where);
    if (!v.is_string()) throw ParseError(file, 0, where + "/" + key + ": expected string");
    return v.get<std::string>();
}

bool bool_field_or(const json& obj, const char* key, bool fallback, const std::string& file,
                   const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ParseError(file, 0, where + "/" + key + ": expected boolean");
    return v.get<bool>();
}

std::optional<double> distance_field(const json& obj, const std::string& file, const std::string& where) {
    if (!obj.contains("distance_m") || obj.at("distance_m").is_null()) return std::nullopt;
    const json& v = obj.at("distance_m");
    if (!v.is_number()) throw ParseError(file, 0, where + "/distance_m: expected number or null");
    return v.get<double>();
}

// Pulls edges that overshoot by float noise back onto the border.
BBox snap_to_image(BBox b, int width, int height) {
    auto snap = [](double v, double limit) {
        if (v < 0.0 && v > -kEdgeTolerance) return 0.0;
        if (v > limit && v < limit + kEdgeTolerance) return limit;
        return v;
    };
    b.x1 = snap(b.x1, width);
    b.x2 = snap(b.x2, width);
    b.y1 = snap(b.y1, height);
    b.y2 = snap(b.y2, height);
    return b;
}

fs::path image_path(const fs::path& root, const std::string& scene_id) {
    return root / "images" / (scene_id + ".png");
}

std::vector<ImageBuffer> load_images(const fs::path& root, const std::vector<std::string>& ids, std::size_t workers) {
    std::vector<ImageBuffer> images(ids.size());
    parallel_for(ids.size(), workers, [&](std::size_t i) { images[i] = read_png(image_path(root, ids[i]).string()); });
    return images;
}

void write_images(const Dataset& ds, const fs::path& root, std::size_t workers) {
    ensure_dir(root / "images");
    parallel_for(ds.scenes.size(), workers, [&](std::size_t i) {
        const Scene& s = ds.scenes[i];
        write_png(s.image, image_path(root, s.scene_id).string());
    });
}

// ---- native ---------------------------------------------------------------

std::string native_object_json(const ObjectAnnotation& a) {
    std::string out = "{\"class_id\": " + std::to_string(a.class_id);
    out += ", \"x1\": " + format_fixed6(a.box.x1);
    out += ", \"y1\": " + format_fixed6(a.box.y1);
    out += ", \"x2\": " + format_fixed6(a.box.x2);
    out += ", \"y2\": " + format_fixed6(a.box.y2);
    out += ", \"distance_m\": " + (a.distance_m ? format_fixed6(*a.distance_m) : std::string("null"));
    out += ", \"is_loose\": " + std::string(a.is_loose ? "true" : "false");
    out += ", \"triggered\": " + std::string(a.triggered ? "true" : "false");
    out += "}";
    return out;
}

void write_native(const Dataset& ds, const fs::path& root) {
    std::string out = "{\n  \"format\": \"morphkit-native\",\n  \"version\": 1,\n";
    out += "  \"num_classes\": " + std::to_string(ds.num_classes()) + ",\n  \"scenes\": [";
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
        const Scene& s = ds.scenes[i];
        out += i == 0 ? "\n" : ",\n";
        out += "    {\"scene_id\": " + quoted(s.scene_id) + ", \"image\": " + quoted("images/" + s.scene_id + ".png");
        out += ", \"width\": " + std::to_string(s.image.width()) + ", \"height\": " + std::to_string(s.image.height());
        out += ", \"objects\": [";
        for (std::size_t j = 0; j < s.annotations.size(); ++j) {
            out += j == 0 ? "\n      " : ",\n      ";
            out += native_object_json(s.annotations[j]);
        }
        out += s.annotations.empty() ? "]}" : "\n    ]}";
    }
    out += ds.scenes.empty() ? "]\n}\n" : "\n  ]\n}\n";
    write_text(root / "dataset.json", out);
    write_class_names(ds.class_names, root / "classes.txt");
}

Dataset load_native(const fs::path& root, std::size_t workers) {
    const fs::path doc_path = root / "dataset.json";
    const std::string file = doc_path.string();
    const json doc = parse_json_file(doc_path);
    Dataset ds;
    ds.class_names = read_class_names(root / "classes.txt");
    if (doc.contains("num_classes") && doc.at("num_classes").get<int>() != ds.num_classes())
        throw ValidationError("num_classes in dataset.json disagrees with classes.txt");

    const json& scenes = field(doc, "scenes", file, "");
    if (!scenes.is_array()) throw ParseError(file, 0, "/scenes: expected array");
    std::vector<std::string> ids;
    std::vector<std::pair<int, int>> dims;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const json& rec = scenes[i];
        const std::string where = "/scenes/" + std::to_string(i);
        Scene scene;
        scene.scene_id = string_field(rec, "scene_id", file, where);
        dims.emplace_back(static_cast<int>(int_field(rec, "width", file, where)),
                          static_cast<int>(int_field(rec, "height", file, where)));
        const json& objects = field(rec, "objects", file, where);
        if (!objects.is_array()) throw ParseError(file, 0, where + "/objects: expected array");
        for (std::size_t j = 0; j < objects.size(); ++j) {
            const json& o = objects[j];
            const std::string w = where + "/objects/" + std::to_string(j);
            ObjectAnnotation a;
            a.class_id = static_cast<int>(int_field(o, "class_id", file, w));
            a.box = {number_field(o, "x1", file, w), number_field(o, "y1", file, w), number_field(o, "x2", file, w),
                     number_field(o, "y2", file, w)};
            a.distance_m = distance_field(o, file, w);
            a.is_loose = bool_field_or(o, "is_loose", false, file, w);
            a.triggered = bool_field_or(o, "triggered", false, file, w);
            scene.annotations.push_back(a);
        }
        ids.push_back(scene.scene_id);
        ds.scenes.push_back(std::move(scene));
    }
    for (const auto& id : ids)
        if (!valid_scene_id(id)) throw ValidationError("scene '" + id + "': invalid scene_id");
    auto images = load_images(root, ids, workers);
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
        if (images[i].width() != dims[i].first || images[i].height() != dims[i].second)
            throw ValidationError("scene '" + ids[i] + "': image size disagrees with dataset.json");
        ds.scenes[i].image = std::move(images[i]);
    }
    return ds;
}

// ---- coco-json ------------------------------------------------------------

void write_coco(const Dataset& ds, const fs::path& root) {
    std::string out = "{\n  \"images\": [";
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
        const Scene& s = ds.scenes[i];
        out += i == 0 ? "\n" : ",\n";
        out += "    {\"id\": " + std::to_string(i + 1) + ", \"file_name\": " + quoted(s.scene_id + ".png") +
               ", \"width\": " + std::to_string(s.image.width()) + ", \"height\": " + std::to_string(s.image.height()) +
               "}";
    }
    out += ds.scenes.empty() ? "],\n" : "\n  ],\n";
    out += "  \"annotations\": [";
    std::size_t ann_id = 1;
    bool first = true;
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
        for (const auto& a : ds.scenes[i].annotations) {
            out += first ? "\n" : ",\n";
            first = false;
            out += "    {\"id\": " + std::to_string(ann_id++) + ", \"image_id\": " + std::to_string(i + 1) +
                   ", \"category_id\": " + std::to_string(a.class_id + 1) + ", \"bbox\": [" + format_fixed6(a.box.x1) +
                   ", " + format_fixed6(a.box.y1) + ", " + format_fixed6(a.box.width()) + ", " +
                   format_fixed6(a.box.height()) + "], \"area\": " + format_fixed6(a.box.area()) +
                   ", \"iscrowd\": 0, \"distance_m\": " +
                   (a.distance_m ? format_fixed6(*a.distance_m) : std::string("null")) +
                   ", \"is_loose\": " + (a.is_loose ? "true" : "false") +
                   ", \"triggered\": " + (a.triggered ? "true" : "false") + "}";
        }
    }
    out += first ? "],\n" : "\n  ],\n";
    out += "  \"categories\": [";
    for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
        out += c == 0 ? "\n" : ",\n";
        out += "    {\"id\": " + std::to_string(c + 1) + ", \"name\": " + quoted(ds.class_names[c]) + "}";
    }
    out += ds.class_names.empty() ? "]\n}\n" : "\n  ]\n}\n";
    write_text(root / "annotations.json", out);
}

Dataset load_coco(const fs::path& root, std::size_t workers) {
    const fs::path doc_path = root / "annotations.json";
    const std::string file = doc_path.string();
    const json doc = parse_json_file(doc_path);

    const json& cats = field(doc, "categories", file, "");
    std::vector<std::pair<std::int64_t, std::string>> categories;
    for (std::size_t i = 0; i < cats.size(); ++i) {
        const std::string w = "/categories/" + std::to_string(i);
        categories.emplace_back(int_field(cats[i], "id", file, w), string_field(cats[i], "name", file, w));
    }
    std::sort(categories.begin(), categories.end());
    std::map<std::int64_t, int> category_index;
    Dataset ds;
    for (const auto& [id, name] : categories) {
        if (!category_index.emplace(id, ds.num_classes()).second)
            throw ParseError(file, 0, "/categories: duplicate id " + std::to_string(id));
        ds.class_names.push_back(name);
    }

    const json& images = field(doc, "images", file, "");
    std::map<std::int64_t, std::size_t> image_index;
    std::vector<std::string> ids;
    std::vector<std::pair<int, int>> dims;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::string w = "/images/" + std::to_string(i);
        const auto id = int_field(images[i], "id", file, w);
        const fs::path name = string_field(images[i], "file_name", file, w);
        if (!image_index.emplace(id, i).second) throw ParseError(file, 0, w + ": duplicate image id");
        Scene s;
        s.scene_id = name.stem().string();
        ids.push_back(s.scene_id);
        dims.emplace_back(static_cast<int>(int_field(images[i], "width", file, w)),
                          static_cast<int>(int_field(images[i], "height", file, w)));
        ds.scenes.push_back(std::move(s));
    }

    const json& anns = field(doc, "annotations", file, "");
    for (std::size_t i = 0; i < anns.size(); ++i) {
        const json& rec = anns[i];
        const std::string w = "/annotations/" + std::to_string(i);
        const auto image_id = int_field(rec, "image_id", file, w);
        const auto category_id = int_field(rec, "category_id", file, w);
        const json& bbox = field(rec, "bbox", file, w);
        if (!bbox.is_array() || bbox.size() != 4 || !std::all_of(bbox.begin(), bbox.end(), [](const json& v) { return v.is_number(); }))
            throw ParseError(file, 0, w + "/bbox: expected [x, y, w, h]");
        auto img = image_index.find(image_id);
        if (img == image_index.end()) throw ParseError(file, 0, w + ": unknown image_id " + std::to_string(image_id));
        auto cat = category_index.find(category_id);
        if (cat == category_index.end())
            throw ValidationError("scene '" + ids[img->second] + "': unknown category_id " + std::to_string(category_id));
        ObjectAnnotation a;
        const double x = bbox[0].get<double>(), y = bbox[1].get<double>();
        a.box = {x, y, x + bbox[2].get<double>(), y + bbox[3].get<double>()};
        a.class_id = cat->second;
        a.distance_m = distance_field(rec, file, w);
        a.is_loose = bool_field_or(rec, "is_loose", false, file, w);
        a.triggered = bool_field_or(rec, "triggered", false, file, w);
        ds.scenes[img->second].annotations.push_back(a);
    }

    for (const auto& id : ids)
        if (!valid_scene_id(id)) throw ValidationError("scene '" + id + "': invalid scene_id");
    auto loaded = load_images(root, ids, workers);
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
        if (loaded[i].width() != dims[i].first || loaded[i].height() != dims[i].second)
            throw ValidationError("scene '" + ids[i] + "': image size disagrees with annotations.json");
        ds.scenes[i].image = std::move(loaded[i]);
        for (auto& a : ds.scenes[i].annotations) a.box = snap_to_image(a.box, dims[i].first, dims[i].second);
    }
    return ds;
}

// ---- yolo-txt ---------------------------------------------------------------

void write_yolo(const Dataset& ds, const fs::path& root) {
    ensure_dir(root / "labels");
    write_class_names(ds.class_names, root / "classes.txt");
    for (const Scene& s : ds.scenes) {
        const double w = s.image.width(), h = s.image.height();
        std::string out;
        for (const auto& a : s.annotations) {
            out += std::to_string(a.class_id) + " " + format_fixed6(a.box.cx() / w) + " " + format_fixed6(a.box.cy() / h) +
                   " " + format_fixed6(a.box.width() / w) + " " + format_fixed6(a.box.height() / h) + "\n";
        }
        write_text(root / "labels" / (s.scene_id + ".txt"), out);
    }
}

std::vector<ObjectAnnotation> parse_yolo_labels(const fs::path& path, int width, int height) {
    std::vector<ObjectAnnotation> annos;
    if (!fs::exists(path)) return annos;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream ls(line);
        long long cls;
        double cx, cy, bw, bh;
        if (!(ls >> cls >> cx >> cy >> bw >> bh))
            throw ParseError(path.string(), lineno, "expected 'class cx cy w h'");
        std::string extra;
        if (ls >> extra) throw ParseError(path.string(), lineno, "trailing tokens after 'class cx cy w h'");
        if (cls < 0 || cls > 1'000'000) throw ParseError(path.string(), lineno, "class id out of range");
        ObjectAnnotation a;
        a.class_id = static_cast<int>(cls);
        a.box = {(cx - bw / 2.0) * width, (cy - bh / 2.0) * height, (cx + bw / 2.0) * width, (cy + bh / 2.0) * height};
        a.box = snap_to_image(a.box, width, height);
        annos.push_back(a);
    }
    return annos;
}

Dataset load_yolo(const fs::path& root, std::size_t workers) {
    Dataset ds;
    ds.class_names = read_class_names(root / "classes.txt");
    const fs::path images_dir = root / "images";
    if (!fs::is_directory(images_dir)) throw IoError("missing directory '" + images_dir.string() + "'");
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(images_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids)
        if (!valid_scene_id(id)) throw ValidationError("scene '" + id + "': invalid scene_id");
    auto images = load_images(root, ids, workers);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        Scene s;
        s.scene_id = ids[i];
        s.annotations =
            parse_yolo_labels(root / "labels" / (ids[i] + ".txt"), images[i].width(), images[i].height());
        s.image = std::move(images[i]);
        ds.scenes.push_back(std::move(s));
    }
    return ds;
}

}  // namespace

const Scene* Dataset::find(std::string_view scene_id) const noexcept {
    for (const auto& s : scenes)
        if (s.scene_id == scene_id) return &s;
    return nullptr;
}

const FrameDetections* DetectionLog::find(std::string_view scene_id) const noexcept {
    for (const auto& f : frames)
        if (f.scene_id == scene_id) return &f;
    return nullptr;
}

std::size_t DetectionLog::record_count() const noexcept {
    std::size_t n = 0;
    for (const auto& f : frames) n += f.detections.size();
    return n;
}

void DetectionLog::sort_frames() {
    std::stable_sort(frames.begin(), frames.end(),
                     [](const FrameDetections& a, const FrameDetections& b) { return a.frame_index < b.frame_index; });
}

DatasetFormat parse_dataset_format(std::string_view name) {
    if (name == "native") return DatasetFormat::native;
    if (name == "coco-json" || name == "coco") return DatasetFormat::coco_json;
    if (name == "yolo-txt" || name == "yolo") return DatasetFormat::yolo_txt;
    throw ArgumentError("unknown dataset format '" + std::string(name) + "'");
}

std::string_view format_name(DatasetFormat format) noexcept {
    switch (format) {
        case DatasetFormat::native: return "native";
        case DatasetFormat::coco_json: return "coco-json";
        case DatasetFormat::yolo_txt: return "yolo-txt";
    }
    return "native";
}

bool valid_scene_id(std::string_view id) noexcept {
    if (id.empty() || id.front() == '.') return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
               c == '.';
    });
}

std::string format_fixed6(double v) {
    if (!std::isfinite(v)) throw ArgumentError("cannot serialize non-finite value");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

void validate_scene(const Scene& scene, int num_classes) {
    const auto fail = [&](const std::string& what) { throw ValidationError("scene '" + scene.scene_id + "': " + what); };
    if (!valid_scene_id(scene.scene_id)) fail("invalid scene_id");
    if (scene.image.empty()) fail("missing image");
    const double w = scene.image.width(), h = scene.image.height();
    for (std::size_t i = 0; i < scene.annotations.size(); ++i) {
        const auto& a = scene.annotations[i];
        const std::string tag = "object " + std::to_string(i) + ": ";
        if (a.class_id < 0 || a.class_id >= num_classes)
            fail(tag + "class_id " + std::to_string(a.class_id) + " not in [0, " + std::to_string(num_classes) + ")");
        if (!std::isfinite(a.box.x1) || !std::isfinite(a.box.y1) || !std::isfinite(a.box.x2) || !std::isfinite(a.box.y2))
            fail(tag + "non-finite box coordinate");
        if (!a.box.valid()) fail(tag + "degenerate box");
        if (a.box.x1 < 0.0 || a.box.y1 < 0.0 || a.box.x2 > w || a.box.y2 > h) fail(tag + "box outside image bounds");
        if (a.distance_m && !(*a.distance_m > 0.0)) fail(tag + "distance_m must be > 0");
    }
}

void validate_dataset(const Dataset& ds) {
    std::set<std::string> seen;
    for (const auto& s : ds.scenes) {
        validate_scene(s, ds.num_classes());
        if (!seen.insert(s.scene_id).second) throw ValidationError("scene '" + s.scene_id + "': duplicate scene_id");
    }
}

void validate_detections(const DetectionLog& log, const Dataset& ds) {
    std::set<std::string> ids;
    for (const auto& s : ds.scenes) ids.insert(s.scene_id);
    for (const auto& f : log.frames) {
        if (!ids.contains(f.scene_id)) throw ValidationError("detections: unknown scene_id '" + f.scene_id + "'");
        for (const auto& d : f.detections) {
            if (d.class_id < 0 || d.class_id >= ds.num_classes())
                throw ValidationError("detections: scene '" + f.scene_id + "': class_id out of range");
        }
    }
}

Dataset load_dataset(const fs::path& root, DatasetFormat format, std::size_t workers) {
    if (!fs::is_directory(root)) throw IoError("dataset root '" + root.string() + "' is not a directory");
    Dataset ds;
    switch (format) {
        case DatasetFormat::native: ds = load_native(root, workers); break;
        case DatasetFormat::coco_json: ds = load_coco(root, workers); break;
        case DatasetFormat::yolo_txt: ds = load_yolo(root, workers); break;
    }
    validate_dataset(ds);
    return ds;
}

void write_dataset(const Dataset& ds, const fs::path& root, DatasetFormat format, std::size_t workers) {
    validate_dataset(ds);
    ensure_dir(root);
    write_images(ds, root, workers);
    switch (format) {
        case DatasetFormat::native: write_native(ds, root); break;
        case DatasetFormat::coco_json: write_coco(ds, root); break;
        case DatasetFormat::yolo_txt: write_yolo(ds, root); break;
    }
}

std::vector<std::string> read_class_names(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open class map '" + path.string() + "'");
    std::vector<std::string> names;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            // A trailing blank line is tolerated; an interior one would shift indices.
            if (in.peek() == std::ifstream::traits_type::eof()) break;
            throw ParseError(path.string(), lineno, "empty class name");
        }
        names.push_back(line);
    }
    return names;
}

void write_class_names(const std::vector<std::string>& names, const fs::path& path) {
    std::string out;
    for (const auto& n : names) {
        if (n.empty() || n.find('\n') != std::string::npos) throw ArgumentError("invalid class name '" + n + "'");
        out += n + "\n";
    }
    write_text(path, out);
}

DetectionLog load_detections(const fs::path& path, const Dataset* paired) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open detections '" + path.string() + "'");
    DetectionLog log;
    std::map<std::string, std::size_t> index;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
        const std::string file = path.string();
        const auto require_number = [&](const char* key) {
            if (!rec.is_object() || !rec.contains(key) || !rec.at(key).is_number())
                throw ParseError(file, lineno, std::string("missing or non-numeric field '") + key + "'");
            return rec.at(key).get<double>();
        };
        if (!rec.is_object() || !rec.contains("scene_id") || !rec.at("scene_id").is_string())
            throw ParseError(file, lineno, "missing field 'scene_id'");
        if (!rec.contains("frame_index") || !rec.at("frame_index").is_number_integer())
            throw ParseError(file, lineno, "missing integer field 'frame_index'");
        if (!rec.contains("class_id") || !rec.at("class_id").is_number_integer())
            throw ParseError(file, lineno, "missing integer field 'class_id'");
        Detection d;
        d.box = {require_number("x1"), require_number("y1"), require_number("x2"), require_number("y2")};
        d.class_id = rec.at("class_id").get<int>();
        d.confidence = require_number("confidence");
        const std::string scene_id = rec.at("scene_id").get<std::string>();
        const auto frame_index = rec.at("frame_index").get<std::int64_t>();
        if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
            throw ValidationError(file + ":" + std::to_string(lineno) + ": confidence " + std::to_string(d.confidence) +
                                  " outside [0,1]");
        if (!d.box.valid()) throw ValidationError(file + ":" + std::to_string(lineno) + ": degenerate box");
        auto [it, inserted] = index.emplace(scene_id, log.frames.size());
        if (inserted) log.frames.push_back({scene_id, frame_index, {}});
        FrameDetections& frame = log.frames[it->second];
        if (frame.frame_index != frame_index)
            throw ValidationError(file + ":" + std::to_string(lineno) + ": scene '" + scene_id +
                                  "' has conflicting frame_index values");
        frame.detections.push_back(d);
    }
    log.sort_frames();
    if (paired) validate_detections(log, *paired);
    return log;
}

void write_detections(const DetectionLog& log, const fs::path& path) {
    DetectionLog ordered = log;
    ordered.sort_frames();
    std::string out;
    for (const auto& f : ordered.frames) {
        for (const auto& d : f.detections) {
            if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
                throw ValidationError("detections: confidence outside [0,1] for scene '" + f.scene_id + "'");
            out += "{\"scene_id\": " + quoted(f.scene_id) + ", \"frame_index\": " + std::to_string(f.frame_index) +
                   ", \"x1\": " + format_fixed6(d.box.x1) + ", \"y1\": " + format_fixed6(d.box.y1) +
                   ", \"x2\": " + format_fixed6(d.box.x2) + ", \"y2\": " + format_fixed6(d.box.y2) +
                   ", \"class_id\": " + std::to_string(d.class_id) + ", \"confidence\": " + format_fixed6(d.confidence) +
                   "}\n";
        }
    }
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    write_text(path, out);
}

}  // namespace morphkit
