#include "collab/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "collab/error.hpp"

namespace collab {

using json = nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw SchemaError(path + ": missing field '" + key + "'");
    }
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_string()) {
        throw SchemaError(path + "." + key + ": expected string");
    }
    return v.get<std::string>();
}

int require_positive_int(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_number_integer()) {
        throw SchemaError(path + "." + key + ": expected integer");
    }
    const auto n = v.get<long long>();
    if (n <= 0) {
        throw GeometryError(path + "." + key + ": image dimensions must be positive");
    }
    return static_cast<int>(n);
}

DetectionRecord parse_record(const json& entry, const std::string& path) {
    if (!entry.is_object()) {
        throw SchemaError(path + ": expected object");
    }
    DetectionRecord rec;
    rec.image_id = require_string(entry, "image_id", path);
    rec.image_path = require_string(entry, "image_path", path);
    rec.width = require_positive_int(entry, "width", path);
    rec.height = require_positive_int(entry, "height", path);

    const json& dets = require(entry, "detections", path);
    if (!dets.is_array()) {
        throw SchemaError(path + ".detections: expected array");
    }
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const std::string dpath = path + ".detections[" + std::to_string(i) + "]";
        const json& d = dets[i];
        if (!d.is_object()) {
            throw SchemaError(dpath + ": expected object");
        }
        const json& box = require(d, "bbox", dpath);
        if (!box.is_array() || box.size() != 4 ||
            !std::all_of(box.begin(), box.end(), [](const json& v) { return v.is_number(); })) {
            throw SchemaError(dpath + ".bbox: expected [x_min, y_min, x_max, y_max]");
        }
        const std::string category = require_string(d, "category", dpath);
        const json& conf = require(d, "confidence", dpath);
        if (!conf.is_number()) {
            throw SchemaError(dpath + ".confidence: expected number");
        }
        const double c = conf.get<double>();
        if (!(c >= 0.0 && c <= 1.0)) {
            throw SchemaError(dpath + ".confidence: must lie in [0, 1]");
        }

        const double x0 = box[0].get<double>(), y0 = box[1].get<double>();
        const double x1 = box[2].get<double>(), y1 = box[3].get<double>();
        std::optional<BBox> bbox;
        try {
            bbox.emplace(x0, y0, x1, y1);
        } catch (const GeometryError& e) {
            throw GeometryError("detection " + std::to_string(i) + " of image '" + rec.image_id + "': " + e.what());
        }
        if (x1 > rec.width || y1 > rec.height) {
            throw GeometryError("detection " + std::to_string(i) + " of image '" + rec.image_id +
                                "': bbox exceeds image bounds");
        }
        rec.detections.push_back(
            Detection{rec.image_id + "#" + std::to_string(i), *bbox, category, c});
    }
    return rec;
}

}  // namespace

std::vector<DetectionRecord> parse_detections(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("$: invalid JSON: ") + e.what());
    }
    if (!doc.is_array()) {
        throw SchemaError("$: expected top-level array");
    }
    std::vector<DetectionRecord> out;
    out.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        out.push_back(parse_record(doc[i], "$[" + std::to_string(i) + "]"));
    }
    return out;
}

std::vector<DetectionRecord> parse_detections(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_detections(in);
}

std::string normalize_category(std::string_view category) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t b = 0, e = category.size();
    while (b < e && is_space(category[b])) ++b;
    while (e > b && is_space(category[e - 1])) --e;
    std::string out(category.substr(b, e - b));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

RoleTaxonomy RoleTaxonomy::defaults() {
    RoleTaxonomy t;
    for (const char* c : {"human", "person", "animal", "robot", "industrial machine"}) t.add(c, Role::Subject);
    for (const char* c : {"utensil", "container", "tool", "food", "clothing"}) t.add(c, Role::Object);
    return t;
}

void RoleTaxonomy::add(std::string_view category, Role role) {
    if (role == Role::Unknown) {
        throw std::invalid_argument("taxonomy entries must be subject or object");
    }
    auto key = normalize_category(category);
    auto [it, inserted] = entries_.emplace(key, role);
    if (!inserted && it->second != role) {
        throw SchemaError("taxonomy: category '" + key + "' listed as both subject and object");
    }
}

RoleTaxonomy RoleTaxonomy::from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("taxonomy: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw SchemaError("taxonomy: expected object with 'subject' and 'object' arrays");
    }
    RoleTaxonomy t;
    for (auto [key, role] : {std::pair{"subject", Role::Subject}, std::pair{"object", Role::Object}}) {
        auto it = doc.find(key);
        if (it == doc.end()) continue;
        if (!it->is_array()) {
            throw SchemaError(std::string("taxonomy.") + key + ": expected array");
        }
        for (const auto& v : *it) {
            if (!v.is_string()) {
                throw SchemaError(std::string("taxonomy.") + key + ": expected array of strings");
            }
            t.add(v.get<std::string>(), role);
        }
    }
    return t;
}

RoleTaxonomy RoleTaxonomy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open taxonomy file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

Role classify_role(std::string_view category, const RoleTaxonomy& taxonomy) {
    const auto& entries = taxonomy.entries();
    auto it = entries.find(normalize_category(category));
    return it == entries.end() ? Role::Unknown : it->second;
}

std::vector<Instance> to_instances(const DetectionRecord& rec, const RoleTaxonomy& taxonomy) {
    std::vector<Instance> out;
    out.reserve(rec.detections.size());
    for (const auto& d : rec.detections) {
        out.push_back(Instance{d.instance_id, rec.image_id, d.bbox, d.category, d.confidence,
                               classify_role(d.category, taxonomy), ""});
    }
    return out;
}

std::vector<Instance> filter_by_confidence(const std::vector<Instance>& instances, double threshold) {
    std::vector<Instance> out;
    std::copy_if(instances.begin(), instances.end(), std::back_inserter(out),
                 [threshold](const Instance& i) { return i.confidence > threshold; });
    return out;
}

CropSpec make_crop_spec(const Instance& inst, const DetectionRecord& rec, double padding) {
    if (inst.image_id != rec.image_id) {
        throw std::invalid_argument("instance '" + inst.instance_id + "' does not belong to image '" +
                                    rec.image_id + "'");
    }
    if (!(padding >= 0.0)) {
        throw std::invalid_argument("crop padding must be >= 0");
    }
    const auto& b = inst.bbox;
    const double w = rec.width, h = rec.height;
    return CropSpec{rec.image_path,
                    BBox(std::max(0.0, b.x_min() - padding), std::max(0.0, b.y_min() - padding),
                         std::min(w, b.x_max() + padding), std::min(h, b.y_max() + padding)),
                    padding};
}

}  // namespace collab
