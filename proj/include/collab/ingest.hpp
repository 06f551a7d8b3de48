#pragma once

#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "collab/core.hpp"

namespace collab {

struct Detection {
    std::string instance_id;
    BBox bbox;
    std::string category;
    double confidence{0.0};
};

struct DetectionRecord {
    std::string image_id;
    std::string image_path;
    int width{0};
    int height{0};
    std::vector<Detection> detections;

    Frame frame() const { return Frame(width, height); }
};

/// Category -> Subject/Object lookup. Keys are stored normalized (trimmed,
/// lowercased); anything unmapped classifies as Unknown.
class RoleTaxonomy {
public:
    RoleTaxonomy() = default;

    /// Human, Animal, Robot, Industrial Machine (+ "person") as subjects;
    /// Utensil, Container, Tool, Food, Clothing as objects.
    static RoleTaxonomy defaults();

    /// Parses `{"subject": [str], "object": [str]}`.
    static RoleTaxonomy from_json(std::string_view text);
    static RoleTaxonomy load(const std::string& path);

    void add(std::string_view category, Role role);
    const std::map<std::string, Role>& entries() const noexcept { return entries_; }

private:
    std::map<std::string, Role> entries_;
};

struct CropSpec {
    std::string image_path;
    BBox bbox;
    double padding{0.0};

    friend bool operator==(const CropSpec&, const CropSpec&) = default;
};

/// Reads the detection JSON document (top-level array of image entries).
/// Instance ids are "{image_id}#{index}" in input order. Throws SchemaError
/// with a JSON path on malformed input and GeometryError on bad boxes.
std::vector<DetectionRecord> parse_detections(std::istream& in);
std::vector<DetectionRecord> parse_detections(std::string_view text);

std::vector<Instance> to_instances(const DetectionRecord& rec, const RoleTaxonomy& taxonomy);

// Keeps confidence strictly greater than threshold, order preserved.
std::vector<Instance> filter_by_confidence(const std::vector<Instance>& instances, double threshold = 0.5);

Role classify_role(std::string_view category, const RoleTaxonomy& taxonomy);

std::string normalize_category(std::string_view category);

CropSpec make_crop_spec(const Instance& inst, const DetectionRecord& rec, double padding = 0.0);

}  // namespace collab
