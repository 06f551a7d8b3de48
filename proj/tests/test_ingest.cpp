#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "collab/error.hpp"
#include "collab/ingest.hpp"
#include "collab/pipeline.hpp"

using namespace collab;

namespace {

const char* kOneImage = R"([
  {"image_id": "img1", "image_path": "a.jpg", "width": 100, "height": 80,
   "detections": [
     {"bbox": [0, 0, 10, 10], "category": "Person", "confidence": 0.9},
     {"bbox": [20, 20, 40, 50], "category": "cup", "confidence": 0.5},
     {"bbox": [50, 10, 100, 80], "category": "car", "confidence": 0.51}
   ]}
])";

Instance make_instance(std::string id, double conf) {
    return Instance{std::move(id), "img", BBox(0, 0, 1, 1), "cup", conf, Role::Unknown, {}};
}

}  // namespace

TEST(ParseDetections, OneImageThreeBoxes) {
    const auto recs = parse_detections(kOneImage);
    ASSERT_EQ(recs.size(), 1u);
    ASSERT_EQ(recs[0].detections.size(), 3u);
    EXPECT_EQ(recs[0].detections[0].instance_id, "img1#0");
    EXPECT_EQ(recs[0].detections[1].instance_id, "img1#1");
    EXPECT_EQ(recs[0].detections[2].instance_id, "img1#2");
    EXPECT_EQ(recs[0].width, 100);
    EXPECT_EQ(recs[0].detections[2].bbox, BBox(50, 10, 100, 80));
}

TEST(ParseDetections, EmptyDetectionsIsNotAnError) {
    const auto recs = parse_detections(R"([{"image_id": "x", "image_path": "x.jpg", "width": 4, "height": 4,
                                            "detections": []}])");
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_TRUE(recs[0].detections.empty());
    EXPECT_TRUE(parse_detections("[]").empty());
}

TEST(ParseDetections, InvertedBoxNamesIndex) {
    const char* doc = R"([{"image_id": "img1", "image_path": "a.jpg", "width": 100, "height": 100,
        "detections": [{"bbox": [0, 0, 10, 10], "category": "a", "confidence": 0.9},
                       {"bbox": [30, 0, 20, 10], "category": "b", "confidence": 0.9}]}])";
    try {
        parse_detections(doc);
        FAIL() << "expected GeometryError";
    } catch (const GeometryError& e) {
        EXPECT_NE(std::string(e.what()).find("detection 1"), std::string::npos) << e.what();
    }
}

TEST(ParseDetections, OutOfBoundsBox) {
    const char* doc = R"([{"image_id": "i", "image_path": "a.jpg", "width": 50, "height": 50,
        "detections": [{"bbox": [0, 0, 51, 10], "category": "a", "confidence": 0.9}]}])";
    EXPECT_THROW(parse_detections(doc), GeometryError);
}

TEST(ParseDetections, SchemaErrorsCarryPath) {
    const char* missing = R"([{"image_id": "i", "image_path": "a.jpg", "width": 50, "height": 50,
        "detections": [{"bbox": [0, 0, 5, 5], "confidence": 0.9}]}])";
    try {
        parse_detections(missing);
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("$[0].detections[0]"), std::string::npos) << what;
        EXPECT_NE(what.find("category"), std::string::npos) << what;
    }
    EXPECT_THROW(parse_detections("{}"), SchemaError);
    EXPECT_THROW(parse_detections("not json"), SchemaError);
    EXPECT_THROW(parse_detections(R"([{"image_id": "i", "image_path": "a", "width": "50", "height": 5,
                                       "detections": []}])"),
                 SchemaError);
    EXPECT_THROW(parse_detections(R"([{"image_id": "i", "image_path": "a", "width": 50, "height": 5,
                                       "detections": [{"bbox": [0,0,1], "category": "a", "confidence": 1}]}])"),
                 SchemaError);
    EXPECT_THROW(parse_detections(R"([{"image_id": "i", "image_path": "a", "width": 50, "height": 5,
                                       "detections": [{"bbox": [0,0,1,1], "category": "a", "confidence": 1.5}]}])"),
                 SchemaError);
}

TEST(FilterByConfidence, StrictInequality) {
    const std::vector<Instance> xs{make_instance("a", 0.9), make_instance("b", 0.5), make_instance("c", 0.51)};
    const auto kept = filter_by_confidence(xs, 0.5);
    ASSERT_EQ(kept.size(), 2u);
    EXPECT_EQ(kept[0].instance_id, "a");
    EXPECT_EQ(kept[1].instance_id, "c");
}

TEST(FilterByConfidence, Bounds) {
    const std::vector<Instance> xs{make_instance("a", 0.2), make_instance("b", 1.0), make_instance("c", 0.01)};
    EXPECT_EQ(filter_by_confidence(xs, 0.0), xs);
    EXPECT_TRUE(filter_by_confidence(xs, 1.0).empty());
}

TEST(FilterByConfidence, SubsetAndIdempotent) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Instance> xs;
        const int n = static_cast<int>(u(rng) * 20);
        for (int i = 0; i < n; ++i) xs.push_back(make_instance("i" + std::to_string(i), u(rng)));
        const double t = u(rng);
        const auto once = filter_by_confidence(xs, t);
        EXPECT_EQ(filter_by_confidence(once, t), once);
        for (const auto& k : once) {
            EXPECT_GT(k.confidence, t);
            EXPECT_NE(std::find(xs.begin(), xs.end(), k), xs.end());
        }
        const auto expected = std::count_if(xs.begin(), xs.end(), [t](const Instance& i) { return i.confidence > t; });
        EXPECT_EQ(static_cast<long>(once.size()), expected);
    }
}

TEST(ClassifyRole, DefaultTaxonomy) {
    const auto tax = RoleTaxonomy::defaults();
    EXPECT_EQ(classify_role("person", tax), Role::Subject);
    EXPECT_EQ(classify_role("Food ", tax), Role::Object);
    EXPECT_EQ(classify_role("unicycle", tax), Role::Unknown);
    EXPECT_EQ(classify_role("  Industrial Machine", tax), Role::Subject);
}

TEST(RoleTaxonomy, FromJson) {
    const auto tax = RoleTaxonomy::from_json(R"({"subject": ["Pilot"], "object": ["Kettle "]})");
    EXPECT_EQ(classify_role("pilot", tax), Role::Subject);
    EXPECT_EQ(classify_role("KETTLE", tax), Role::Object);
    EXPECT_EQ(classify_role("person", tax), Role::Unknown);
    EXPECT_THROW(RoleTaxonomy::from_json(R"({"subject": ["a"], "object": ["a"]})"), SchemaError);
    EXPECT_THROW(RoleTaxonomy::from_json(R"({"subject": [1]})"), SchemaError);
    EXPECT_THROW(RoleTaxonomy::load("/nonexistent/taxonomy.json"), IoError);
}

TEST(RoleTaxonomy, ShippedFileMatchesDefaults) {
    const auto shipped = RoleTaxonomy::load(COLLAB_TEST_DATA "/../../data/taxonomy.json");
    const auto defaults = RoleTaxonomy::defaults();
    for (const auto& [category, role] : defaults.entries()) {
        EXPECT_EQ(classify_role(category, shipped), role) << category;
    }
}

TEST(ToInstances, AttachesRolesAndIds) {
    const auto recs = parse_detections(kOneImage);
    const auto xs = to_instances(recs[0], RoleTaxonomy::defaults());
    ASSERT_EQ(xs.size(), 3u);
    EXPECT_EQ(xs[0].image_id, "img1");
    EXPECT_EQ(xs[0].role, Role::Subject);
    EXPECT_EQ(xs[2].role, Role::Unknown);
    EXPECT_EQ(xs[1].instance_id, "img1#1");
}

TEST(MakeCropSpec, Examples) {
    DetectionRecord rec{"img", "img.png", 100, 100, {}};
    auto inst = make_instance("img#0", 0.9);
    inst.bbox = BBox(10, 10, 20, 20);
    EXPECT_EQ(make_crop_spec(inst, rec, 0).bbox, BBox(10, 10, 20, 20));
    inst.bbox = BBox(0, 0, 20, 20);
    EXPECT_EQ(make_crop_spec(inst, rec, 5).bbox, BBox(0, 0, 25, 25));
    inst.bbox = BBox(90, 90, 100, 100);
    EXPECT_EQ(make_crop_spec(inst, rec, 5).bbox, BBox(85, 85, 100, 100));
    EXPECT_EQ(make_crop_spec(inst, rec, 5).image_path, "img.png");
}

TEST(MakeCropSpec, AlwaysInsideImage) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 2000; ++i) {
        const int w = 1 + static_cast<int>(u(rng) * 2000), h = 1 + static_cast<int>(u(rng) * 2000);
        DetectionRecord rec{"img", "p", w, h, {}};
        const double x0 = u(rng) * (w - 0.5), y0 = u(rng) * (h - 0.5);
        const double x1 = x0 + 0.01 + u(rng) * (w - x0 - 0.01), y1 = y0 + 0.01 + u(rng) * (h - y0 - 0.01);
        auto inst = make_instance("img#0", 0.9);
        inst.bbox = BBox(x0, y0, x1, y1);
        const auto spec = make_crop_spec(inst, rec, u(rng) * 300);
        EXPECT_GE(spec.bbox.x_min(), 0);
        EXPECT_GE(spec.bbox.y_min(), 0);
        EXPECT_LE(spec.bbox.x_max(), w);
        EXPECT_LE(spec.bbox.y_max(), h);
        EXPECT_LE(spec.bbox.x_min(), x0);
        EXPECT_GE(spec.bbox.x_max(), x1);
    }
}

TEST(MakeCropSpec, RejectsForeignInstance) {
    DetectionRecord rec{"other", "p", 10, 10, {}};
    EXPECT_THROW(make_crop_spec(make_instance("img#0", 0.9), rec, 0), std::invalid_argument);
}

TEST(ConfidenceFixture, KeepsOnlyAboveHalf) {
    const auto recs = parse_detections(read_file(COLLAB_TEST_DATA "/confidence.json"));
    const auto kept = filter_by_confidence(to_instances(recs[0], RoleTaxonomy::defaults()), 0.5);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_DOUBLE_EQ(kept[0].confidence, 0.51);
}
