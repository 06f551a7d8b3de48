#include "collab/export.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "collab/error.hpp"

namespace collab {

using ojson = nlohmann::ordered_json;

DatasetMode dataset_mode_from_string(std::string_view s) {
    if (s == "rec") return DatasetMode::REC;
    if (s == "reg") return DatasetMode::REG;
    throw ConfigError("mode must be 'rec' or 'reg', got '" + std::string(s) + "'");
}

std::string UniquenessReport::to_json() const {
    ojson doc = ojson::object();
    doc["valid"] = ok();
    doc["violations"] = ojson::array();
    for (const auto& v : violations) {
        ojson item;
        item["image_id"] = v.image_id;
        item["category"] = v.category;
        item["expression"] = v.expression;
        item["instance_ids"] = v.instance_ids;
        doc["violations"].push_back(std::move(item));
    }
    return doc.dump(2);
}

UniquenessReport validate_uniqueness(std::span<const DatasetRecord> records) {
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<std::string>> seen;
    for (const auto& r : records) {
        seen[{r.image_id, r.category, r.expression}].push_back(r.provenance.instance_id);
    }
    UniquenessReport report;
    for (auto& [key, ids] : seen) {
        if (ids.size() < 2) continue;
        auto& [image_id, category, expression] = key;
        report.violations.push_back(DuplicateExpression{image_id, category, expression, std::move(ids)});
    }
    return report;
}

std::string to_jsonl_line(const DatasetRecord& r) {
    ojson j;
    j["image_id"] = r.image_id;
    j["image_path"] = r.image_path;
    j["bbox"] = {r.bbox.x_min(), r.bbox.y_min(), r.bbox.x_max(), r.bbox.y_max()};
    j["category"] = r.category;
    j["expression"] = r.expression;
    ojson prov;
    prov["instance_id"] = r.provenance.instance_id;
    prov["backends"] = r.provenance.backends;
    prov["merger"] = r.provenance.merger;
    prov["spa_path"] = r.provenance.spa_path;
    j["provenance"] = std::move(prov);
    return j.dump(-1, ' ', false, ojson::error_handler_t::strict);
}

DatasetRecord parse_jsonl_line(std::string_view line) {
    ojson j;
    try {
        j = ojson::parse(line);
        const auto& box = j.at("bbox");
        if (!box.is_array() || box.size() != 4) throw SchemaError("bbox must have four numbers");
        const auto& prov = j.at("provenance");
        DatasetRecord r{j.at("image_id").get<std::string>(),
                        j.at("image_path").get<std::string>(),
                        BBox(box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()),
                        j.at("category").get<std::string>(),
                        j.at("expression").get<std::string>(),
                        Provenance{prov.at("instance_id").get<std::string>(),
                                   prov.at("backends").get<std::vector<std::string>>(),
                                   prov.at("merger").get<std::string>(),
                                   prov.at("spa_path").get<std::vector<std::string>>()}};
        return r;
    } catch (const ojson::exception& e) {
        throw SchemaError(std::string("dataset record: ") + e.what());
    }
}

void write_dataset(std::span<const DatasetRecord> records, std::ostream& out, DatasetMode mode) {
    for (const auto& r : records) {
        if (r.expression.empty()) {
            throw SchemaError("record " + r.provenance.instance_id + " has an empty expression");
        }
    }
    if (mode == DatasetMode::REC) {
        const auto report = validate_uniqueness(records);
        if (!report.ok()) {
            const auto& v = report.violations.front();
            throw UniquenessViolation(std::to_string(report.violations.size()) +
                                      " duplicate expression(s); first: image '" + v.image_id + "', category '" +
                                      v.category + "', expression '" + v.expression + "'");
        }
    }
    for (const auto& r : records) out << to_jsonl_line(r) << '\n';
    if (!out) throw IoError("failed writing dataset");
}

void write_dataset(std::span<const DatasetRecord> records, const std::string& path, DatasetMode mode) {
    // Validate before touching the file so a refused REC set leaves nothing behind.
    std::ostringstream buffer;
    write_dataset(records, buffer, mode);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << buffer.str();
    if (!out.flush()) throw IoError("failed writing '" + path + "'");
}

std::vector<DatasetRecord> read_dataset(std::istream& in) {
    std::vector<DatasetRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(parse_jsonl_line(line));
    }
    return out;
}

std::vector<DatasetRecord> read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_dataset(in);
}

}  // namespace collab
