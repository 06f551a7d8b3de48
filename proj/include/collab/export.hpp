#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "collab/core.hpp"

namespace collab {

struct Provenance {
    std::string instance_id;
    std::vector<std::string> backends;
    std::string merger;
    std::vector<std::string> spa_path;  // rendered labels, root first; empty when SPA left it alone

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct DatasetRecord {
    std::string image_id;
    std::string image_path;
    BBox bbox;
    std::string category;
    std::string expression;
    Provenance provenance;

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

enum class DatasetMode { REC, REG };

DatasetMode dataset_mode_from_string(std::string_view s);  // "rec" | "reg"

struct DuplicateExpression {
    std::string image_id;
    std::string category;
    std::string expression;
    std::vector<std::string> instance_ids;
};

struct UniquenessReport {
    std::vector<DuplicateExpression> violations;

    bool ok() const noexcept { return violations.empty(); }
    std::string to_json() const;
};

/// Every (image_id, category, expression) triple held by more than one record.
UniquenessReport validate_uniqueness(std::span<const DatasetRecord> records);

// One JSON line, keys in the fixed order image_id, image_path, bbox,
// category, expression, provenance.
std::string to_jsonl_line(const DatasetRecord& r);
DatasetRecord parse_jsonl_line(std::string_view line);

/// REC mode refuses (UniquenessViolation) sets that fail validation; REG
/// writes duplicates as-is. Throws IoError when the file cannot be written.
void write_dataset(std::span<const DatasetRecord> records, std::ostream& out, DatasetMode mode);
void write_dataset(std::span<const DatasetRecord> records, const std::string& path, DatasetMode mode);

std::vector<DatasetRecord> read_dataset(std::istream& in);
std::vector<DatasetRecord> read_dataset(const std::string& path);

}  // namespace collab
