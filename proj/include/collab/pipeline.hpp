#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "collab/backends.hpp"
#include "collab/cmmi.hpp"
#include "collab/export.hpp"
#include "collab/ingest.hpp"
#include "collab/spa.hpp"
#include "collab/stats.hpp"

namespace collab {

struct PipelineConfig {
    std::vector<BackendSpec> describers;
    BackendSpec merger;
    double confidence_threshold{0.5};
    SpaConfig spa;
    int workers{1};
    std::uint64_t seed{0};
    std::string taxonomy_path;  // empty = built-in taxonomy
    std::string input_path;
    std::string output_path;
    double crop_padding{0.0};
    std::string merge_instruction;
    int merge_quorum{0};
    std::size_t histogram_bin_width{2};
    DatasetMode mode{DatasetMode::REC};

    /// Throws ConfigError naming the offending field.
    static PipelineConfig from_json(std::string_view text);
    static PipelineConfig load(const std::string& path);

    void validate() const;

    // Rewrites every backend as a mock seeded with `seed`.
    void force_mock();
};

// -- intermediate document shared by the stage subcommands ------------------

struct InstanceEntry {
    Instance instance;
    std::vector<Candidate> candidates;
    std::string merger;
    double merge_elapsed{0.0};
    std::vector<std::string> spa_path;
};

struct ImageEntry {
    std::string image_id;
    std::string image_path;
    int width{0};
    int height{0};
    std::vector<InstanceEntry> instances;

    Frame frame() const { return Frame(width, height); }
};

struct InstancesDocument {
    std::vector<ImageEntry> images;
    std::size_t instances_total{0};    // before the confidence filter
    std::size_t instances_dropped{0};
    std::size_t duplicate_groups{0};
    std::size_t ordinal_suffixes{0};
    std::size_t backend_failures{0};

    std::string to_json() const;
    static InstancesDocument from_json(std::string_view text);

    std::size_t instance_count() const noexcept;
    // Sorts images by image_id and instances by instance_id.
    void sort();
};

struct RunSummary {
    std::size_t images{0};
    std::size_t instances_total{0};
    std::size_t instances_kept{0};
    std::size_t instances_dropped{0};
    std::size_t duplicate_groups{0};
    std::size_t ordinal_suffixes{0};
    std::size_t backend_failures{0};
    std::size_t records{0};

    std::string to_json() const;
};

InstancesDocument ingest_stage(const std::vector<DetectionRecord>& records, const RoleTaxonomy& taxonomy,
                               double confidence_threshold);

/// CMMI over every instance with a bounded pool of `workers` threads. Hard
/// failures surface as StageError("generate", instance_id, ...).
InstancesDocument generate_stage(InstancesDocument doc, std::span<const std::shared_ptr<Backend>> describers,
                                 Backend& merger, const MergeOptions& merge, double crop_padding, int workers);

InstancesDocument augment_stage(InstancesDocument doc, const SpaConfig& spa);

std::vector<DatasetRecord> export_records(const InstancesDocument& doc);

struct StatsReport {
    std::vector<BackendStats> backends;
    std::vector<std::pair<std::string, Histogram>> histograms;
    std::optional<std::string> merger;
    double merge_mean_time{0.0};
    std::size_t merge_count{0};
    std::optional<std::uint64_t> throughput_items_per_day;

    std::string to_json() const;
    std::string histogram_csv() const;
};

StatsReport build_stats(std::span<const TimedDescription> describer_outputs,
                        std::span<const TimedDescription> merger_outputs, std::size_t bin_width);
StatsReport stats_stage(const InstancesDocument& doc, std::size_t bin_width);

/// Reads a JSON-lines corpus of {"backend", "text", "elapsed"} objects.
std::vector<TimedDescription> parse_corpus_jsonl(std::string_view text);

std::string stats_path_for(const std::string& output_path);
std::string histogram_path_for(const std::string& output_path);

/// ingest -> generate -> augment -> export -> stats. Writes the dataset to
/// cfg.output_path plus the stats report and histogram CSV beside it.
RunSummary run_pipeline(const PipelineConfig& cfg);

std::vector<std::shared_ptr<Backend>> make_describers(const PipelineConfig& cfg);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace collab
