// collab: command-line front end for the referring-expression data engine.
//
// Every stage reads and writes files so stages can be chained by hand:
//   collab ingest   --input detections.json --output instances.json
//   collab generate --config cfg.json --input instances.json --output described.json
//   collab augment  --input described.json --output augmented.json
//   collab export   --input augmented.json --output dataset.jsonl --mode rec
// or all at once with `collab run --config cfg.json`.
//
// Exit codes: 0 success, 1 validation failure, 2 config/usage error,
// 3 runtime/backend failure.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "collab/error.hpp"
#include "collab/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Options {
    std::string config;
    std::string input;
    std::string output;
    std::string mode;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    bool mock{false};
    std::string taxonomy;
    std::optional<double> threshold;
    std::size_t bin_width{0};
    std::string csv;
};

collab::PipelineConfig load_config(const Options& o, bool required) {
    collab::PipelineConfig cfg;
    if (!o.config.empty()) {
        cfg = collab::PipelineConfig::load(o.config);
    } else if (required) {
        throw collab::ConfigError("--config is required for this command");
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.workers) cfg.workers = *o.workers;
    if (!o.input.empty()) cfg.input_path = o.input;
    if (!o.output.empty()) cfg.output_path = o.output;
    if (!o.mode.empty()) cfg.mode = collab::dataset_mode_from_string(o.mode);
    if (!o.taxonomy.empty()) cfg.taxonomy_path = o.taxonomy;
    if (o.threshold) cfg.confidence_threshold = *o.threshold;
    if (o.bin_width > 0) cfg.histogram_bin_width = o.bin_width;
    if (o.mock) cfg.force_mock();
    return cfg;
}

const std::string& need(const std::string& value, const char* flag) {
    if (value.empty()) throw collab::ConfigError(std::string("missing ") + flag);
    return value;
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
    } else {
        collab::write_file(path, content);
    }
}

int cmd_ingest(const Options& o) {
    const auto cfg = load_config(o, false);
    if (!(cfg.confidence_threshold >= 0.0 && cfg.confidence_threshold <= 1.0)) {
        throw collab::ConfigError("threshold must lie in [0, 1]");
    }
    const auto taxonomy =
        cfg.taxonomy_path.empty() ? collab::RoleTaxonomy::defaults() : collab::RoleTaxonomy::load(cfg.taxonomy_path);
    const auto records = collab::parse_detections(collab::read_file(need(cfg.input_path, "--input")));
    emit(cfg.output_path, collab::ingest_stage(records, taxonomy, cfg.confidence_threshold).to_json());
    return kExitOk;
}

int cmd_generate(const Options& o) {
    const auto cfg = load_config(o, true);
    cfg.validate();
    auto doc = collab::InstancesDocument::from_json(collab::read_file(need(cfg.input_path, "--input")));
    auto describers = collab::make_describers(cfg);
    collab::Backend merger(cfg.merger, nullptr, cfg.seed);
    doc = collab::generate_stage(std::move(doc), describers, merger,
                                 collab::MergeOptions{cfg.merge_instruction, cfg.merge_quorum}, cfg.crop_padding,
                                 cfg.workers);
    emit(cfg.output_path, doc.to_json());
    return kExitOk;
}

int cmd_augment(const Options& o) {
    const auto cfg = load_config(o, false);
    cfg.spa.validate();
    auto doc = collab::InstancesDocument::from_json(collab::read_file(need(cfg.input_path, "--input")));
    emit(cfg.output_path, collab::augment_stage(std::move(doc), cfg.spa).to_json());
    return kExitOk;
}

int cmd_export(const Options& o) {
    const auto cfg = load_config(o, false);
    const auto doc = collab::InstancesDocument::from_json(collab::read_file(need(cfg.input_path, "--input")));
    const auto records = collab::export_records(doc);
    if (cfg.output_path.empty() || cfg.output_path == "-") {
        collab::write_dataset(records, std::cout, cfg.mode);
    } else {
        collab::write_dataset(records, cfg.output_path, cfg.mode);
    }
    return kExitOk;
}

int cmd_validate(const Options& o) {
    const auto records = collab::read_dataset(need(o.input, "--input"));
    const auto report = collab::validate_uniqueness(records);
    std::cout << report.to_json() << "\n";
    return report.ok() ? kExitOk : kExitValidation;
}

int cmd_stats(const Options& o) {
    const auto cfg = load_config(o, false);
    const std::string text = collab::read_file(need(cfg.input_path, "--input"));
    collab::StatsReport report;
    auto parsed = nlohmann::json::parse(text, nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object() && parsed.contains("images")) {
        report = collab::stats_stage(collab::InstancesDocument::from_json(text), cfg.histogram_bin_width);
    } else {
        const auto corpus = collab::parse_corpus_jsonl(text);
        report = collab::build_stats(corpus, {}, cfg.histogram_bin_width);
    }
    emit(cfg.output_path, report.to_json());
    if (!o.csv.empty()) collab::write_file(o.csv, report.histogram_csv());
    return kExitOk;
}

int cmd_run(const Options& o) {
    const auto cfg = load_config(o, true);
    const auto summary = collab::run_pipeline(cfg);
    std::cout << summary.to_json() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Referring-expression dataset engine"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "Pipeline config (JSON)");
        sub->add_option("--input", o.input, "Input file");
        sub->add_option("--output", o.output, "Output file ('-' or omitted = stdout)");
    };
    auto add_backend_flags = [&o](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Seed for mock backends");
        sub->add_flag("--mock", o.mock, "Replace every backend with a deterministic mock");
        sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    };

    auto* ingest = app.add_subcommand("ingest", "Parse detections, filter by confidence, attach roles");
    add_common(ingest);
    ingest->add_option("--taxonomy", o.taxonomy, "Subject/object taxonomy (JSON)");
    ingest->add_option("--threshold", o.threshold, "Keep confidence strictly above this");

    auto* generate = app.add_subcommand("generate", "Describe every instance and merge the candidates");
    add_common(generate);
    add_backend_flags(generate);

    auto* augment = app.add_subcommand("augment", "Disambiguate duplicate descriptions with spatial phrases");
    add_common(augment);

    auto* exp = app.add_subcommand("export", "Write REC/REG JSONL records");
    add_common(exp);
    exp->add_option("--mode", o.mode, "rec or reg")->check(CLI::IsMember({"rec", "reg"}));

    auto* validate = app.add_subcommand("validate", "Check per-image expression uniqueness of a JSONL dataset");
    validate->add_option("--input", o.input, "Dataset JSONL")->required();

    auto* stats = app.add_subcommand("stats", "Length/time statistics and word-count histograms");
    add_common(stats);
    stats->add_option("--bin-width", o.bin_width, "Histogram bin width in words")->check(CLI::PositiveNumber);
    stats->add_option("--csv", o.csv, "Also write histogram bins as CSV");

    auto* run = app.add_subcommand("run", "End-to-end pipeline");
    add_common(run);
    add_backend_flags(run);
    run->add_option("--mode", o.mode, "rec or reg")->check(CLI::IsMember({"rec", "reg"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ingest) return cmd_ingest(o);
        if (*generate) return cmd_generate(o);
        if (*augment) return cmd_augment(o);
        if (*exp) return cmd_export(o);
        if (*validate) return cmd_validate(o);
        if (*stats) return cmd_stats(o);
        if (*run) return cmd_run(o);
    } catch (const collab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const collab::UniquenessViolation& e) {
        std::cerr << "validation failed: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
