#include "collab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "collab/error.hpp"

namespace collab {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.flush()) throw IoError("failed writing '" + path + "'");
}

// -- config ------------------------------------------------------------------

namespace {

class ConfigReader {
public:
    ConfigReader(const ojson& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError("'" + display() + "': expected object");
    }

    const ojson& required(const char* key) const {
        auto it = obj_.find(key);
        if (it == obj_.end()) throw ConfigError("missing config field '" + field(key) + "'");
        return *it;
    }

    const ojson* optional(const char* key) const {
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    std::string string(const char* key, bool needed, std::string fallback = {}) const {
        const ojson* v = needed ? &required(key) : optional(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ConfigError("config field '" + field(key) + "': expected string");
        return v->get<std::string>();
    }

    double number(const char* key, double fallback) const {
        const ojson* v = optional(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ConfigError("config field '" + field(key) + "': expected number");
        return v->get<double>();
    }

    long long integer(const char* key, long long fallback) const {
        const ojson* v = optional(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) throw ConfigError("config field '" + field(key) + "': expected integer");
        return v->get<long long>();
    }

    std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string display() const { return path_.empty() ? "$" : path_; }

    const ojson& obj_;
    std::string path_;
};

BackendSpec parse_backend(const ojson& j, const std::string& path) {
    ConfigReader r(j, path);
    BackendSpec b;
    b.name = r.string("name", true);
    b.kind = backend_kind_from_string(r.string("kind", true));
    b.endpoint = r.string("endpoint", b.kind != BackendKind::Mock, "mock");
    b.timeout = r.number("timeout", b.timeout);
    b.max_retries = static_cast<int>(r.integer("max_retries", b.max_retries));
    b.rate_limit = r.number("rate_limit", b.rate_limit);
    b.backoff_base = r.number("backoff_base", b.backoff_base);
    return b;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(std::string_view text) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const ojson::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ConfigReader r(doc, "");
    PipelineConfig cfg;

    const ojson& describers = r.required("describers");
    if (!describers.is_array()) throw ConfigError("config field 'describers': expected array");
    for (std::size_t i = 0; i < describers.size(); ++i) {
        cfg.describers.push_back(parse_backend(describers[i], "describers[" + std::to_string(i) + "]"));
    }
    cfg.merger = parse_backend(r.required("merger"), "merger");

    cfg.confidence_threshold = r.number("confidence_threshold", cfg.confidence_threshold);
    if (const ojson* spa = r.optional("spa")) {
        ConfigReader s(*spa, "spa");
        if (const ojson* f = s.optional("ring_fractions")) {
            if (!f->is_array() || f->size() != 2 || !(*f)[0].is_number() || !(*f)[1].is_number()) {
                throw ConfigError("config field 'spa.ring_fractions': expected [f1, f2]");
            }
            cfg.spa.inner_fraction = (*f)[0].get<double>();
            cfg.spa.outer_fraction = (*f)[1].get<double>();
        }
        cfg.spa.max_depth = static_cast<int>(s.integer("max_depth", cfg.spa.max_depth));
        cfg.spa.inflation = s.number("inflation", cfg.spa.inflation);
    }
    cfg.workers = static_cast<int>(r.integer("workers", cfg.workers));
    const long long seed = r.integer("seed", 0);
    if (seed < 0) throw ConfigError("config field 'seed': must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.taxonomy_path = r.string("taxonomy_path", false);
    cfg.input_path = r.string("input_path", false);
    cfg.output_path = r.string("output_path", false);
    cfg.crop_padding = r.number("crop_padding", cfg.crop_padding);
    cfg.merge_instruction = r.string("merge_instruction", false);
    cfg.merge_quorum = static_cast<int>(r.integer("merge_quorum", 0));
    const long long bin = r.integer("histogram_bin_width", 2);
    if (bin < 1) throw ConfigError("config field 'histogram_bin_width': must be >= 1");
    cfg.histogram_bin_width = static_cast<std::size_t>(bin);
    cfg.mode = dataset_mode_from_string(r.string("mode", false, "rec"));
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    PipelineConfig cfg = from_json(text);
    // Paths inside a config file are relative to the file.
    const fs::path base = fs::path(path).parent_path();
    for (std::string* p : {&cfg.taxonomy_path, &cfg.input_path, &cfg.output_path}) {
        if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
    }
    return cfg;
}

void PipelineConfig::validate() const {
    if (describers.empty()) throw ConfigError("config field 'describers': at least one describer is required");
    for (const auto& d : describers) {
        d.validate();
        if (d.kind == BackendKind::TextMerger) {
            throw ConfigError("describer '" + d.name + "' has kind text_merger");
        }
    }
    merger.validate();
    if (merger.kind == BackendKind::VisionDescriber) {
        throw ConfigError("merger '" + merger.name + "' has kind vision_describer");
    }
    if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
        throw ConfigError("config field 'confidence_threshold': must lie in [0, 1]");
    }
    spa.validate();
    if (workers < 1) throw ConfigError("config field 'workers': must be >= 1");
    if (!(crop_padding >= 0.0)) throw ConfigError("config field 'crop_padding': must be >= 0");
    if (merge_quorum < 0) throw ConfigError("config field 'merge_quorum': must be >= 0");
}

void PipelineConfig::force_mock() {
    const std::string endpoint = "mock:" + std::to_string(seed);
    for (auto& d : describers) {
        d.kind = BackendKind::Mock;
        d.endpoint = endpoint;
    }
    merger.kind = BackendKind::Mock;
    merger.endpoint = endpoint;
}

// -- intermediate document --------------------------------------------------

namespace {

ojson candidate_to_json(const Candidate& c) {
    ojson j;
    j["backend"] = c.backend_name;
    if (c.result) {
        j["text"] = c.result->text;
        j["elapsed"] = c.result->elapsed;
        j["word_count"] = c.result->word_count;
    } else {
        j["error"] = c.error;
    }
    return j;
}

Candidate candidate_from_json(const ojson& j) {
    Candidate c;
    c.backend_name = j.at("backend").get<std::string>();
    if (j.contains("text")) {
        TimedDescription d;
        d.backend_name = c.backend_name;
        d.text = j.at("text").get<std::string>();
        d.elapsed = j.at("elapsed").get<double>();
        d.word_count = count_words(d.text);
        c.result = std::move(d);
    } else {
        c.error = j.value("error", std::string{});
    }
    return c;
}

}  // namespace

std::string InstancesDocument::to_json() const {
    ojson doc;
    doc["instances_total"] = instances_total;
    doc["instances_dropped"] = instances_dropped;
    doc["duplicate_groups"] = duplicate_groups;
    doc["ordinal_suffixes"] = ordinal_suffixes;
    doc["backend_failures"] = backend_failures;
    doc["images"] = ojson::array();
    for (const auto& img : images) {
        ojson ji;
        ji["image_id"] = img.image_id;
        ji["image_path"] = img.image_path;
        ji["width"] = img.width;
        ji["height"] = img.height;
        ji["instances"] = ojson::array();
        for (const auto& e : img.instances) {
            const auto& i = e.instance;
            ojson je;
            je["instance_id"] = i.instance_id;
            je["bbox"] = {i.bbox.x_min(), i.bbox.y_min(), i.bbox.x_max(), i.bbox.y_max()};
            je["category"] = i.category;
            je["confidence"] = i.confidence;
            je["role"] = std::string(to_string(i.role));
            je["description"] = i.description;
            je["candidates"] = ojson::array();
            for (const auto& c : e.candidates) je["candidates"].push_back(candidate_to_json(c));
            je["merger"] = e.merger;
            je["merge_elapsed"] = e.merge_elapsed;
            je["spa_path"] = e.spa_path;
            ji["instances"].push_back(std::move(je));
        }
        doc["images"].push_back(std::move(ji));
    }
    return doc.dump(2) + "\n";
}

InstancesDocument InstancesDocument::from_json(std::string_view text) {
    InstancesDocument doc;
    try {
        const ojson j = ojson::parse(text);
        doc.instances_total = j.value("instances_total", std::size_t{0});
        doc.instances_dropped = j.value("instances_dropped", std::size_t{0});
        doc.duplicate_groups = j.value("duplicate_groups", std::size_t{0});
        doc.ordinal_suffixes = j.value("ordinal_suffixes", std::size_t{0});
        doc.backend_failures = j.value("backend_failures", std::size_t{0});
        for (const auto& ji : j.at("images")) {
            ImageEntry img;
            img.image_id = ji.at("image_id").get<std::string>();
            img.image_path = ji.at("image_path").get<std::string>();
            img.width = ji.at("width").get<int>();
            img.height = ji.at("height").get<int>();
            for (const auto& je : ji.at("instances")) {
                const auto& b = je.at("bbox");
                if (!b.is_array() || b.size() != 4) throw SchemaError("instance bbox must have four numbers");
                InstanceEntry e{Instance{je.at("instance_id").get<std::string>(), img.image_id,
                                         BBox(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                              b[3].get<double>()),
                                         je.at("category").get<std::string>(), je.at("confidence").get<double>(),
                                         role_from_string(je.value("role", std::string("unknown"))),
                                         je.value("description", std::string{})},
                                {},
                                je.value("merger", std::string{}),
                                je.value("merge_elapsed", 0.0),
                                je.value("spa_path", std::vector<std::string>{})};
                if (auto it = je.find("candidates"); it != je.end()) {
                    for (const auto& c : *it) e.candidates.push_back(candidate_from_json(c));
                }
                img.instances.push_back(std::move(e));
            }
            doc.images.push_back(std::move(img));
        }
    } catch (const ojson::exception& e) {
        throw SchemaError(std::string("instances document: ") + e.what());
    }
    return doc;
}

std::size_t InstancesDocument::instance_count() const noexcept {
    std::size_t n = 0;
    for (const auto& img : images) n += img.instances.size();
    return n;
}

void InstancesDocument::sort() {
    std::stable_sort(images.begin(), images.end(),
                     [](const ImageEntry& a, const ImageEntry& b) { return a.image_id < b.image_id; });
    for (auto& img : images) {
        std::stable_sort(img.instances.begin(), img.instances.end(), [](const auto& a, const auto& b) {
            return a.instance.instance_id < b.instance.instance_id;
        });
    }
}

std::string RunSummary::to_json() const {
    ojson j;
    j["images"] = images;
    j["instances_total"] = instances_total;
    j["instances_kept"] = instances_kept;
    j["instances_dropped"] = instances_dropped;
    j["duplicate_groups"] = duplicate_groups;
    j["ordinal_suffixes"] = ordinal_suffixes;
    j["backend_failures"] = backend_failures;
    j["records"] = records;
    return j.dump(2);
}

// -- stages -----------------------------------------------------------------

InstancesDocument ingest_stage(const std::vector<DetectionRecord>& records, const RoleTaxonomy& taxonomy,
                               double confidence_threshold) {
    InstancesDocument doc;
    for (const auto& rec : records) {
        auto all = to_instances(rec, taxonomy);
        auto kept = filter_by_confidence(all, confidence_threshold);
        doc.instances_total += all.size();
        doc.instances_dropped += all.size() - kept.size();
        ImageEntry img{rec.image_id, rec.image_path, rec.width, rec.height, {}};
        for (auto& i : kept) img.instances.push_back(InstanceEntry{std::move(i), {}, {}, 0.0, {}});
        doc.images.push_back(std::move(img));
    }
    doc.sort();
    return doc;
}

InstancesDocument generate_stage(InstancesDocument doc, std::span<const std::shared_ptr<Backend>> describers,
                                 Backend& merger, const MergeOptions& merge, double crop_padding, int workers) {
    struct Item {
        std::size_t image;
        std::size_t instance;
    };
    std::vector<Item> items;
    for (std::size_t i = 0; i < doc.images.size(); ++i) {
        for (std::size_t k = 0; k < doc.images[i].instances.size(); ++k) items.push_back({i, k});
    }
    std::vector<std::exception_ptr> errors(items.size());
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t n; (n = next.fetch_add(1)) < items.size();) {
            auto& img = doc.images[items[n].image];
            auto& entry = img.instances[items[n].instance];
            try {
                const DetectionRecord rec{img.image_id, img.image_path, img.width, img.height, {}};
                const CropSpec crop = make_crop_spec(entry.instance, rec, crop_padding);
                CandidateSet cs = generate_candidates(entry.instance, crop, describers);
                MergedDescription merged = merge_candidates(cs, merger, merge);
                entry.instance.description = merged.text;
                entry.merger = merged.merger_name;
                entry.merge_elapsed = merged.elapsed;
                entry.candidates = std::move(cs.candidates);
            } catch (const std::exception& e) {
                errors[n] = std::make_exception_ptr(StageError("generate", entry.instance.instance_id, e.what()));
            }
        }
    };
    {
        const std::size_t pool = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), items.size());
        std::vector<std::jthread> threads;
        for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(work);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    doc.backend_failures = 0;
    for (const auto& img : doc.images) {
        for (const auto& e : img.instances) {
            doc.backend_failures += static_cast<std::size_t>(
                std::count_if(e.candidates.begin(), e.candidates.end(), [](const Candidate& c) { return c.is_gap(); }));
        }
    }
    return doc;
}

InstancesDocument augment_stage(InstancesDocument doc, const SpaConfig& spa) {
    doc.duplicate_groups = 0;
    doc.ordinal_suffixes = 0;
    for (auto& img : doc.images) {
        std::vector<Instance> instances;
        instances.reserve(img.instances.size());
        for (const auto& e : img.instances) instances.push_back(e.instance);
        AugmentResult result;
        try {
            result = augment_image(instances, img.frame(), spa);
        } catch (const std::exception& e) {
            throw StageError("augment", img.image_id, e.what());
        }
        doc.duplicate_groups += result.duplicate_groups;
        doc.ordinal_suffixes += result.ordinal_suffixes;
        for (std::size_t k = 0; k < img.instances.size(); ++k) {
            img.instances[k].instance.description = result.instances[k].description;
        }
        for (const auto& a : result.assignments) {
            auto it = std::find_if(img.instances.begin(), img.instances.end(),
                                   [&](const InstanceEntry& e) { return e.instance.instance_id == a.instance_id; });
            it->spa_path.clear();
            for (const auto& label : a.path) it->spa_path.push_back(render_label(label));
        }
    }
    return doc;
}

std::vector<DatasetRecord> export_records(const InstancesDocument& doc) {
    InstancesDocument sorted = doc;
    sorted.sort();
    std::vector<DatasetRecord> out;
    for (const auto& img : sorted.images) {
        for (const auto& e : img.instances) {
            std::vector<std::string> backends;
            for (const auto& c : e.candidates) {
                if (!c.is_gap()) backends.push_back(c.backend_name);
            }
            out.push_back(DatasetRecord{img.image_id, img.image_path, e.instance.bbox, e.instance.category,
                                        e.instance.description,
                                        Provenance{e.instance.instance_id, std::move(backends), e.merger, e.spa_path}});
        }
    }
    return out;
}

// -- stats ------------------------------------------------------------------

std::string StatsReport::to_json() const {
    ojson j;
    j["backends"] = ojson::array();
    for (const auto& b : backends) {
        ojson row;
        row["backend"] = b.backend_name;
        row["count"] = b.count;
        row["mean_length"] = b.mean_length;
        row["length_variance"] = b.length_variance;
        row["mean_time"] = b.mean_time;
        j["backends"].push_back(std::move(row));
    }
    if (merger) {
        ojson m;
        m["name"] = *merger;
        m["count"] = merge_count;
        m["mean_time"] = merge_mean_time;
        j["merger"] = std::move(m);
    } else {
        j["merger"] = nullptr;
    }
    j["histograms"] = ojson::array();
    for (const auto& [name, h] : histograms) {
        ojson jh;
        jh["backend"] = name;
        jh["bin_width"] = h.bin_width;
        jh["bins"] = ojson::array();
        for (const auto& [lower, count] : h.bins) jh["bins"].push_back({{"lower", lower}, {"count", count}});
        j["histograms"].push_back(std::move(jh));
    }
    if (throughput_items_per_day) {
        j["throughput_items_per_day"] = *throughput_items_per_day;
    } else {
        j["throughput_items_per_day"] = nullptr;
    }
    return j.dump(2) + "\n";
}

std::string StatsReport::histogram_csv() const {
    std::string out = "backend,bin_lower,bin_upper,count\n";
    for (const auto& [name, h] : histograms) {
        for (const auto& [lower, count] : h.bins) {
            out += name + "," + std::to_string(lower) + "," + std::to_string(lower + h.bin_width) + "," +
                   std::to_string(count) + "\n";
        }
    }
    return out;
}

StatsReport build_stats(std::span<const TimedDescription> describer_outputs,
                        std::span<const TimedDescription> merger_outputs, std::size_t bin_width) {
    StatsReport report;
    if (describer_outputs.empty()) return report;

    report.backends = length_stats(describer_outputs);
    for (const auto& b : report.backends) {
        std::vector<TimedDescription> mine;
        for (const auto& d : describer_outputs) {
            if (d.backend_name == b.backend_name) mine.push_back(d);
        }
        report.histograms.emplace_back(b.backend_name, word_count_histogram(mine, bin_width));
    }

    double merge_mean = 0.0;
    if (!merger_outputs.empty()) {
        double sum = 0.0;
        for (const auto& m : merger_outputs) sum += m.elapsed;
        merge_mean = sum / static_cast<double>(merger_outputs.size());
        report.merger = merger_outputs.front().backend_name;
        report.merge_count = merger_outputs.size();
        report.merge_mean_time = merge_mean;
    }
    std::vector<double> per_call;
    for (const auto& b : report.backends) per_call.push_back(b.mean_time);
    if (std::all_of(per_call.begin(), per_call.end(), [](double t) { return t > 0.0; })) {
        report.throughput_items_per_day = throughput_estimate(per_call, merge_mean);
    }
    return report;
}

StatsReport stats_stage(const InstancesDocument& doc, std::size_t bin_width) {
    std::vector<TimedDescription> described, merged;
    for (const auto& img : doc.images) {
        for (const auto& e : img.instances) {
            for (const auto& c : e.candidates) {
                if (!c.is_gap()) described.push_back(*c.result);
            }
            if (!e.merger.empty()) {
                merged.push_back(TimedDescription{e.merger, {}, e.merge_elapsed, 0});
            }
        }
    }
    return build_stats(described, merged, bin_width);
}

std::vector<TimedDescription> parse_corpus_jsonl(std::string_view text) {
    std::vector<TimedDescription> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const ojson j = ojson::parse(line);
            TimedDescription d;
            d.backend_name = j.at("backend").get<std::string>();
            d.text = j.at("text").get<std::string>();
            d.elapsed = j.value("elapsed", 0.0);
            d.word_count = count_words(d.text);
            out.push_back(std::move(d));
        } catch (const ojson::exception& e) {
            throw SchemaError("corpus line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::string stats_path_for(const std::string& output_path) {
    return fs::path(output_path).replace_extension(".stats.json").string();
}

std::string histogram_path_for(const std::string& output_path) {
    return fs::path(output_path).replace_extension(".hist.csv").string();
}

// -- end to end -------------------------------------------------------------

std::vector<std::shared_ptr<Backend>> make_describers(const PipelineConfig& cfg) {
    std::vector<std::shared_ptr<Backend>> out;
    for (const auto& d : cfg.describers) out.push_back(std::make_shared<Backend>(d, nullptr, cfg.seed));
    return out;
}

RunSummary run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    if (cfg.input_path.empty()) throw ConfigError("missing config field 'input_path'");
    if (cfg.output_path.empty()) throw ConfigError("missing config field 'output_path'");

    auto stage = [](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const StageError&) {
            throw;
        } catch (const ConfigError&) {
            throw;
        } catch (const UniquenessViolation&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, "", e.what());
        }
    };

    InstancesDocument doc = stage("ingest", [&] {
        const RoleTaxonomy taxonomy =
            cfg.taxonomy_path.empty() ? RoleTaxonomy::defaults() : RoleTaxonomy::load(cfg.taxonomy_path);
        return ingest_stage(parse_detections(read_file(cfg.input_path)), taxonomy, cfg.confidence_threshold);
    });

    auto describers = make_describers(cfg);
    Backend merger(cfg.merger, nullptr, cfg.seed);
    doc = generate_stage(std::move(doc), describers, merger, MergeOptions{cfg.merge_instruction, cfg.merge_quorum},
                         cfg.crop_padding, cfg.workers);
    doc = augment_stage(std::move(doc), cfg.spa);

    const auto records = export_records(doc);
    stage("export", [&] {
        write_dataset(records, cfg.output_path, cfg.mode);
        return 0;
    });
    stage("stats", [&] {
        const auto report = stats_stage(doc, cfg.histogram_bin_width);
        write_file(stats_path_for(cfg.output_path), report.to_json());
        write_file(histogram_path_for(cfg.output_path), report.histogram_csv());
        return 0;
    });

    RunSummary s;
    s.images = doc.images.size();
    s.instances_total = doc.instances_total;
    s.instances_kept = doc.instance_count();
    s.instances_dropped = doc.instances_dropped;
    s.duplicate_groups = doc.duplicate_groups;
    s.ordinal_suffixes = doc.ordinal_suffixes;
    s.backend_failures = doc.backend_failures;
    s.records = records.size();
    return s;
}

}  // namespace collab
