#include "collab/cmmi.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <set>
#include <unordered_map>

#include "collab/error.hpp"

namespace collab {

std::size_t CandidateSet::non_gap_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(candidates.begin(), candidates.end(), [](const Candidate& c) { return !c.is_gap(); }));
}

std::vector<std::string> CandidateSet::texts() const {
    std::vector<std::string> out;
    for (const auto& c : candidates) {
        if (!c.is_gap()) out.push_back(c.result->text);
    }
    return out;
}

std::vector<std::string> CandidateSet::contributing_backends() const {
    std::vector<std::string> out;
    for (const auto& c : candidates) {
        if (!c.is_gap()) out.push_back(c.backend_name);
    }
    return out;
}

CandidateSet generate_candidates(const Instance& inst, const CropSpec& crop,
                                 std::span<const std::shared_ptr<Backend>> describers) {
    if (describers.empty()) {
        throw std::invalid_argument("generate_candidates: no describers configured");
    }
    for (const auto& d : describers) {
        if (d->spec().kind == BackendKind::TextMerger) {
            throw KindMismatch("'" + d->name() + "' is a text merger, not a describer");
        }
    }

    Prompt prompt = build_generation_prompt(inst.category, inst.role);
    prompt.image_ref = crop;
    prompt.context.instance_id = inst.instance_id;

    std::vector<std::future<TimedDescription>> pending;
    pending.reserve(describers.size());
    for (const auto& d : describers) {
        pending.push_back(std::async(std::launch::async, [&d, &prompt] { return d->query(prompt); }));
    }

    CandidateSet cs{inst.instance_id, inst.category, {}};
    cs.candidates.reserve(describers.size());
    for (std::size_t i = 0; i < pending.size(); ++i) {
        Candidate c{describers[i]->name(), std::nullopt, {}};
        try {
            c.result = pending[i].get();
        } catch (const std::exception& e) {
            c.error = e.what();
        }
        cs.candidates.push_back(std::move(c));
    }

    if (cs.non_gap_count() == 0) {
        std::string msg = "all " + std::to_string(cs.candidates.size()) + " describer(s) failed for " + inst.instance_id;
        for (const auto& c : cs.candidates) msg += "; " + c.backend_name + ": " + c.error;
        throw AllBackendsFailed(msg);
    }
    return cs;
}

MergedDescription merge_candidates(const CandidateSet& cs, Backend& merger, const MergeOptions& options) {
    if (merger.spec().kind == BackendKind::VisionDescriber) {
        throw KindMismatch("'" + merger.name() + "' is a vision describer, not a merger");
    }
    const auto texts = cs.texts();
    if (texts.empty()) {
        throw NoCandidates("no usable candidates for " + cs.instance_id);
    }
    Prompt prompt = build_merge_prompt(cs.category, texts);
    if (!options.instruction.empty()) {
        prompt.text = options.instruction + "\n\n" + prompt.text;
    }
    prompt.context.instance_id = cs.instance_id;
    prompt.context.quorum = options.quorum;

    TimedDescription reply;
    try {
        reply = merger.query(prompt);
    } catch (const std::exception& e) {
        throw MergeFailed("merger '" + merger.name() + "' failed for " + cs.instance_id + ": " + e.what());
    }
    if (reply.text.empty()) {
        throw MergeFailed("merger '" + merger.name() + "' returned empty text for " + cs.instance_id);
    }
    return MergedDescription{cs.instance_id, reply.text, merger.name(), texts.size(), reply.elapsed};
}

int default_quorum(std::size_t n) noexcept { return std::max(1, static_cast<int>((n + 1) / 2)); }

namespace {

const std::set<std::string_view> kStopWords = {
    "a",     "an",   "the",  "and",   "or",   "but",  "with", "without", "of",   "in",   "on",  "at",
    "to",    "for",  "from", "by",    "as",   "is",   "are",  "was",     "were", "be",   "been", "being",
    "it",    "its",  "this", "that",  "these", "those", "there", "their", "which", "who", "has", "have",
    "had",   "into", "onto", "over",  "under", "very", "also", "some",    "can"};

bool is_article(std::string_view w) { return w == "a" || w == "an" || w == "the"; }

}  // namespace

bool is_stop_word(std::string_view word) noexcept { return kStopWords.count(word) != 0; }

std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        std::string_view raw = text.substr(i, j - i);
        auto keep = [](unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; };
        std::size_t b = 0, e = raw.size();
        while (b < e && !keep(raw[b])) ++b;
        while (e > b && !keep(raw[e - 1])) --e;
        if (e > b) {
            std::string w(raw.substr(b, e - b));
            std::transform(w.begin(), w.end(), w.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            out.push_back(std::move(w));
        }
        i = j;
    }
    return out;
}

std::string baseline_merge(const std::vector<std::string>& candidates, int quorum) {
    if (candidates.empty()) {
        throw std::invalid_argument("baseline_merge: no candidates");
    }
    if (quorum < 1 || quorum > static_cast<int>(candidates.size())) {
        throw std::invalid_argument("baseline_merge: quorum must lie in [1, number of candidates]");
    }

    std::vector<std::string> order;
    std::unordered_map<std::string, int> support;
    std::optional<std::string> article;
    bool shared_article = true;

    for (const auto& text : candidates) {
        const auto words = tokenize_words(text);
        if (words.empty() || !is_article(words.front()) || (article && *article != words.front())) {
            shared_article = false;
        } else if (!article) {
            article = words.front();
        }
        std::set<std::string> seen;
        for (const auto& w : words) {
            if (is_stop_word(w) || !seen.insert(w).second) continue;
            if (support[w]++ == 0) order.push_back(w);
        }
    }

    std::string kept;
    for (const auto& w : order) {
        if (support[w] < quorum) continue;
        if (!kept.empty()) kept += ' ';
        kept += w;
    }
    if (kept.empty() || !shared_article || !article) return kept;
    return *article + " " + kept;
}

}  // namespace collab
