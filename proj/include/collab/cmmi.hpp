#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collab/backends.hpp"

namespace collab {

// One describer's outcome for one instance. A failed describer leaves a gap:
// `result` is empty and `error` holds the reason.
struct Candidate {
    std::string backend_name;
    std::optional<TimedDescription> result;
    std::string error;

    bool is_gap() const noexcept { return !result.has_value(); }
};

struct CandidateSet {
    std::string instance_id;
    std::string category;
    std::vector<Candidate> candidates;  // configured describer order

    std::size_t non_gap_count() const noexcept;
    std::vector<std::string> texts() const;
    std::vector<std::string> contributing_backends() const;
};

struct MergedDescription {
    std::string instance_id;
    std::string text;
    std::string merger_name;
    std::size_t source_count{0};
    double elapsed{0.0};
};

struct MergeOptions {
    // Optional instruction placed ahead of the merge prompt, separated by a blank line.
    std::string instruction;
    // Quorum handed to mock mergers; 0 = majority.
    int quorum{0};
};

/// Queries every describer concurrently. Failures become gaps; throws
/// AllBackendsFailed when nothing succeeds and KindMismatch when a describer
/// is a text merger.
CandidateSet generate_candidates(const Instance& inst, const CropSpec& crop,
                                 std::span<const std::shared_ptr<Backend>> describers);

/// Throws NoCandidates when every candidate is a gap, MergeFailed when the
/// merger errors or answers with empty text.
MergedDescription merge_candidates(const CandidateSet& cs, Backend& merger, const MergeOptions& options = {});

/// Deterministic offline merger: keeps lowercased content words present in at
/// least `quorum` distinct candidates, in first-appearance order, prefixed by
/// the leading article when every candidate starts with the same one.
std::string baseline_merge(const std::vector<std::string>& candidates, int quorum);

// ceil(n / 2), at least 1.
int default_quorum(std::size_t n) noexcept;

// Lowercased tokens with surrounding punctuation stripped (stop words kept).
std::vector<std::string> tokenize_words(std::string_view text);
bool is_stop_word(std::string_view word) noexcept;

}  // namespace collab
