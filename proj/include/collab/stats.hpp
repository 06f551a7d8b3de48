#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "collab/backends.hpp"

namespace collab {

struct BackendStats {
    std::string backend_name;
    double mean_length{0.0};      // words
    double length_variance{0.0};  // words^2, population
    double mean_time{0.0};        // seconds
    std::size_t count{0};
};

struct Histogram {
    std::size_t bin_width{2};
    std::map<std::size_t, std::size_t> bins;  // bin lower bound -> count

    std::size_t total() const noexcept;
};

/// One row per backend, in order of first appearance. Throws EmptyCorpus
/// when `descriptions` is empty.
std::vector<BackendStats> length_stats(std::span<const TimedDescription> descriptions);

/// Half-open bins [k*w, (k+1)*w) over word counts.
Histogram word_count_histogram(std::span<const TimedDescription> descriptions, std::size_t bin_width = 2);

/// Items per day for a strictly sequential pipeline: one call per describer
/// plus one merge per item. Throws NonPositiveLatency.
std::uint64_t throughput_estimate(std::span<const double> per_call_means, double merge_mean);

}  // namespace collab
