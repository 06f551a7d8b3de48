#include "collab/stats.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "collab/error.hpp"

namespace collab {

std::size_t Histogram::total() const noexcept {
    std::size_t n = 0;
    for (const auto& [lower, count] : bins) n += count;
    return n;
}

std::vector<BackendStats> length_stats(std::span<const TimedDescription> descriptions) {
    if (descriptions.empty()) throw EmptyCorpus("no descriptions to summarize");

    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<const TimedDescription*>> groups;
    for (const auto& d : descriptions) {
        auto& g = groups[d.backend_name];
        if (g.empty()) order.push_back(d.backend_name);
        g.push_back(&d);
    }

    std::vector<BackendStats> out;
    out.reserve(order.size());
    for (const auto& name : order) {
        const auto& g = groups.at(name);
        const double n = static_cast<double>(g.size());
        double len_sum = 0.0, time_sum = 0.0;
        for (const auto* d : g) {
            len_sum += static_cast<double>(d->word_count);
            time_sum += d->elapsed;
        }
        const double mean = len_sum / n;
        double sq = 0.0;
        for (const auto* d : g) {
            const double dev = static_cast<double>(d->word_count) - mean;
            sq += dev * dev;
        }
        out.push_back(BackendStats{name, mean, sq / n, time_sum / n, g.size()});
    }
    return out;
}

Histogram word_count_histogram(std::span<const TimedDescription> descriptions, std::size_t bin_width) {
    if (bin_width < 1) throw std::invalid_argument("histogram bin width must be >= 1");
    Histogram h;
    h.bin_width = bin_width;
    for (const auto& d : descriptions) {
        ++h.bins[(d.word_count / bin_width) * bin_width];
    }
    return h;
}

std::uint64_t throughput_estimate(std::span<const double> per_call_means, double merge_mean) {
    if (per_call_means.empty()) throw NonPositiveLatency("at least one describer latency is required");
    for (double m : per_call_means) {
        if (!(m > 0.0) || !std::isfinite(m)) throw NonPositiveLatency("describer latency must be > 0");
    }
    if (!(merge_mean >= 0.0) || !std::isfinite(merge_mean)) {
        throw NonPositiveLatency("merge latency must be >= 0");
    }
    const double per_item = std::accumulate(per_call_means.begin(), per_call_means.end(), 0.0) + merge_mean;
    return static_cast<std::uint64_t>(std::floor(86400.0 / per_item));
}

}  // namespace collab
