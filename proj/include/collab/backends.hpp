#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "collab/core.hpp"
#include "collab/ingest.hpp"

namespace collab {

enum class BackendKind { VisionDescriber, TextMerger, Mock };

std::string_view to_string(BackendKind k) noexcept;
BackendKind backend_kind_from_string(std::string_view s);

struct BackendSpec {
    std::string name;
    BackendKind kind{BackendKind::Mock};
    std::string endpoint;      // http(s) URL, or "mock:<seed>"
    double timeout{60.0};      // seconds
    int max_retries{2};
    double rate_limit{1.0};    // requests per second
    double backoff_base{1.0};  // seconds; delay before retry k is uniform in [0, base * 2^k]

    // Throws ConfigError when an invariant does not hold.
    void validate() const;
    bool is_mock() const noexcept { return kind == BackendKind::Mock; }
};

// Offline metadata riding along with a prompt. Mock backends read it instead
// of parsing prompt text; remote backends ignore it.
struct PromptContext {
    std::string instance_id;
    std::string category;
    std::vector<std::string> candidates;
    int quorum{0};  // 0 = majority
};

struct Prompt {
    std::string text;
    std::optional<CropSpec> image_ref;
    PromptContext context;
};

struct TimedDescription {
    std::string backend_name;
    std::string text;
    double elapsed{0.0};
    std::size_t word_count{0};
};

std::size_t count_words(std::string_view text) noexcept;

Prompt build_generation_prompt(std::string_view category, Role role);
Prompt build_merge_prompt(std::string_view category, const std::vector<std::string>& candidates);

/// FNV-1a 64 over (decimal seed, backend name, instance id), NUL-separated.
/// Stable across platforms and runs.
std::uint64_t stable_hash(std::uint64_t seed, std::string_view backend_name, std::string_view instance_id) noexcept;

std::string mock_description(std::uint64_t seed, std::string_view backend_name, std::string_view instance_id,
                             std::string_view category);

struct ImagePayload {
    std::vector<std::uint8_t> png;
    int width{0};
    int height{0};

    std::string base64() const;
};

ImagePayload encode_crop(const CropSpec& spec);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

// -- transport -------------------------------------------------------------

struct HttpResponse {
    enum class Failure { None, Connection, Timeout };

    Failure failure{Failure::None};
    int status{0};
    std::string body;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& url, const std::string& body,
                              const std::map<std::string, std::string>& headers, double timeout_seconds) = 0;
};

std::shared_ptr<Transport> make_http_transport();

/// Spaces requests at least 1/rate seconds apart. Thread-safe.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_second);
    void acquire();

private:
    std::mutex mu_;
    std::chrono::steady_clock::duration interval_;
    std::chrono::steady_clock::time_point next_free_{};
};

/// A configured model endpoint. Queries may be issued concurrently; the rate
/// limiter and jitter RNG are shared by all callers of the same Backend.
class Backend {
public:
    /// `default_seed` applies to mock endpoints written without a seed ("mock").
    explicit Backend(BackendSpec spec, std::shared_ptr<Transport> transport = nullptr,
                     std::uint64_t default_seed = 0);

    const BackendSpec& spec() const noexcept { return spec_; }
    const std::string& name() const noexcept { return spec_.name; }

    /// Throws KindMismatch, TimeoutError, RemoteError, and FileNotFound /
    /// DecodeError when the crop cannot be encoded.
    TimedDescription query(const Prompt& prompt);

    // Environment variable holding this backend's credential.
    std::string api_key_variable() const;

private:
    TimedDescription query_mock(const Prompt& prompt) const;
    TimedDescription query_remote(const Prompt& prompt);
    double jitter(double upper);

    BackendSpec spec_;
    std::shared_ptr<Transport> transport_;
    std::uint64_t mock_seed_{0};
    RateLimiter limiter_;
    std::mutex rng_mu_;
    std::mt19937_64 rng_;
};

}  // namespace collab
