#include "collab/backends.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "collab/cmmi.hpp"
#include "collab/error.hpp"

namespace collab {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string_view to_string(BackendKind k) noexcept {
    switch (k) {
        case BackendKind::VisionDescriber: return "vision_describer";
        case BackendKind::TextMerger: return "text_merger";
        case BackendKind::Mock: return "mock";
    }
    return "mock";
}

BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "vision_describer") return BackendKind::VisionDescriber;
    if (s == "text_merger") return BackendKind::TextMerger;
    if (s == "mock") return BackendKind::Mock;
    throw ConfigError("unknown backend kind '" + std::string(s) + "'");
}

void BackendSpec::validate() const {
    if (name.empty()) throw ConfigError("backend name must be nonempty");
    if (!(timeout > 0.0)) throw ConfigError("backend '" + name + "': timeout must be > 0");
    if (max_retries < 0) throw ConfigError("backend '" + name + "': max_retries must be >= 0");
    if (!(rate_limit > 0.0)) throw ConfigError("backend '" + name + "': rate_limit must be > 0");
    if (!(backoff_base >= 0.0)) throw ConfigError("backend '" + name + "': backoff_base must be >= 0");
    if (kind != BackendKind::Mock && endpoint.empty()) {
        throw ConfigError("backend '" + name + "': endpoint required");
    }
}

std::size_t count_words(std::string_view text) noexcept {
    std::size_t n = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

Prompt build_generation_prompt(std::string_view category, Role role) {
    if (category.empty()) throw EmptyCategory("generation prompt needs a category");
    std::string text = "What are the characteristics of ";
    text += category;
    text += " in the image?";
    if (role != Role::Unknown) {
        text += " The ";
        text += category;
        text += " is a ";
        text += to_string(role);
        text += ".";
    }
    Prompt p;
    p.text = std::move(text);
    p.context.category = std::string(category);
    return p;
}

Prompt build_merge_prompt(std::string_view category, const std::vector<std::string>& candidates) {
    if (candidates.empty()) throw EmptyCandidates("merge prompt needs at least one candidate");
    std::string text = "Extract descriptions of ";
    text += category;
    text += " based on:";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        text += " " + std::to_string(i + 1) + ". " + candidates[i];
    }
    Prompt p;
    p.text = std::move(text);
    p.context.category = std::string(category);
    p.context.candidates = candidates;
    return p;
}

std::uint64_t stable_hash(std::uint64_t seed, std::string_view backend_name, std::string_view instance_id) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    mix(std::to_string(seed));
    mix(std::string_view("\0", 1));
    mix(backend_name);
    mix(std::string_view("\0", 1));
    mix(instance_id);
    return h;
}

namespace {

constexpr std::array<std::string_view, 16> kAdjectives = {
    "red",   "white",  "black",  "small",  "large", "shiny", "old",    "new",
    "green", "yellow", "bright", "wooden", "metal", "dark",  "narrow", "round"};

constexpr std::array<std::string_view, 16> kNouns = {
    "stripes", "edges",   "handles", "wheels", "patterns", "markings", "panels", "lights",
    "corners", "buttons", "straps",  "frames", "labels",   "spots",    "lines",  "details"};

// Simulated service latency for mocks, in [1, 3) seconds. Deterministic so
// that stats reports are reproducible.
double mock_latency(std::uint64_t h) { return 1.0 + static_cast<double>((h >> 40) % 2000) / 1000.0; }

}  // namespace

std::string mock_description(std::uint64_t seed, std::string_view backend_name, std::string_view instance_id,
                             std::string_view category) {
    const std::uint64_t h = stable_hash(seed, backend_name, instance_id);
    std::string out = "a ";
    out += kAdjectives[h % kAdjectives.size()];
    out += " ";
    out += category;
    out += " with ";
    out += kAdjectives[(h >> 16) % kAdjectives.size()];
    out += " ";
    out += kNouns[(h >> 32) % kNouns.size()];
    return out;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.empty()) return {};
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string ImagePayload::base64() const { return base64_encode(png); }

ImagePayload encode_crop(const CropSpec& spec) {
    if (!std::filesystem::exists(spec.image_path)) {
        throw FileNotFound("image not found: " + spec.image_path);
    }
    cv::Mat image = cv::imread(spec.image_path, cv::IMREAD_UNCHANGED);
    if (image.empty()) {
        throw DecodeError("cannot decode image: " + spec.image_path);
    }
    const int x0 = static_cast<int>(std::floor(spec.bbox.x_min()));
    const int y0 = static_cast<int>(std::floor(spec.bbox.y_min()));
    const int x1 = static_cast<int>(std::ceil(spec.bbox.x_max()));
    const int y1 = static_cast<int>(std::ceil(spec.bbox.y_max()));
    if (x1 > image.cols || y1 > image.rows) {
        throw GeometryError("crop box exceeds image " + spec.image_path);
    }
    cv::Mat roi = image(cv::Rect(x0, y0, x1 - x0, y1 - y0));
    ImagePayload payload;
    payload.width = roi.cols;
    payload.height = roi.rows;
    if (!cv::imencode(".png", roi, payload.png)) {
        throw DecodeError("cannot encode crop of " + spec.image_path);
    }
    return payload;
}

RateLimiter::RateLimiter(double requests_per_second)
    : interval_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / requests_per_second))) {
    if (!(requests_per_second > 0.0)) throw ConfigError("rate limit must be > 0");
}

void RateLimiter::acquire() {
    Clock::time_point slot;
    {
        std::lock_guard lock(mu_);
        slot = std::max(Clock::now(), next_free_);
        next_free_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
}

namespace {

std::uint64_t parse_mock_seed(const std::string& endpoint, std::uint64_t fallback) {
    constexpr std::string_view prefix = "mock:";
    if (endpoint.rfind(prefix, 0) != 0 || endpoint.size() == prefix.size()) return fallback;
    const std::string digits = endpoint.substr(prefix.size());
    if (!std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) {
        throw ConfigError("malformed mock endpoint '" + endpoint + "'");
    }
    return std::stoull(digits);
}

bool is_transient(const HttpResponse& r) {
    if (r.failure != HttpResponse::Failure::None) return true;
    return r.status == 408 || r.status == 429 || r.status >= 500;
}

std::string trimmed(std::string_view s) {
    auto sp = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t b = 0, e = s.size();
    while (b < e && sp(s[b])) ++b;
    while (e > b && sp(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

Backend::Backend(BackendSpec spec, std::shared_ptr<Transport> transport, std::uint64_t default_seed)
    : spec_(std::move(spec)),
      transport_(std::move(transport)),
      limiter_(spec_.rate_limit > 0.0 ? spec_.rate_limit : 1.0),
      rng_(std::random_device{}()) {
    spec_.validate();
    if (spec_.is_mock()) {
        mock_seed_ = parse_mock_seed(spec_.endpoint, default_seed);
    } else if (!transport_) {
        transport_ = make_http_transport();
    }
}

std::string Backend::api_key_variable() const {
    std::string var = "COLLAB_API_KEY_";
    for (unsigned char c : spec_.name) {
        var += std::isalnum(c) ? static_cast<char>(std::toupper(c)) : '_';
    }
    return var;
}

TimedDescription Backend::query(const Prompt& prompt) {
    if (spec_.kind == BackendKind::TextMerger && prompt.image_ref) {
        throw KindMismatch("text merger '" + spec_.name + "' cannot take an image prompt");
    }
    if (spec_.kind == BackendKind::VisionDescriber && !prompt.image_ref) {
        throw KindMismatch("vision describer '" + spec_.name + "' needs an image prompt");
    }
    return spec_.is_mock() ? query_mock(prompt) : query_remote(prompt);
}

TimedDescription Backend::query_mock(const Prompt& prompt) const {
    TimedDescription out;
    out.backend_name = spec_.name;
    if (!prompt.context.candidates.empty()) {
        const auto& c = prompt.context.candidates;
        const int n = static_cast<int>(c.size());
        const int quorum = prompt.context.quorum > 0 ? std::min(prompt.context.quorum, n) : default_quorum(c.size());
        out.text = baseline_merge(c, quorum);
        std::string joined;
        for (const auto& s : c) joined += s + '\n';
        out.elapsed = mock_latency(stable_hash(mock_seed_, spec_.name, joined)) / 2.0;
    } else {
        const std::string& id = prompt.context.instance_id.empty() ? prompt.text : prompt.context.instance_id;
        out.text = mock_description(mock_seed_, spec_.name, id, prompt.context.category);
        out.elapsed = mock_latency(stable_hash(mock_seed_, spec_.name, id));
    }
    out.word_count = count_words(out.text);
    return out;
}

double Backend::jitter(double upper) {
    if (upper <= 0.0) return 0.0;
    std::lock_guard lock(rng_mu_);
    return std::uniform_real_distribution<double>(0.0, upper)(rng_);
}

TimedDescription Backend::query_remote(const Prompt& prompt) {
    json body = json::object();
    body["prompt"] = prompt.text;
    if (prompt.image_ref) {
        body["image_b64"] = encode_crop(*prompt.image_ref).base64();
    }
    const std::string payload = body.dump();

    std::map<std::string, std::string> headers;
    if (const char* key = std::getenv(api_key_variable().c_str()); key && *key) {
        headers["Authorization"] = std::string("Bearer ") + key;
    }

    HttpResponse last;
    const int attempts = spec_.max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        limiter_.acquire();
        const auto start = Clock::now();
        last = transport_->post(spec_.endpoint, payload, headers, spec_.timeout);
        const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();

        if (last.failure == HttpResponse::Failure::None && last.status >= 200 && last.status < 300) {
            json reply;
            try {
                reply = json::parse(last.body);
            } catch (const json::parse_error&) {
                throw RemoteError(last.status, "malformed response body: " + last.body, attempt + 1);
            }
            auto it = reply.find("text");
            if (!reply.is_object() || it == reply.end() || !it->is_string()) {
                throw RemoteError(last.status, "response lacks string field 'text': " + last.body, attempt + 1);
            }
            TimedDescription out;
            out.backend_name = spec_.name;
            out.text = trimmed(it->get<std::string>());
            out.elapsed = std::max(0.0, elapsed);
            out.word_count = count_words(out.text);
            return out;
        }
        if (!is_transient(last)) {
            throw RemoteError(last.status, last.body, attempt + 1);
        }
        if (attempt + 1 < attempts) {
            const double delay = jitter(spec_.backoff_base * std::ldexp(1.0, attempt));
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
    }
    if (last.failure == HttpResponse::Failure::Timeout) {
        throw TimeoutError("backend '" + spec_.name + "' timed out after " + std::to_string(attempts) + " attempt(s)",
                           attempts);
    }
    throw RemoteError(last.status, last.body, attempts);
}

}  // namespace collab
