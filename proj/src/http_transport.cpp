#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <cmath>

#include "collab/backends.hpp"
#include "collab/error.hpp"

namespace collab {

namespace {

struct SplitUrl {
    std::string scheme_host_port;
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint is not a URL: '" + url + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public Transport {
public:
    HttpResponse post(const std::string& url, const std::string& body,
                      const std::map<std::string, std::string>& headers, double timeout_seconds) override {
        const SplitUrl target = split_url(url);
        httplib::Client client(target.scheme_host_port);
        const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
            std::chrono::duration<double>(timeout_seconds));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        httplib::Headers hdrs(headers.begin(), headers.end());
        const auto start = std::chrono::steady_clock::now();
        auto res = client.Post(target.path, hdrs, body, "application/json");
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        HttpResponse out;
        if (!res) {
            const auto err = res.error();
            const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                                   (err == httplib::Error::Read && elapsed >= 0.9 * timeout_seconds);
            out.failure = timed_out ? HttpResponse::Failure::Timeout : HttpResponse::Failure::Connection;
            out.body = httplib::to_string(err);
            return out;
        }
        out.status = res->status;
        out.body = res->body;
        return out;
    }
};

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace collab
