#include <httplib.h>

#include "matforge/errors.hpp"
#include "matforge/gateway.hpp"

namespace matforge {
namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const std::string& base_url, const std::string& path, const std::string& body,
                    const std::multimap<std::string, std::string>& headers,
                    std::chrono::milliseconds timeout) override {
    httplib::Client client(base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers h(headers.begin(), headers.end());
    auto res = client.Post(path, h, body, "application/json");
    if (!res) throw Error(ErrorCode::kTransport, base_url + path + ": " + httplib::to_string(res.error()));
    return HttpResponse{res->status, res->body};
  }
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace matforge
