#include "matforge/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "matforge/errors.hpp"
#include "matforge/hashing.hpp"

namespace matforge {

void GenerationParams::validate() const {
  if (!(temperature >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "top_p must lie in (0, 1]");
}

GenerationParams default_params(GenerationTask task) {
  GenerationParams p;
  p.top_p = 0.9;
  p.temperature = task == GenerationTask::kNerEval ? 0.1 : 0.0;
  return p;
}

GatewayMode parse_gateway_mode(std::string_view s) {
  if (s == "live") return GatewayMode::kLive;
  if (s == "record") return GatewayMode::kRecord;
  if (s == "replay") return GatewayMode::kReplay;
  throw Error(ErrorCode::kInvalidConfig, "unknown gateway mode '" + std::string(s) + "'");
}

GatewayConfig GatewayConfig::from_env() {
  GatewayConfig c;
  if (const char* v = std::getenv("MATFORGE_LLM_BASE_URL"); v && *v) c.base_url = v;
  if (const char* v = std::getenv("MATFORGE_LLM_MODEL"); v && *v) c.model_name = v;
  if (const char* v = std::getenv("MATFORGE_LLM_API_KEY"); v && *v) c.auth_header = std::string("Bearer ") + v;
  return c;
}

namespace {

// Splits "http://host:port/v1" into ("http://host:port", "/v1").
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path == std::string::npos) return {url, "/v1"};
  std::string prefix = url.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path), prefix};
}

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

}  // namespace

LlmGateway::LlmGateway(GatewayConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_concurrency, 1, 1024))) {
  if (config_.mode == GatewayMode::kReplay) {
    std::error_code ec;
    if (config_.cassette_path.empty() || !std::filesystem::is_regular_file(config_.cassette_path, ec))
      throw Error(ErrorCode::kInvalidConfig, "replay mode requires an existing cassette (" +
                                                 config_.cassette_path.string() + ")");
    cassette_ = std::make_unique<Cassette>(Cassette::load(config_.cassette_path));
    return;
  }
  if (config_.mode == GatewayMode::kRecord) {
    if (config_.cassette_path.empty()) throw Error(ErrorCode::kInvalidConfig, "record mode requires a cassette path");
    std::error_code ec;
    cassette_ = std::make_unique<Cassette>(std::filesystem::exists(config_.cassette_path, ec)
                                               ? Cassette::load(config_.cassette_path)
                                               : Cassette());
  }
  if (!transport_) transport_ = make_http_transport();
}

nlohmann::json LlmGateway::build_request(std::string_view prompt, const GenerationParams& params) const {
  nlohmann::json req = {{"model", config_.model_name},
                        {"temperature", params.temperature},
                        {"top_p", params.top_p},
                        {"max_tokens", params.max_tokens},
                        {"stream", false}};
  if (config_.api_style == ApiStyle::kChat) {
    req["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt)}}});
  } else {
    req["prompt"] = std::string(prompt);
  }
  if (!params.stop_sequences.empty()) req["stop"] = params.stop_sequences;
  return req;
}

std::string LlmGateway::request_hash(const nlohmann::json& request) { return sha256_hex(request.dump()); }

std::string LlmGateway::extract_text(const nlohmann::json& response) const {
  try {
    const auto& choice = response.at("choices").at(0);
    if (config_.api_style == ApiStyle::kChat) return choice.at("message").at("content").get<std::string>();
    return choice.at("text").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kEndpoint, "response has no completion text: " + response.dump().substr(0, 200));
  }
}

nlohmann::json LlmGateway::post_with_retries(const nlohmann::json& request, std::size_t& retries) {
  const auto [host, prefix] = split_url(config_.base_url);
  const std::string path = prefix + (config_.api_style == ApiStyle::kChat ? "/chat/completions" : "/completions");
  std::multimap<std::string, std::string> headers{{"Accept", "application/json"}};
  if (config_.auth_header) headers.emplace("Authorization", *config_.auth_header);
  const std::string body = request.dump();

  SlotGuard slot(slots_);
  for (std::size_t attempt = 0;; ++attempt) {
    std::optional<Error> failure;
    try {
      const HttpResponse res = transport_->post(host, path, body, headers, config_.timeout);
      if (res.status >= 200 && res.status < 300) {
        try {
          return nlohmann::json::parse(res.body);
        } catch (const nlohmann::json::parse_error&) {
          throw Error(ErrorCode::kEndpoint, "endpoint returned non-JSON body: " + res.body.substr(0, 200));
        }
      }
      Error err(ErrorCode::kEndpoint, "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 500));
      if (!retryable(res.status)) throw err;
      failure = err;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTransport) throw;
      failure = e;
    }
    if (attempt >= config_.max_retries) throw *failure;
    ++retries;
    std::this_thread::sleep_for(config_.backoff_base * (1LL << std::min<std::size_t>(attempt, 16)));
  }
}

Completion LlmGateway::complete(std::string_view prompt, const GenerationParams& params) {
  params.validate();
  const nlohmann::json request = build_request(prompt, params);
  Completion out;
  out.request_hash = request_hash(request);

  nlohmann::json response;
  if (config_.mode == GatewayMode::kReplay) {
    auto hit = cassette_->find(out.request_hash);
    if (!hit) throw Error(ErrorCode::kCassetteMiss, "no recorded response for request " + out.request_hash);
    response = std::move(*hit);
    out.replayed = true;
  } else {
    response = post_with_retries(request, out.retries);
    if (config_.mode == GatewayMode::kRecord)
      cassette_->append(config_.cassette_path, out.request_hash, request, response);
  }

  out.text = extract_text(response);
  out.usage = response.value("usage", nlohmann::json::object());
  if (out.text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw Error(ErrorCode::kEmptyCompletion, "endpoint returned an empty completion");
  return out;
}

}  // namespace matforge
