#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace matforge {

struct GenerationParams {
  double temperature = 0.0;
  double top_p = 0.9;
  std::size_t max_tokens = 2048;
  std::vector<std::string> stop_sequences;

  // Throws InvalidConfig unless temperature >= 0 and 0 < top_p <= 1.
  void validate() const;
};

enum class GenerationTask { kNerEval, kAnnotate, kKgConstruct };

// ner_eval: (0.1, 0.9); annotate and kg_construct: (0, 0.9).
GenerationParams default_params(GenerationTask task);

enum class ApiStyle { kChat, kCompletion };
enum class GatewayMode { kLive, kRecord, kReplay };

GatewayMode parse_gateway_mode(std::string_view s);

struct GatewayConfig {
  std::string base_url = "http://127.0.0.1:11434/v1";
  std::string model_name;
  ApiStyle api_style = ApiStyle::kChat;
  std::chrono::milliseconds timeout{120'000};
  std::size_t max_retries = 3;
  std::optional<std::string> auth_header;  // full header value, e.g. "Bearer ..."
  GatewayMode mode = GatewayMode::kLive;
  std::filesystem::path cassette_path;
  std::size_t max_concurrency = 4;
  std::chrono::milliseconds backoff_base{500};

  // Reads MATFORGE_LLM_BASE_URL, MATFORGE_LLM_MODEL, MATFORGE_LLM_API_KEY
  // over the defaults above.
  static GatewayConfig from_env();
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// POST transport; throws Error(kTransport) on connect/timeout failure.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& base_url, const std::string& path, const std::string& body,
                            const std::multimap<std::string, std::string>& headers,
                            std::chrono::milliseconds timeout) = 0;
};

std::shared_ptr<HttpTransport> make_http_transport();

// JSONL of {request_hash, request, response, timestamp}; later lines win.
class Cassette {
 public:
  Cassette() = default;
  Cassette(Cassette&& other) noexcept : entries_(std::move(other.entries_)) {}
  static Cassette load(const std::filesystem::path& path);

  std::optional<nlohmann::json> find(const std::string& request_hash) const;
  std::size_t size() const { return entries_.size(); }

  // Appends one line to `path` and the in-memory index. Thread-safe.
  void append(const std::filesystem::path& path, const std::string& request_hash, const nlohmann::json& request,
              const nlohmann::json& response);

 private:
  std::map<std::string, nlohmann::json> entries_;
  mutable std::mutex mu_;
};

struct Completion {
  std::string text;
  nlohmann::json usage;
  std::string request_hash;
  std::size_t retries = 0;
  bool replayed = false;
};

class LlmGateway {
 public:
  explicit LlmGateway(GatewayConfig config, std::shared_ptr<HttpTransport> transport = nullptr);

  // Throws Transport, Endpoint, EmptyCompletion, CassetteMiss.
  Completion complete(std::string_view prompt, const GenerationParams& params);

  nlohmann::json build_request(std::string_view prompt, const GenerationParams& params) const;

  // SHA-256 over the request's canonical (sorted-key) JSON dump.
  static std::string request_hash(const nlohmann::json& request);

  const GatewayConfig& config() const noexcept { return config_; }

 private:
  nlohmann::json post_with_retries(const nlohmann::json& request, std::size_t& retries);
  std::string extract_text(const nlohmann::json& response) const;

  GatewayConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  std::unique_ptr<Cassette> cassette_;
  std::counting_semaphore<1024> slots_;
};

}  // namespace matforge
