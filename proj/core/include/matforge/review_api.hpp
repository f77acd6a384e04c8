#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "matforge/gateway.hpp"
#include "matforge/pipeline.hpp"

namespace matforge {

enum class ReviewState { kPending, kAccepted, kEdited, kRejected };

std::string_view to_string(ReviewState s) noexcept;
std::optional<ReviewState> parse_review_state(std::string_view s);

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// File-backed handlers over one run directory. Thread-safe; writes to a doc
// are serialized per doc_id and reach disk before the handler returns.
class ReviewService {
 public:
  // `gateway` may be null, in which case reextract answers 503.
  ReviewService(std::filesystem::path run_dir, std::shared_ptr<LlmGateway> gateway);
  ~ReviewService();

  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  ApiResponse get_schema();
  // `if_match` is the schema version the client last saw.
  ApiResponse put_schema(std::string_view body, std::optional<std::string> if_match);
  ApiResponse list_docs();
  ApiResponse get_doc(std::string_view doc_id);
  ApiResponse put_annotation(std::string_view doc_id, std::string_view body);
  ApiResponse set_review(std::string_view doc_id, std::string_view body);
  ApiResponse reextract(std::string_view doc_id);
  ApiResponse get_kg(std::string_view doc_id);
  ApiResponse run_report(std::string_view run_id);

  // Blocks until queued re-extraction jobs have finished.
  void wait_idle();

  const std::filesystem::path& run_dir() const noexcept { return run_dir_; }

 private:
  std::mutex& doc_mutex(const std::string& doc_id);
  bool known_doc(std::string_view doc_id) const;
  nlohmann::json load_review(const std::string& doc_id) const;
  void save_review(const std::string& doc_id, const nlohmann::json& review);
  void run_job(std::string doc_id, std::int64_t schema_version);

  std::filesystem::path run_dir_;
  std::shared_ptr<LlmGateway> gateway_;
  RunManifest manifest_;
  RunConfig config_;
  std::vector<std::string> doc_ids_;

  std::mutex schema_mu_;
  std::mutex map_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> doc_mu_;
  std::mutex jobs_mu_;
  std::vector<std::jthread> jobs_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8741;  // 0 picks a free port
  std::string cors_origin = "*";
};

class ReviewServer {
 public:
  ReviewServer(ReviewService& service, ServerOptions options);
  ~ReviewServer();

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Serves on the calling thread until stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace matforge
