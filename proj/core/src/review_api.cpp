#include "matforge/review_api.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <httplib.h>

#include "matforge/errors.hpp"
#include "matforge/marker_codec.hpp"
#include "matforge/run_store.hpp"
#include "matforge/schema.hpp"
#include "matforge/templates.hpp"

namespace matforge {

using json = nlohmann::json;

std::string_view to_string(ReviewState s) noexcept {
  switch (s) {
    case ReviewState::kPending: return "pending";
    case ReviewState::kAccepted: return "accepted";
    case ReviewState::kEdited: return "edited";
    case ReviewState::kRejected: return "rejected";
  }
  return "pending";
}

std::optional<ReviewState> parse_review_state(std::string_view s) {
  if (s == "pending") return ReviewState::kPending;
  if (s == "accepted") return ReviewState::kAccepted;
  if (s == "edited") return ReviewState::kEdited;
  if (s == "rejected") return ReviewState::kRejected;
  return std::nullopt;
}

namespace {

ApiResponse error_response(int status, std::string message, json extra = json::object()) {
  extra["error"] = std::move(message);
  return {status, std::move(extra)};
}

bool terminal(std::string_view state) { return state == "accepted" || state == "rejected"; }

bool safe_id(std::string_view id) {
  try {
    check_safe_id(id);
    return true;
  } catch (const Error&) {
    return false;
  }
}

void append_line(const std::filesystem::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out << line << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kStore, "cannot append to " + path.string());
}

json spans_json(const std::vector<Span>& spans) {
  json arr = json::array();
  for (const auto& s : spans) arr.push_back(s);
  return arr;
}

}  // namespace

ReviewService::ReviewService(std::filesystem::path run_dir, std::shared_ptr<LlmGateway> gateway)
    : run_dir_(std::move(run_dir)), gateway_(std::move(gateway)) {
  manifest_ = load_manifest(run_dir_);
  config_ = RunConfig::from_json(manifest_.config);
  for (const auto& d : manifest_.docs) doc_ids_.push_back(d.at("doc_id").get<std::string>());
}

ReviewService::~ReviewService() { wait_idle(); }

void ReviewService::wait_idle() {
  std::vector<std::jthread> jobs;
  {
    std::lock_guard lock(jobs_mu_);
    jobs.swap(jobs_);
  }
  for (auto& j : jobs)
    if (j.joinable()) j.join();
}

std::mutex& ReviewService::doc_mutex(const std::string& doc_id) {
  std::lock_guard lock(map_mu_);
  auto& slot = doc_mu_[doc_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

bool ReviewService::known_doc(std::string_view doc_id) const {
  return safe_id(doc_id) && std::find(doc_ids_.begin(), doc_ids_.end(), doc_id) != doc_ids_.end();
}

json ReviewService::load_review(const std::string& doc_id) const {
  const auto path = run_dir_ / "docs" / doc_id / "review.json";
  if (file_exists(path)) return json::parse(read_file(path));
  return {{"doc_id", doc_id},
          {"state", "pending"},
          {"origin", "model"},
          {"job", {{"status", "idle"}}},
          {"history", json::array()}};
}

void ReviewService::save_review(const std::string& doc_id, const json& review) {
  write_file_atomic(run_dir_ / "docs" / doc_id / "review.json", review.dump(2) + "\n");
}

ApiResponse ReviewService::get_schema() {
  std::lock_guard lock(schema_mu_);
  return {200, json::parse(read_file(run_dir_ / "schema.json"))};
}

ApiResponse ReviewService::put_schema(std::string_view body, std::optional<std::string> if_match) {
  std::lock_guard lock(schema_mu_);
  const EntitySchema current = parse_schema(read_file(run_dir_ / "schema.json"));

  if (if_match) {
    std::string v = *if_match;
    v.erase(std::remove(v.begin(), v.end(), '"'), v.end());
    if (v != "*" && v != std::to_string(current.version))
      return error_response(409, "schema version is " + std::to_string(current.version) + ", not " + v,
                            {{"version", current.version}});
  }
  EntitySchema next;
  try {
    const json j = json::parse(body);
    if (j.contains("version") && j["version"].is_number_integer() && j["version"].get<std::int64_t>() != current.version)
      return error_response(409, "schema was edited from a stale version", {{"version", current.version}});
    json k = j;
    k["version"] = current.version + 1;
    next = k.get<EntitySchema>();
  } catch (const json::exception& e) {
    return error_response(400, std::string("bad schema body: ") + e.what());
  }
  if (const auto v = validate_schema(next); !v.empty())
    return error_response(400, "schema is invalid", {{"violations", v}});

  write_file_atomic(run_dir_ / "schema.json", write_schema(next));
  append_line(run_dir_ / "schema_history.jsonl",
              json{{"timestamp", utc_timestamp()}, {"from_version", current.version}, {"schema", next}}.dump());
  return {200, json(next)};
}

ApiResponse ReviewService::list_docs() {
  json docs = json::array();
  for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
    const auto& id = doc_ids_[i];
    std::lock_guard lock(doc_mutex(id));
    const json review = load_review(id);
    const auto result_path = run_dir_ / "docs" / id / "result.json";
    const json result = file_exists(result_path) ? json::parse(read_file(result_path)) : json::parse(manifest_.docs[i].dump());
    docs.push_back({{"doc_id", id},
                    {"status", result.value("status", "failed")},
                    {"review_state", review.value("state", "pending")},
                    {"origin", review.value("origin", "model")},
                    {"job", review.value("job", json::object())}});
  }
  return {200, {{"run_id", manifest_.run_id}, {"docs", docs}}};
}

ApiResponse ReviewService::get_doc(std::string_view doc_id) {
  if (!known_doc(doc_id)) return error_response(404, "unknown doc '" + std::string(doc_id) + "'");
  const std::string id(doc_id);
  std::lock_guard lock(doc_mutex(id));
  const auto dir = run_dir_ / "docs" / id;
  const std::string text = file_exists(dir / "raw.txt") ? read_file(dir / "raw.txt") : std::string();
  json spans = json::array();
  if (file_exists(dir / "annotated.json")) spans = json::parse(read_file(dir / "annotated.json")).value("spans", json::array());
  const json result = file_exists(dir / "result.json") ? json::parse(read_file(dir / "result.json")) : json::object();
  const json review = load_review(id);
  return {200,
          {{"doc_id", id},
           {"text", text},
           {"spans", spans},
           {"marked_text", file_exists(dir / "marked.txt") ? json(read_file(dir / "marked.txt")) : json()},
           {"status", result.value("status", "failed")},
           {"result", result},
           {"review", review}}};
}

ApiResponse ReviewService::put_annotation(std::string_view doc_id, std::string_view body) {
  if (!known_doc(doc_id)) return error_response(404, "unknown doc '" + std::string(doc_id) + "'");
  const std::string id(doc_id);
  std::lock_guard lock(doc_mutex(id));
  const auto dir = run_dir_ / "docs" / id;
  const std::string text = read_file(dir / "raw.txt");

  AnnotatedDoc doc{id, text, {}};
  std::string actor = "researcher";
  try {
    const json j = json::parse(body);
    if (j.contains("text") && j["text"].get<std::string>() != text)
      return error_response(400, "annotation text differs from the document text");
    if (j.contains("doc_id") && j["doc_id"].get<std::string>() != id)
      return error_response(400, "doc_id in body does not match the URL");
    doc.spans = j.at("spans").get<std::vector<Span>>();
    actor = j.value("actor", actor);
  } catch (const json::exception& e) {
    return error_response(400, std::string("bad annotation body: ") + e.what());
  }

  EntitySchema schema;
  {
    std::lock_guard slock(schema_mu_);
    schema = parse_schema(read_file(run_dir_ / "schema.json"));
  }
  if (const auto v = validate_doc(doc, schema); !v.empty())
    return error_response(400, "annotation is invalid", {{"violations", v}});

  json review = load_review(id);
  if (terminal(review.value("state", "")))
    return error_response(409, "doc is " + review["state"].get<std::string>() + "; re-extract to reopen it");

  std::vector<Span> before;
  if (file_exists(dir / "annotated.json")) before = json::parse(read_file(dir / "annotated.json")).at("spans").get<std::vector<Span>>();
  std::vector<Span> after = doc.spans;
  sort_spans(before);
  sort_spans(after);
  std::vector<Span> added, removed;
  std::set_difference(after.begin(), after.end(), before.begin(), before.end(), std::back_inserter(added));
  std::set_difference(before.begin(), before.end(), after.begin(), after.end(), std::back_inserter(removed));

  doc.spans = after;
  write_file_atomic(dir / "annotated.json", json(doc).dump(2) + "\n");
  write_file_atomic(dir / "marked.txt", render_marked(doc, schema, MarkerFormat::entity()));
  review["state"] = "edited";
  review["origin"] = "human";
  review["history"].push_back({{"timestamp", utc_timestamp()},
                               {"actor", actor},
                               {"action", "edit"},
                               {"diff", {{"added", spans_json(added)}, {"removed", spans_json(removed)}}}});
  save_review(id, review);
  return {200, {{"doc_id", id}, {"text", text}, {"spans", spans_json(after)}, {"review", review}}};
}

ApiResponse ReviewService::set_review(std::string_view doc_id, std::string_view body) {
  if (!known_doc(doc_id)) return error_response(404, "unknown doc '" + std::string(doc_id) + "'");
  const std::string id(doc_id);
  std::string state, actor = "researcher";
  try {
    const json j = json::parse(body);
    state = j.at("state").get<std::string>();
    actor = j.value("actor", actor);
  } catch (const json::exception& e) {
    return error_response(400, std::string("bad review body: ") + e.what());
  }
  if (state != "accepted" && state != "rejected")
    return error_response(400, "state must be accepted or rejected");

  std::lock_guard lock(doc_mutex(id));
  json review = load_review(id);
  if (terminal(review.value("state", "")))
    return error_response(409, "doc is already " + review["state"].get<std::string>());
  review["state"] = state;
  review["history"].push_back({{"timestamp", utc_timestamp()}, {"actor", actor}, {"action", state}});
  save_review(id, review);
  return {200, review};
}

ApiResponse ReviewService::reextract(std::string_view doc_id) {
  if (!known_doc(doc_id)) return error_response(404, "unknown doc '" + std::string(doc_id) + "'");
  if (!gateway_) return error_response(503, "no model endpoint configured");
  const std::string id(doc_id);
  std::int64_t version = 0;
  {
    std::lock_guard slock(schema_mu_);
    version = parse_schema(read_file(run_dir_ / "schema.json")).version;
  }
  json review;
  {
    std::lock_guard lock(doc_mutex(id));
    review = load_review(id);
    if (review["job"].value("status", "") == "queued" || review["job"].value("status", "") == "running")
      return {202, review};
    review["state"] = "pending";
    review["origin"] = "model";
    review["job"] = {{"status", "queued"}, {"schema_version", version}};
    review["history"].push_back({{"timestamp", utc_timestamp()}, {"actor", "system"}, {"action", "reextract"},
                                 {"schema_version", version}});
    save_review(id, review);
  }
  std::lock_guard jl(jobs_mu_);
  jobs_.emplace_back([this, id, version] { run_job(id, version); });
  return {202, review};
}

void ReviewService::run_job(std::string doc_id, std::int64_t schema_version) {
  auto set_job = [&](json job) {
    std::lock_guard lock(doc_mutex(doc_id));
    json review = load_review(doc_id);
    job["schema_version"] = schema_version;
    job["updated_at"] = utc_timestamp();
    review["job"] = std::move(job);
    save_review(doc_id, review);
  };
  set_job({{"status", "running"}});
  try {
    EntitySchema schema;
    {
      std::lock_guard slock(schema_mu_);
      schema = parse_schema(read_file(run_dir_ / "schema.json"));
    }
    const TemplateStore templates = TemplateStore::load_dir(run_dir_ / "templates");
    const auto dir = run_dir_ / "docs" / doc_id;
    const RawDoc raw{doc_id, read_file(dir / "raw.txt")};
    DocResult result = process_doc(raw, schema, templates, config_, *gateway_);
    {
      std::lock_guard lock(doc_mutex(doc_id));
      persist_doc(dir, result);
    }
    json job = {{"status", result.status == StageStatus::kFailed ? "failed" : "done"},
                {"doc_status", std::string(to_string(result.status))}};
    if (!result.error.empty()) job["error"] = result.error;
    set_job(std::move(job));
  } catch (const std::exception& e) {
    set_job({{"status", "failed"}, {"error", e.what()}});
  }
}

ApiResponse ReviewService::get_kg(std::string_view doc_id) {
  if (!known_doc(doc_id)) return error_response(404, "unknown doc '" + std::string(doc_id) + "'");
  const std::string id(doc_id);
  std::lock_guard lock(doc_mutex(id));
  const auto dir = run_dir_ / "docs" / id;
  const json result = file_exists(dir / "result.json") ? json::parse(read_file(dir / "result.json")) : json::object();
  json out = {{"doc_id", id},
              {"kg_status", result.value("kg_status", json())},
              {"kg", file_exists(dir / "kg.json") ? json::parse(read_file(dir / "kg.json")) : json()}};
  if (result.contains("kg")) out["raw_completion"] = result["kg"].value("raw_completion", "");
  return {200, out};
}

ApiResponse ReviewService::run_report(std::string_view run_id) {
  if (run_id != manifest_.run_id) return error_response(404, "unknown run '" + std::string(run_id) + "'");
  json out = {{"manifest", json::parse(manifest_.to_json().dump())}};
  const auto gold_dir = run_dir_ / "gold";
  std::error_code ec;
  if (std::filesystem::is_directory(gold_dir, ec)) {
    try {
      EntitySchema schema;
      {
        std::lock_guard slock(schema_mu_);
        schema = parse_schema(read_file(run_dir_ / "schema.json"));
      }
      const RunScore s = score_run(load_run_kgs(run_dir_), load_gold_kgs(gold_dir, schema));
      out["scores"] = {{"nodes", to_json(s.nodes)}, {"relations", to_json(s.relations)}};
    } catch (const Error& e) {
      out["scores_error"] = e.what();
    }
  }
  return {200, out};
}

struct ReviewServer::Impl {
  Impl(ReviewService& s, ServerOptions o) : service(s), options(std::move(o)) {}
  ReviewService& service;
  ServerOptions options;
  httplib::Server server;
  std::thread thread;
};

ReviewServer::ReviewServer(ReviewService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;
  srv.set_default_headers({{"Access-Control-Allow-Origin", impl_->options.cors_origin},
                           {"Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type, If-Match"},
                           {"Access-Control-Expose-Headers", "ETag"}});

  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  // Store or parse failures surface as 500 with a JSON body.
  auto guarded = [send](auto fn) {
    return [send, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        send(res, fn(req));
      } catch (const std::exception& e) {
        send(res, error_response(500, e.what()));
      }
    };
  };
  const std::string id = R"(([^/]+))";

  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  srv.Get("/schema", guarded([&svc](const httplib::Request&) {
            return svc.get_schema();
          }));
  srv.Put("/schema", guarded([&svc](const httplib::Request& req) {
            std::optional<std::string> if_match;
            if (req.has_header("If-Match")) if_match = req.get_header_value("If-Match");
            return svc.put_schema(req.body, if_match);
          }));
  srv.Get("/docs", guarded([&svc](const httplib::Request&) { return svc.list_docs(); }));
  srv.Get("/docs/" + id, guarded([&svc](const httplib::Request& req) { return svc.get_doc(req.matches[1].str()); }));
  srv.Put("/docs/" + id + "/annotation", guarded([&svc](const httplib::Request& req) {
            return svc.put_annotation(req.matches[1].str(), req.body);
          }));
  srv.Post("/docs/" + id + "/review", guarded([&svc](const httplib::Request& req) {
             return svc.set_review(req.matches[1].str(), req.body);
           }));
  srv.Post("/docs/" + id + "/reextract",
           guarded([&svc](const httplib::Request& req) { return svc.reextract(req.matches[1].str()); }));
  srv.Get("/docs/" + id + "/kg", guarded([&svc](const httplib::Request& req) { return svc.get_kg(req.matches[1].str()); }));
  srv.Get("/runs/" + id + "/report",
          guarded([&svc](const httplib::Request& req) { return svc.run_report(req.matches[1].str()); }));
  srv.set_post_routing_handler([](const httplib::Request& req, httplib::Response& res) {
    if (req.path == "/schema" && res.status == 200 && req.method != "OPTIONS") {
      const auto body = json::parse(res.body, nullptr, false);
      if (body.is_object() && body.contains("version")) res.set_header("ETag", "\"" + body["version"].dump() + "\"");
    }
  });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) res.set_content(json{{"error", "not found"}}.dump(), "application/json");
  });
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::start() {
  auto& srv = impl_->server;
  int port = impl_->options.port;
  if (port == 0) {
    port = srv.bind_to_any_port(impl_->options.host);
  } else if (!srv.bind_to_port(impl_->options.host, port)) {
    port = -1;
  }
  if (port < 0) throw Error(ErrorCode::kStore, "cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return port;
}

void ReviewServer::serve() {
  if (!impl_->server.listen(impl_->options.host, impl_->options.port))
    throw Error(ErrorCode::kStore, "cannot listen on " + impl_->options.host + ":" + std::to_string(impl_->options.port));
}

void ReviewServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace matforge
