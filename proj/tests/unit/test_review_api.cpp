#include <gtest/gtest.h>

#include <httplib.h>

#include "matforge/review_api.hpp"
#include "temp_dir.hpp"
#include "test_util.hpp"

using namespace matforge;
using namespace matforge::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path stages_cassette() { return fixture_dir() / "cassettes" / "stages.jsonl"; }

// A finished hybrid run over the review corpus, replayed from the cassette.
class ReviewApi : public ::testing::Test {
 protected:
  void SetUp() override {
    LlmGateway gw(replay_config(stages_cassette()));
    RunConfig cfg;
    cfg.run_id = "review";
    const auto corpus = load_raw_jsonl(read_file(fixture_dir() / "review" / "corpus.jsonl"));
    run(corpus, materials(), TemplateStore::load_dir(data_dir() / "templates"), cfg, gw, RunStore(tmp_.path()));
    run_dir_ = tmp_.path() / "review";
  }

  void serve(bool with_gateway = true, std::string origin = "*") {
    std::shared_ptr<LlmGateway> gw;
    if (with_gateway) gw = std::make_shared<LlmGateway>(replay_config(stages_cassette()));
    service_ = std::make_unique<ReviewService>(run_dir_, gw);
    server_ = std::make_unique<ReviewServer>(*service_, ServerOptions{"127.0.0.1", 0, std::move(origin)});
    const int port = server_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port);
  }

  void TearDown() override {
    if (server_) server_->stop();
    server_.reset();
    service_.reset();
  }

  static json body(const httplib::Result& r) { return json::parse(r->body); }

  TempDir tmp_{"review"};
  fs::path run_dir_;
  std::unique_ptr<ReviewService> service_;
  std::unique_ptr<ReviewServer> server_;
  std::unique_ptr<httplib::Client> client_;
};

std::string v2_schema() { return read_file(fixture_dir() / "review" / "materials_v2.json"); }

}  // namespace

TEST_F(ReviewApi, ListAndGetDocs) {
  serve();
  auto r = client_->Get("/docs");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const json list = body(r);
  EXPECT_EQ(list["run_id"], "review");
  ASSERT_EQ(list["docs"].size(), 1u);
  EXPECT_EQ(list["docs"][0]["doc_id"], "doc-nano");
  EXPECT_EQ(list["docs"][0]["review_state"], "pending");

  r = client_->Get("/docs/doc-nano");
  ASSERT_TRUE(r);
  const json doc = body(r);
  EXPECT_EQ(doc["text"], "nano platinum is used as a catalyst");
  EXPECT_EQ(doc["spans"].size(), 2u);
  EXPECT_EQ(doc["marked_text"], "nano <MAT>platinum</MAT> is used as a <APL>catalyst</APL>");

  r = client_->Get("/docs/doc-missing");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  EXPECT_TRUE(body(r).contains("error"));
  EXPECT_EQ(client_->Get("/docs/..")->status, 404);
  EXPECT_EQ(client_->Get("/nowhere")->status, 404);
}

TEST_F(ReviewApi, SchemaVersioning) {
  serve();
  auto r = client_->Get("/schema");
  ASSERT_TRUE(r);
  EXPECT_EQ(body(r)["version"], 1);
  EXPECT_EQ(r->get_header_value("ETag"), "\"1\"");

  r = client_->Put("/schema", httplib::Headers{{"If-Match", "\"1\""}}, v2_schema(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(body(r)["version"], 2);
  EXPECT_EQ(r->get_header_value("ETag"), "\"2\"");
  EXPECT_EQ(body(client_->Get("/schema"))["version"], 2);

  // A second writer still holding version 1 is refused.
  r = client_->Put("/schema", httplib::Headers{{"If-Match", "\"1\""}}, v2_schema(), "application/json");
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(body(r)["version"], 2);
  r = client_->Put("/schema", v2_schema(), "application/json");  // body says version 1
  EXPECT_EQ(r->status, 409);

  json bad = json::parse(v2_schema());
  bad["version"] = 2;
  bad["relation_types"][0]["source"] = "NOPE";
  r = client_->Put("/schema", bad.dump(), "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_FALSE(body(r)["violations"].empty());
  EXPECT_EQ(client_->Put("/schema", "{not json", "application/json")->status, 400);
  EXPECT_EQ(body(client_->Get("/schema"))["version"], 2);

  const std::string history = read_file(run_dir_ / "schema_history.jsonl");
  EXPECT_EQ(std::count(history.begin(), history.end(), '\n'), 1);
}

TEST_F(ReviewApi, EditAnnotation) {
  serve();
  const json edit = {{"spans", {{{"start", 0}, {"end", 4}, {"symbol", "DSC"}},
                                {{"start", 5}, {"end", 13}, {"symbol", "MAT"}},
                                {{"start", 27}, {"end", 35}, {"symbol", "APL"}}}},
                     {"actor", "alice"}};
  auto r = client_->Put("/docs/doc-nano/annotation", edit.dump(), "application/json");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  const json review = body(r)["review"];
  EXPECT_EQ(review["state"], "edited");
  EXPECT_EQ(review["origin"], "human");
  EXPECT_EQ(review["history"].back()["diff"]["added"].size(), 1u);
  EXPECT_EQ(review["history"].back()["diff"]["removed"].size(), 0u);
  EXPECT_EQ(read_file(run_dir_ / "docs" / "doc-nano" / "marked.txt"),
            "<DSC>nano</DSC> <MAT>platinum</MAT> is used as a <APL>catalyst</APL>");

  const json overlap = {{"spans", {{{"start", 0}, {"end", 8}, {"symbol", "DSC"}}, {{"start", 5}, {"end", 13}, {"symbol", "MAT"}}}}};
  r = client_->Put("/docs/doc-nano/annotation", overlap.dump(), "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_FALSE(body(r)["violations"].empty());
  const json unknown = {{"spans", {{{"start", 0}, {"end", 4}, {"symbol", "XYZ"}}}}};
  EXPECT_EQ(client_->Put("/docs/doc-nano/annotation", unknown.dump(), "application/json")->status, 400);
  const json other_text = {{"text", "something else"}, {"spans", json::array()}};
  EXPECT_EQ(client_->Put("/docs/doc-nano/annotation", other_text.dump(), "application/json")->status, 400);
  EXPECT_EQ(client_->Put("/docs/nope/annotation", edit.dump(), "application/json")->status, 404);
  // Rejected edits leave the file alone.
  EXPECT_EQ(body(client_->Get("/docs/doc-nano"))["spans"].size(), 3u);
}

TEST_F(ReviewApi, AcceptIsTerminalUntilReextract) {
  serve();
  auto r = client_->Post("/docs/doc-nano/review", R"({"state":"accepted"})", "application/json");
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(body(r)["state"], "accepted");
  EXPECT_EQ(client_->Post("/docs/doc-nano/review", R"({"state":"rejected"})", "application/json")->status, 409);
  EXPECT_EQ(client_->Put("/docs/doc-nano/annotation", R"({"spans":[]})", "application/json")->status, 409);
  EXPECT_EQ(client_->Post("/docs/doc-nano/review", R"({"state":"maybe"})", "application/json")->status, 400);

  r = client_->Post("/docs/doc-nano/reextract", "", "application/json");
  EXPECT_EQ(r->status, 202);
  service_->wait_idle();
  EXPECT_EQ(body(client_->Get("/docs/doc-nano"))["review"]["state"], "pending");
  EXPECT_EQ(client_->Post("/docs/doc-nano/review", R"({"state":"rejected"})", "application/json")->status, 200);
}

TEST_F(ReviewApi, SchemaEditThenReextractRefreshesHighlights) {
  serve();
  ASSERT_EQ(client_->Put("/schema", v2_schema(), "application/json")->status, 200);
  auto r = client_->Post("/docs/doc-nano/reextract", "", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 202);
  EXPECT_EQ(body(r)["job"]["status"], "queued");
  EXPECT_EQ(body(r)["job"]["schema_version"], 2);
  service_->wait_idle();

  const json doc = body(client_->Get("/docs/doc-nano"));
  EXPECT_EQ(doc["review"]["job"]["status"], "done") << doc.dump();
  EXPECT_EQ(doc["review"]["origin"], "model");
  EXPECT_EQ(doc["marked_text"], "<DSC>nano</DSC> <MAT>platinum</MAT> is used as a <APL>catalyst</APL>");
  EXPECT_EQ(doc["spans"].size(), 3u);

  const json kg = body(client_->Get("/docs/doc-nano/kg"));
  EXPECT_EQ(kg["kg_status"], "ok");
  bool has_nano = false;
  for (const auto& n : kg["kg"]["nodes"]) has_nano = has_nano || n["node_name"] == "nano";
  EXPECT_TRUE(has_nano) << kg.dump();
  // Attempts from the original run are kept; the re-extraction adds two.
  EXPECT_EQ(std::distance(fs::directory_iterator(run_dir_ / "docs" / "doc-nano" / "attempts"), fs::directory_iterator{}), 4);
}

TEST_F(ReviewApi, ReextractWithoutGateway) {
  serve(false);
  auto r = client_->Post("/docs/doc-nano/reextract", "", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 503);
  EXPECT_EQ(client_->Post("/docs/nope/reextract", "", "application/json")->status, 404);
}

TEST_F(ReviewApi, ReportAndKg) {
  serve();
  auto r = client_->Get("/runs/review/report");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(body(r)["manifest"]["prompts"]["total"], 2);
  EXPECT_FALSE(body(r).contains("scores"));
  EXPECT_EQ(client_->Get("/runs/other/report")->status, 404);

  fs::create_directories(run_dir_ / "gold");
  fs::copy_file(run_dir_ / "docs" / "doc-nano" / "kg.json", run_dir_ / "gold" / "doc-nano.json");
  r = client_->Get("/runs/review/report");
  EXPECT_EQ(body(r)["scores"]["nodes"]["micro"]["f1"], 1.0);

  const json kg = body(client_->Get("/docs/doc-nano/kg"));
  EXPECT_EQ(kg["doc_id"], "doc-nano");
  EXPECT_FALSE(kg["raw_completion"].get<std::string>().empty());
}

TEST_F(ReviewApi, Cors) {
  serve(true, "http://localhost:5173");
  auto r = client_->Get("/docs");
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");
  r = client_->Options("/schema");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 204);
  EXPECT_NE(r->get_header_value("Access-Control-Allow-Methods").find("PUT"), std::string::npos);
  EXPECT_NE(r->get_header_value("Access-Control-Allow-Headers").find("If-Match"), std::string::npos);
}

TEST_F(ReviewApi, StatePersistsAcrossRestart) {
  serve();
  ASSERT_EQ(client_->Post("/docs/doc-nano/review", R"({"state":"rejected"})", "application/json")->status, 200);
  TearDown();
  serve();
  EXPECT_EQ(body(client_->Get("/docs"))["docs"][0]["review_state"], "rejected");
}
