// matforge command line: thin wrappers over the core library.
//
// Exit codes: 0 ok, 1 validation failure, 2 I/O or gateway failure, 64 usage.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "matforge/bio.hpp"
#include "matforge/dataset.hpp"
#include "matforge/errors.hpp"
#include "matforge/gateway.hpp"
#include "matforge/kg.hpp"
#include "matforge/marker_codec.hpp"
#include "matforge/ner_eval.hpp"
#include "matforge/pipeline.hpp"
#include "matforge/review_api.hpp"
#include "matforge/run_store.hpp"
#include "matforge/schema.hpp"
#include "matforge/templates.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
using namespace matforge;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

fs::path data_dir() {
  if (const char* env = std::getenv("MATFORGE_DATA_DIR"); env && *env) return env;
  std::error_code ec;
  if (fs::is_directory(fs::path(MATFORGE_DEFAULT_DATA_DIR) / "schemas", ec)) return MATFORGE_DEFAULT_DATA_DIR;
  return MATFORGE_SOURCE_DATA_DIR;
}

// A path, or the name of a bundled schema ("sofc_slot" / "sofc_slot.json").
EntitySchema resolve_schema(const std::string& arg) {
  if (file_exists(arg)) return load_schema_file(arg);
  fs::path p = data_dir() / "schemas" / arg;
  if (p.extension() != ".json") p += ".json";
  if (file_exists(p)) return load_schema_file(p.string());
  throw Error(ErrorCode::kStore, "schema '" + arg + "' not found");
}

TemplateStore resolve_templates(const std::string& arg) {
  return TemplateStore::load_dir(arg.empty() ? data_dir() / "templates" : fs::path(arg));
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  return read_file(path);
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  write_file_atomic(path, content);
}

struct GatewayOptions {
  std::string base_url;
  std::string model;
  std::string mode;
  std::string cassette;
  std::string api_style = "chat";
  long timeout_ms = 120'000;
  std::size_t retries = 3;
  std::size_t concurrency = 4;

  void add(CLI::App* cmd) {
    cmd->add_option("--base-url", base_url, "Endpoint base URL (default $MATFORGE_LLM_BASE_URL)");
    cmd->add_option("--model", model, "Model name (default $MATFORGE_LLM_MODEL)");
    cmd->add_option("--gateway-mode", mode, "live | record | replay")
        ->check(CLI::IsMember({"live", "record", "replay"}));
    cmd->add_option("--cassette", cassette, "Cassette JSONL for record/replay");
    cmd->add_option("--api-style", api_style, "chat | completion")->check(CLI::IsMember({"chat", "completion"}));
    cmd->add_option("--timeout-ms", timeout_ms, "Per-request timeout");
    cmd->add_option("--retries", retries, "Retries on transport errors and 408/429/5xx");
    cmd->add_option("--concurrency", concurrency, "Maximum in-flight requests");
  }

  bool configured() const {
    const GatewayConfig env = GatewayConfig::from_env();
    return !mode.empty() || !model.empty() || !env.model_name.empty();
  }

  std::shared_ptr<LlmGateway> build() const {
    GatewayConfig c = GatewayConfig::from_env();
    if (!base_url.empty()) c.base_url = base_url;
    if (!model.empty()) c.model_name = model;
    if (!mode.empty()) c.mode = parse_gateway_mode(mode);
    c.cassette_path = cassette;
    c.api_style = api_style == "completion" ? ApiStyle::kCompletion : ApiStyle::kChat;
    c.timeout = std::chrono::milliseconds(timeout_ms);
    c.max_retries = retries;
    c.max_concurrency = concurrency;
    return std::make_shared<LlmGateway>(std::move(c));
  }
};

struct StageOptions {
  std::string schema;
  std::string templates;
  std::size_t max_repairs = 2;
  std::string alignment = "strict";
  std::size_t description_index = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--schema", schema, "Schema file or bundled schema name")->required();
    cmd->add_option("--templates", templates, "Template directory (default: bundled)");
    cmd->add_option("--max-repairs", max_repairs, "Repair prompts per stage");
    cmd->add_option("--alignment", alignment, "strict | lenient")->check(CLI::IsMember({"strict", "lenient"}));
    cmd->add_option("--description-index", description_index, "Description variant used in prompts");
  }

  RunConfig config() const {
    RunConfig c;
    c.max_repair_attempts = max_repairs;
    c.alignment = alignment == "lenient" ? ParseMode::kLenient : ParseMode::kStrict;
    c.description_index = description_index;
    return c;
  }
};

std::vector<std::string> lines_of(const std::string& data) {
  std::vector<std::string> out;
  std::istringstream in(data);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
  }
  return out;
}

std::string fixed(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

// ---- annotate / extract-kg / run ----

int cmd_annotate(const StageOptions& so, const GatewayOptions& go, const std::string& input, const std::string& out) {
  const EntitySchema schema = resolve_schema(so.schema);
  const TemplateStore templates = resolve_templates(so.templates);
  const auto docs = load_raw_jsonl(read_input(input));
  auto gateway = go.build();
  const RunConfig config = so.config();
  std::string result;
  bool failed = false;
  for (const auto& d : docs) {
    const AnnotateResult r = annotate_doc(d.doc_id, d.text, schema, templates, config, *gateway);
    ojson line = {{"doc_id", d.doc_id},
                  {"text", d.text},
                  {"spans", ojson::array()},
                  {"status", std::string(to_string(r.status))}};
    if (r.doc) {
      for (const auto& s : r.doc->spans) line["spans"].push_back({{"start", s.start}, {"end", s.end}, {"symbol", s.symbol}});
      line["marked_text"] = r.marked_text;
    } else {
      line["raw_completion"] = r.raw_completion;
      line["error"] = r.error;
      failed = true;
    }
    line["warnings"] = r.warnings;
    result += line.dump() + "\n";
  }
  write_output(out, result);
  return failed ? kExitValidation : 0;
}

int cmd_extract_kg(const StageOptions& so, const GatewayOptions& go, const std::string& input, const std::string& mode,
                   const std::string& out) {
  const EntitySchema schema = resolve_schema(so.schema);
  const TemplateStore templates = resolve_templates(so.templates);
  const auto docs = load_raw_jsonl(read_input(input));
  auto gateway = go.build();
  RunConfig config = so.config();
  config.mode = parse_run_mode(mode);
  std::string result;
  bool failed = false;
  for (const auto& d : docs) {
    const KgResult r = construct_kg(d.doc_id, d.text, schema, templates, config, *gateway);
    ojson line;
    if (r.graph) {
      line = kg_to_json(*r.graph);
    } else {
      line = {{"doc_id", d.doc_id}, {"nodes", ojson::array()}, {"edges", ojson::array()}};
      line["raw_completion"] = r.raw_completion;
      line["error"] = r.error;
      failed = true;
    }
    line["status"] = std::string(to_string(r.status));
    result += line.dump() + "\n";
  }
  write_output(out, result);
  return failed ? kExitValidation : 0;
}

struct RunOptions {
  std::string corpus;
  std::string mode = "hybrid";
  std::string runs_dir = "runs";
  std::string run_id;
  std::size_t workers = 1;
};

int cmd_run(const StageOptions& so, const GatewayOptions& go, const RunOptions& ro) {
  const EntitySchema schema = resolve_schema(so.schema);
  const TemplateStore templates = resolve_templates(so.templates);
  const auto docs = load_raw_jsonl(read_input(ro.corpus));
  auto gateway = go.build();
  RunConfig config = so.config();
  config.mode = parse_run_mode(ro.mode);
  config.run_id = ro.run_id;
  config.workers = ro.workers;
  const RunStore store(ro.runs_dir);
  const RunManifest m = run(docs, schema, templates, config, *gateway, store);

  // Timestamps stay in manifest.json so that stdout is reproducible.
  ojson summary = {{"run_id", m.run_id},
                   {"run_dir", store.run_dir(m.run_id).string()},
                   {"input_hash", m.input_hash},
                   {"docs", m.docs},
                   {"prompts", {{"total", m.prompts_total}, {"base", m.prompts_base}, {"repair", m.prompts_repair}}}};
  std::cout << summary.dump(2) << "\n";
  for (const auto& d : m.docs)
    if (d.value("status", "") == "failed") return kExitValidation;
  return 0;
}

// ---- scoring ----

std::vector<AnnotatedDoc> load_annotated(const std::string& path, const std::string& format) {
  const std::string data = read_input(path);
  if (format == "conll") return load_conll_as_corpus(data);
  return load_spans_jsonl(data);
}

int cmd_score_ner(const std::string& pred, const std::string& gold, const std::string& format,
                  const std::string& schema_arg) {
  const auto p = load_annotated(pred, format);
  const auto g = load_annotated(gold, format);
  if (!schema_arg.empty()) {
    const EntitySchema schema = resolve_schema(schema_arg);
    for (const auto* set : {&p, &g})
      for (const auto& d : *set)
        if (auto v = validate_doc(d, schema); !v.empty())
          throw Error(ErrorCode::kInvalidDoc, d.doc_id + ": " + format_violations(v));
  }
  std::cout << to_json(evaluate_corpus(p, g)).dump(2) << "\n";
  return 0;
}

int cmd_score_kg(const std::string& schema_arg, const std::string& pred, const std::string& gold,
                 const std::vector<std::string>& compare) {
  const EntitySchema schema = resolve_schema(schema_arg);
  const auto gold_kgs = load_gold_kgs(gold, schema);
  if (!compare.empty()) {
    std::cout << compare_runs(compare.at(0), compare.at(1), gold_kgs).to_json().dump(2) << "\n";
    return 0;
  }
  std::map<std::string, KnowledgeGraph> pred_kgs;
  if (file_exists(fs::path(pred) / "manifest.json")) {
    pred_kgs = load_run_kgs(pred);
  } else {
    pred_kgs = load_gold_kgs(pred, schema);
  }
  const RunScore s = score_run(pred_kgs, gold_kgs);
  std::cout << json{{"nodes", to_json(s.nodes)}, {"relations", to_json(s.relations)}}.dump(2) << "\n";
  return 0;
}

// ---- datasets ----

struct DatasetOptions {
  std::string schema;
  std::string templates;
  std::string corpus;
  std::string format = "spans-jsonl";
  std::string approach = "entity";
  std::string template_id;
  double drop_rate = 0.5;
  std::uint64_t seed = 0;
  std::size_t max_input_chars = 0;
  std::string out;
};

int cmd_build_dataset(const DatasetOptions& o) {
  const EntitySchema schema = resolve_schema(o.schema);
  const TemplateStore templates = resolve_templates(o.templates);
  const auto corpus = load_annotated(o.corpus, o.format);
  BuildConfig c;
  c.approach = parse_marker_kind(o.approach);
  c.drop_rate = o.drop_rate;
  c.seed = o.seed;
  c.max_input_chars = o.max_input_chars;
  c.template_id = !o.template_id.empty()                       ? o.template_id
                  : c.approach == MarkerKind::kSpecialMarker ? "ner_special_marker"
                                                             : "annotate_entity_marker";
  const BuildReport r = build_pairs(corpus, schema, c, templates);
  write_output(o.out, write_pairs_jsonl(r.pairs));
  std::cerr << "pairs " << r.pairs.size() << ", candidates " << r.candidates << ", highlight-free " << r.highlight_free
            << ", dropped " << r.dropped << ", skipped " << r.skipped.size() << "\n";
  return 0;
}

std::vector<AnnotatedDoc> load_marked_lines(const std::string& data, const EntitySchema& schema) {
  std::vector<AnnotatedDoc> out;
  std::size_t n = 0;
  for (const auto& line : lines_of(data)) {
    ++n;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ParseOutcome po = parse_marked(line, schema, MarkerFormat::entity(), ParseMode::kStrict);
    char id[32];
    std::snprintf(id, sizeof id, "line-%06zu", n);
    po.doc.doc_id = id;
    out.push_back(std::move(po.doc));
  }
  return out;
}

int cmd_convert(const std::string& from, const std::string& to, const std::string& input, const std::string& out,
                const std::string& schema_arg) {
  const bool need_schema = from == "marked" || to == "marked";
  if (need_schema && schema_arg.empty()) throw CLI::ValidationError("--schema", "required for marked text");
  std::optional<EntitySchema> schema;
  if (!schema_arg.empty()) schema = resolve_schema(schema_arg);

  const std::string data = read_input(input);
  std::vector<AnnotatedDoc> docs;
  if (from == "conll") {
    docs = load_conll_as_corpus(data);
  } else if (from == "spans-jsonl") {
    docs = load_spans_jsonl(data);
  } else {
    docs = load_marked_lines(data, *schema);
  }
  if (schema)
    for (const auto& d : docs)
      if (auto v = validate_doc(d, *schema); !v.empty())
        throw Error(ErrorCode::kInvalidDoc, d.doc_id + ": " + format_violations(v));

  std::string result;
  if (to == "spans-jsonl") {
    result = write_spans_jsonl(docs);
  } else if (to == "marked") {
    for (const auto& d : docs) result += render_marked(d, *schema, MarkerFormat::entity()) + "\n";
  } else {
    std::vector<BioSequence> seqs;
    for (const auto& d : docs) seqs.push_back(spans_to_bio(tokenize(d.text), d.spans, ParseMode::kStrict).sequence);
    result = write_conll(seqs);
  }
  write_output(out, result);
  return 0;
}

int cmd_bench_prompts(const std::vector<std::string>& schemas, std::size_t n, const std::string& approach) {
  if (!approach.empty()) {
    if (schemas.size() != 1) throw CLI::ValidationError("--approach", "takes exactly one --schema");
    std::cout << prompt_count(resolve_schema(schemas[0]), parse_marker_kind(approach), n) << "\n";
    return 0;
  }
  std::cout << std::left << std::setw(16) << "schema" << std::right << std::setw(7) << "types" << std::setw(10)
            << "special" << std::setw(10) << "entity" << std::setw(8) << "ratio" << "\n";
  for (const auto& s : schemas) {
    const EntitySchema schema = resolve_schema(s);
    const auto sp = prompt_count(schema, MarkerKind::kSpecialMarker, n);
    const auto en = prompt_count(schema, MarkerKind::kEntityMarker, n);
    std::cout << std::left << std::setw(16) << schema.schema_id << std::right << std::setw(7)
              << schema.entity_types.size() << std::setw(10) << sp << std::setw(10) << en << std::setw(8)
              << (en == 0 ? std::string("-") : fixed(static_cast<double>(sp) / static_cast<double>(en))) << "\n";
  }
  return 0;
}

int cmd_serve(const std::string& run_dir, const ServerOptions& so, const GatewayOptions& go) {
  std::shared_ptr<LlmGateway> gateway;
  if (go.configured()) gateway = go.build();
  ReviewService service(run_dir, gateway);
  ReviewServer server(service, so);
  std::cerr << "serving " << run_dir << " on http://" << so.host << ":" << so.port
            << (gateway ? "" : " (no model endpoint; reextract disabled)") << "\n";
  server.serve();
  return 0;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kTransport:
    case ErrorCode::kEndpoint:
    case ErrorCode::kEmptyCompletion:
    case ErrorCode::kCassetteMiss:
    case ErrorCode::kStore:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matforge: entity-marker annotation, knowledge graph extraction and scoring"};
  app.require_subcommand(1);
  int rc = 0;

  StageOptions stage;
  GatewayOptions gw;
  std::string input = "-", out;

  auto* annotate = app.add_subcommand("annotate", "Insert entity markers into raw documents (JSONL {doc_id,text})");
  stage.add(annotate);
  gw.add(annotate);
  annotate->add_option("--input", input, "Raw JSONL ('-' for stdin)");
  annotate->add_option("-o,--out", out, "Output JSONL (default stdout)");
  annotate->callback([&] { rc = cmd_annotate(stage, gw, input, out); });

  std::string kg_mode = "direct";
  auto* extract = app.add_subcommand("extract-kg", "Build one knowledge graph per input document");
  stage.add(extract);
  gw.add(extract);
  extract->add_option("--input", input, "JSONL {doc_id,text}; text may carry entity markers");
  extract->add_option("--mode", kg_mode, "hybrid (marked input) | direct (raw input)")
      ->check(CLI::IsMember({"hybrid", "direct"}));
  extract->add_option("-o,--out", out, "Output JSONL (default stdout)");
  extract->callback([&] { rc = cmd_extract_kg(stage, gw, input, kg_mode, out); });

  RunOptions ro;
  auto* run_cmd = app.add_subcommand("run", "Run the pipeline over a corpus and persist every stage");
  stage.add(run_cmd);
  gw.add(run_cmd);
  run_cmd->add_option("--corpus", ro.corpus, "Raw JSONL {doc_id,text}")->required();
  run_cmd->add_option("--mode", ro.mode, "hybrid | direct")->check(CLI::IsMember({"hybrid", "direct"}));
  run_cmd->add_option("--runs-dir", ro.runs_dir, "Root of run directories");
  run_cmd->add_option("--run-id", ro.run_id, "Run id (default derived from the input hash)");
  run_cmd->add_option("--workers", ro.workers, "Documents processed in parallel");
  run_cmd->callback([&] { rc = cmd_run(stage, gw, ro); });

  std::string pred, gold, format = "spans-jsonl", schema_opt;
  auto* score_ner = app.add_subcommand("score-ner", "Exact-match precision/recall/F1 of span annotations");
  score_ner->add_option("--pred", pred, "Predicted annotations")->required();
  score_ner->add_option("--gold", gold, "Gold annotations")->required();
  score_ner->add_option("--format", format, "spans-jsonl | conll")->check(CLI::IsMember({"spans-jsonl", "conll"}));
  score_ner->add_option("--schema", schema_opt, "Validate both sides against this schema");
  score_ner->callback([&] { rc = cmd_score_ner(pred, gold, format, schema_opt); });

  std::vector<std::string> compare;
  auto* score_kg = app.add_subcommand("score-kg", "Node and relation scores of knowledge graphs against gold");
  score_kg->add_option("--schema", schema_opt, "Schema file or bundled name")->required();
  score_kg->add_option("--gold", gold, "Gold KGs: directory of <doc_id>.json, JSONL, or one JSON file")->required();
  auto* pred_opt = score_kg->add_option("--pred", pred, "Predicted KGs (same forms) or a run directory");
  auto* cmp_opt = score_kg->add_option("--compare", compare, "Two run directories: A B (deltas are A - B)")
                      ->expected(2);
  pred_opt->excludes(cmp_opt);
  score_kg->callback([&] {
    if (pred.empty() && compare.empty()) throw CLI::RequiredError("--pred or --compare");
    rc = cmd_score_kg(schema_opt, pred, gold, compare);
  });

  DatasetOptions ds;
  auto* build = app.add_subcommand("build-dataset", "Build fine-tuning prompt/completion pairs");
  build->add_option("--schema", ds.schema, "Schema file or bundled name")->required();
  build->add_option("--templates", ds.templates, "Template directory (default: bundled)");
  build->add_option("--corpus", ds.corpus, "Annotated corpus")->required();
  build->add_option("--format", ds.format, "spans-jsonl | conll")->check(CLI::IsMember({"spans-jsonl", "conll"}));
  build->add_option("--approach", ds.approach, "entity | special")->check(CLI::IsMember({"entity", "special"}));
  build->add_option("--template", ds.template_id, "Template id (default by approach)");
  build->add_option("--drop-rate", ds.drop_rate, "Share of highlight-free pairs removed")->check(CLI::Range(0.0, 1.0));
  build->add_option("--seed", ds.seed, "Seed for description choice and drop selection");
  build->add_option("--max-input-chars", ds.max_input_chars, "Skip documents longer than this (0 = no limit)");
  build->add_option("-o,--out", ds.out, "Output JSONL (default stdout)");
  build->callback([&] { rc = cmd_build_dataset(ds); });

  std::string from, to;
  auto* convert = app.add_subcommand("convert", "Convert between conll, spans-jsonl and marked text");
  const std::vector<std::string> formats{"conll", "spans-jsonl", "marked"};
  convert->add_option("--from", from, "Input format")->required()->check(CLI::IsMember(formats));
  convert->add_option("--to", to, "Output format")->required()->check(CLI::IsMember(formats));
  convert->add_option("--input", input, "Input file ('-' for stdin)");
  convert->add_option("-o,--out", out, "Output file (default stdout)");
  convert->add_option("--schema", schema_opt, "Schema (required for marked text)");
  convert->callback([&] { rc = cmd_convert(from, to, input, out, schema_opt); });

  std::vector<std::string> bench_schemas;
  std::size_t bench_n = 1;
  std::string approach;
  auto* bench = app.add_subcommand("bench-prompts", "Prompt counts per approach for n sentences");
  bench->add_option("--schema", bench_schemas, "Schema file(s) or bundled names")->required();
  bench->add_option("--n", bench_n, "Number of input sentences");
  bench->add_option("--approach", approach, "Print only this approach's count")
      ->check(CLI::IsMember({"entity", "special"}));
  bench->callback([&] { rc = cmd_bench_prompts(bench_schemas, bench_n, approach); });

  std::string run_dir;
  ServerOptions server_opts;
  auto* serve = app.add_subcommand("serve", "Serve the review API over a run directory");
  serve->add_option("--run-dir", run_dir, "Run directory (contains manifest.json)")->required();
  serve->add_option("--host", server_opts.host, "Bind address");
  serve->add_option("--port", server_opts.port, "Port");
  serve->add_option("--cors-origin", server_opts.cors_origin, "Access-Control-Allow-Origin value");
  gw.add(serve);
  serve->callback([&] { rc = cmd_serve(run_dir, server_opts, gw); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "matforge: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    std::cerr << "matforge: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "matforge: " << e.what() << "\n";
    return kExitIo;
  }
  return rc;
}
