#include "matforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include "matforge/errors.hpp"
#include "matforge/hashing.hpp"
#include "matforge/utf8.hpp"

namespace matforge {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view to_string(RunMode mode) noexcept { return mode == RunMode::kHybrid ? "hybrid" : "direct"; }

std::string_view to_string(StageStatus status) noexcept {
  switch (status) {
    case StageStatus::kOk: return "ok";
    case StageStatus::kRepaired: return "repaired";
    case StageStatus::kFailed: return "failed";
    case StageStatus::kSkipped: return "skipped";
  }
  return "failed";
}

RunMode parse_run_mode(std::string_view s) {
  if (s == "hybrid") return RunMode::kHybrid;
  if (s == "direct") return RunMode::kDirect;
  throw Error(ErrorCode::kInvalidConfig, "unknown run mode '" + std::string(s) + "'");
}

StageStatus parse_stage_status(std::string_view s) {
  if (s == "ok") return StageStatus::kOk;
  if (s == "repaired") return StageStatus::kRepaired;
  if (s == "skipped") return StageStatus::kSkipped;
  return StageStatus::kFailed;
}

std::string RunConfig::kg_template_id() const {
  if (!kg_template.empty()) return kg_template;
  return mode == RunMode::kHybrid ? "kg_construct_hybrid" : "kg_construct_direct";
}

namespace {

json params_json(const GenerationParams& p) {
  return {{"temperature", p.temperature}, {"top_p", p.top_p}, {"max_tokens", p.max_tokens}, {"stop", p.stop_sequences}};
}

GenerationParams params_from(const json& j, GenerationParams p) {
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  p.stop_sequences = j.value("stop", p.stop_sequences);
  return p;
}

}  // namespace

json RunConfig::to_json() const {
  return {{"mode", std::string(to_string(mode))},
          {"annotate_template", annotate_template},
          {"kg_template", kg_template_id()},
          {"kg_example", kg_example},
          {"annotate_params", params_json(annotate_params)},
          {"kg_params", params_json(kg_params)},
          {"max_repair_attempts", max_repair_attempts},
          {"alignment", alignment == ParseMode::kStrict ? "strict" : "lenient"},
          {"description_index", description_index}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.mode = parse_run_mode(j.value("mode", std::string("hybrid")));
  c.annotate_template = j.value("annotate_template", c.annotate_template);
  c.kg_template = j.value("kg_template", c.kg_template);
  c.kg_example = j.value("kg_example", c.kg_example);
  if (j.contains("annotate_params")) c.annotate_params = params_from(j["annotate_params"], c.annotate_params);
  if (j.contains("kg_params")) c.kg_params = params_from(j["kg_params"], c.kg_params);
  c.max_repair_attempts = j.value("max_repair_attempts", c.max_repair_attempts);
  c.alignment = j.value("alignment", std::string("strict")) == "lenient" ? ParseMode::kLenient : ParseMode::kStrict;
  c.description_index = j.value("description_index", c.description_index);
  return c;
}

namespace {

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

DescriptionChoice uniform_choice(const EntitySchema& schema, std::size_t index) {
  DescriptionChoice choice;
  for (const auto& t : schema.entity_types)
    choice[t.symbol] = t.descriptions.empty() ? 0 : std::min(index, t.descriptions.size() - 1);
  return choice;
}

std::string repair_prompt(const std::string& base, const std::vector<std::string>& defects,
                          const std::string& previous) {
  std::string out = base;
  out += "\n\nYour previous answer could not be used:\n";
  for (const auto& d : defects) out += "- " + d + "\n";
  out += "\nPrevious answer:\n" + previous + "\n\nAnswer again, following the instructions above exactly.";
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : "; ") + s;
  return out;
}

// Returns false (and records the defect) when the endpoint answered with
// nothing; other gateway errors propagate.
bool call(LlmGateway& gateway, const std::string& prompt, const GenerationParams& params, Attempt& attempt) {
  try {
    Completion c = gateway.complete(prompt, params);
    attempt.completion = std::move(c.text);
    attempt.request_hash = std::move(c.request_hash);
    return true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyCompletion) throw;
    attempt.defects.push_back("the answer was empty");
    return false;
  }
}

}  // namespace

AnnotateResult annotate_doc(std::string_view doc_id, std::string_view text, const EntitySchema& schema,
                            const TemplateStore& templates, const RunConfig& config, LlmGateway& gateway) {
  AnnotateResult r;
  if (blank(text)) {
    r.doc = AnnotatedDoc{std::string(doc_id), std::string(text), {}};
    r.marked_text = std::string(text);
    r.status = StageStatus::kOk;
    return r;
  }
  const auto choice = uniform_choice(schema, config.description_index);
  const std::string base =
      render_prompt(templates, config.annotate_template, schema, schema.symbols(), choice, text);
  const MarkerFormat format = MarkerFormat::entity();
  const std::size_t max_attempts = 1 + config.max_repair_attempts;

  auto accept = [&](AlignResult aligned, StageStatus status) {
    aligned.doc.doc_id = std::string(doc_id);
    try {
      r.marked_text = render_marked(aligned.doc, schema, format);
    } catch (const Error& e) {
      r.status = StageStatus::kFailed;
      r.error = e.what();
      return;
    }
    r.doc = std::move(aligned.doc);
    r.warnings.insert(r.warnings.end(), aligned.warnings.begin(), aligned.warnings.end());
    r.status = status;
  };

  std::string prompt = base;
  for (std::size_t n = 1; n <= max_attempts; ++n) {
    Attempt a{"annotate", n, prompt, {}, {}, {}};
    const bool last = n == max_attempts;
    if (call(gateway, prompt, config.annotate_params, a)) {
      r.raw_completion = a.completion;
      ParseOutcome po = parse_marked(a.completion, schema, format, ParseMode::kLenient);
      po.doc.doc_id = std::string(doc_id);
      a.defects = po.warnings;
      std::optional<AlignResult> aligned;
      if (a.defects.empty()) {
        try {
          aligned = align_to_source(po, text, ParseMode::kStrict);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kSourceDivergence) throw;
          a.defects.push_back(e.what());
        }
      }
      if (aligned) {
        r.attempts.push_back(std::move(a));
        accept(std::move(*aligned), n == 1 ? StageStatus::kOk : StageStatus::kRepaired);
        return r;
      }
      if (last && config.alignment == ParseMode::kLenient) {
        r.warnings = a.defects;
        r.attempts.push_back(std::move(a));
        accept(align_to_source(po, text, ParseMode::kLenient), StageStatus::kRepaired);
        return r;
      }
    }
    const auto defects = a.defects;
    const auto previous = a.completion;
    r.attempts.push_back(std::move(a));
    if (last) {
      r.status = StageStatus::kFailed;
      r.error = join(defects);
      return r;
    }
    prompt = repair_prompt(base, defects, previous);
  }
  return r;
}

KgResult construct_kg(std::string_view doc_id, std::string_view input_text, const EntitySchema& schema,
                      const TemplateStore& templates, const RunConfig& config, LlmGateway& gateway) {
  KgResult r;
  if (blank(input_text)) {
    r.graph = KnowledgeGraph{std::string(doc_id), {}, {}};
    r.status = StageStatus::kOk;
    return r;
  }
  const auto choice = uniform_choice(schema, config.description_index);
  const std::string base = render_prompt(templates, config.kg_template_id(), schema, schema.symbols(), choice,
                                         input_text, templates.get(config.kg_example));
  const std::size_t max_attempts = 1 + config.max_repair_attempts;

  std::string prompt = base;
  for (std::size_t n = 1; n <= max_attempts; ++n) {
    Attempt a{"kg", n, prompt, {}, {}, {}};
    const bool last = n == max_attempts;
    std::optional<KgParseResult> parsed;
    if (call(gateway, prompt, config.kg_params, a)) {
      r.raw_completion = a.completion;
      try {
        parsed = parse_kg(a.completion, schema, ParseMode::kLenient);
        a.defects = parsed->warnings;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNotJson) throw;
        a.defects.push_back(e.what());
      }
    }
    if (parsed && (a.defects.empty() || last)) {
      parsed->graph.doc_id = std::string(doc_id);
      r.graph = std::move(parsed->graph);
      r.warnings = parsed->warnings;
      r.status = (n == 1 && a.defects.empty()) ? StageStatus::kOk : StageStatus::kRepaired;
      r.attempts.push_back(std::move(a));
      return r;
    }
    const auto defects = a.defects;
    const auto previous = a.completion;
    r.attempts.push_back(std::move(a));
    if (last) {
      r.status = StageStatus::kFailed;
      r.error = join(defects);
      return r;
    }
    prompt = repair_prompt(base, defects, previous);
  }
  return r;
}

namespace {

StageStatus combine(StageStatus a, StageStatus b) {
  if (a == StageStatus::kFailed || b == StageStatus::kFailed) return StageStatus::kFailed;
  if (a == StageStatus::kSkipped || b == StageStatus::kSkipped) return StageStatus::kFailed;
  if (a == StageStatus::kRepaired || b == StageStatus::kRepaired) return StageStatus::kRepaired;
  return StageStatus::kOk;
}

}  // namespace

DocResult process_doc(const RawDoc& doc, const EntitySchema& schema, const TemplateStore& templates,
                      const RunConfig& config, LlmGateway& gateway) {
  DocResult out;
  out.doc_id = doc.doc_id;
  out.raw_text = doc.text;
  const char* stage = config.mode == RunMode::kHybrid ? "annotate" : "kg";
  try {
    if (config.mode == RunMode::kHybrid) {
      out.annotate = annotate_doc(doc.doc_id, doc.text, schema, templates, config, gateway);
      out.prompts += out.annotate->attempts.size();
      out.warnings = out.annotate->warnings;
      if (out.annotate->status == StageStatus::kFailed) {
        out.kg = KgResult{};
        out.kg->status = StageStatus::kSkipped;
        out.status = StageStatus::kFailed;
        out.error = "annotate: " + out.annotate->error;
        return out;
      }
      stage = "kg";
      out.kg = construct_kg(doc.doc_id, out.annotate->marked_text, schema, templates, config, gateway);
    } else {
      out.kg = construct_kg(doc.doc_id, doc.text, schema, templates, config, gateway);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnknownTemplate || e.code() == ErrorCode::kMissingDescription) throw;
    out.status = StageStatus::kFailed;
    out.error = std::string(stage) + ": " + e.what();
    if (out.kg) out.prompts += out.kg->attempts.size();
    return out;
  }
  out.prompts += out.kg->attempts.size();
  out.warnings.insert(out.warnings.end(), out.kg->warnings.begin(), out.kg->warnings.end());
  out.status = out.annotate ? combine(out.annotate->status, out.kg->status) : out.kg->status;
  if (out.kg->status == StageStatus::kFailed) out.error = "kg: " + out.kg->error;
  return out;
}

namespace {

ojson attempts_json(const std::vector<Attempt>& attempts) {
  ojson arr = ojson::array();
  for (const auto& a : attempts)
    arr.push_back({{"number", a.number}, {"request_hash", a.request_hash}, {"defects", a.defects}});
  return arr;
}

ojson doc_summary(const DocResult& r) {
  ojson j = {{"doc_id", r.doc_id},
             {"status", std::string(to_string(r.status))},
             {"annotate_status", r.annotate ? ojson(std::string(to_string(r.annotate->status))) : ojson()},
             {"kg_status", r.kg ? ojson(std::string(to_string(r.kg->status))) : ojson()},
             {"prompts", r.prompts},
             {"warnings", r.warnings.size()}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

void remove_if_exists(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::remove(p, ec);
}

}  // namespace

void persist_doc(const std::filesystem::path& dir, const DocResult& r) {
  write_file_atomic(dir / "raw.txt", r.raw_text);

  if (r.annotate && r.annotate->doc) {
    write_file_atomic(dir / "marked.txt", r.annotate->marked_text);
    write_file_atomic(dir / "annotated.json", json(*r.annotate->doc).dump(2) + "\n");
  } else {
    remove_if_exists(dir / "marked.txt");
    remove_if_exists(dir / "annotated.json");
  }
  if (r.kg && r.kg->graph) {
    write_file_atomic(dir / "kg.json", write_kg(*r.kg->graph));
  } else {
    remove_if_exists(dir / "kg.json");
  }

  ojson result = doc_summary(r);
  if (r.annotate) {
    result["annotate"] = {{"status", std::string(to_string(r.annotate->status))},
                          {"warnings", r.annotate->warnings},
                          {"attempts", attempts_json(r.annotate->attempts)},
                          {"raw_completion", r.annotate->raw_completion}};
  }
  if (r.kg) {
    result["kg"] = {{"status", std::string(to_string(r.kg->status))},
                    {"warnings", r.kg->warnings},
                    {"attempts", attempts_json(r.kg->attempts)},
                    {"raw_completion", r.kg->raw_completion}};
  }
  write_file_atomic(dir / "result.json", result.dump(2) + "\n");

  // Append-only attempt log.
  const auto attempts_dir = dir / "attempts";
  std::size_t seq = 0;
  std::error_code ec;
  if (std::filesystem::is_directory(attempts_dir, ec))
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(attempts_dir)) ++seq;
  auto log = [&](const std::vector<Attempt>& attempts) {
    for (const auto& a : attempts) {
      char name[64];
      std::snprintf(name, sizeof name, "%04zu-%s-%zu.json", ++seq, a.stage.c_str(), a.number);
      ojson j = {{"stage", a.stage},
                 {"attempt", a.number},
                 {"request_hash", a.request_hash},
                 {"prompt", a.prompt},
                 {"completion", a.completion},
                 {"defects", a.defects}};
      write_file_atomic(attempts_dir / name, j.dump(2) + "\n");
    }
  };
  if (r.annotate) log(r.annotate->attempts);
  if (r.kg) log(r.kg->attempts);
}

ojson RunManifest::to_json() const {
  ojson j = {{"run_id", run_id},
             {"input_hash", input_hash},
             {"created_at", created_at},
             {"finished_at", finished_at},
             {"schema_id", schema_id},
             {"schema_version", schema_version},
             {"config", ojson::parse(config.dump())},
             {"docs", docs},
             {"prompts", {{"total", prompts_total}, {"base", prompts_base}, {"repair", prompts_repair}}}};
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.input_hash = j.value("input_hash", "");
  m.created_at = j.value("created_at", "");
  m.finished_at = j.value("finished_at", "");
  m.schema_id = j.value("schema_id", "");
  m.schema_version = j.value("schema_version", std::int64_t{0});
  m.config = j.value("config", json::object());
  for (const auto& d : j.value("docs", json::array())) m.docs.push_back(ojson::parse(d.dump()));
  const auto prompts = j.value("prompts", json::object());
  m.prompts_total = prompts.value("total", std::size_t{0});
  m.prompts_base = prompts.value("base", std::size_t{0});
  m.prompts_repair = prompts.value("repair", std::size_t{0});
  return m;
}

namespace {

std::vector<std::string> used_templates(const RunConfig& config) {
  std::vector<std::string> ids;
  if (config.mode == RunMode::kHybrid) ids.push_back(config.annotate_template);
  ids.push_back(config.kg_template_id());
  ids.push_back(config.kg_example);
  return ids;
}

}  // namespace

std::string run_input_hash(std::span<const RawDoc> corpus, const EntitySchema& schema, const TemplateStore& templates,
                           const RunConfig& config) {
  json docs = json::array();
  for (const auto& d : corpus) docs.push_back({{"doc_id", d.doc_id}, {"text", d.text}});
  json tpl = json::object();
  for (const auto& id : used_templates(config)) tpl[id] = templates.get(id);
  const json all = {{"corpus", docs}, {"schema", schema}, {"templates", tpl}, {"config", config.to_json()}};
  return sha256_hex(all.dump());
}

RunManifest run(std::span<const RawDoc> corpus, const EntitySchema& schema, const TemplateStore& templates,
                const RunConfig& config, LlmGateway& gateway, const RunStore& store) {
  if (auto v = validate_schema(schema); !v.empty())
    throw Error(ErrorCode::kInvalidConfig, "schema: " + format_violations(v));
  std::set<std::string> ids;
  for (const auto& d : corpus) {
    check_safe_id(d.doc_id);
    if (!ids.insert(d.doc_id).second) throw Error(ErrorCode::kStore, "duplicate doc_id '" + d.doc_id + "'");
  }
  for (const auto& id : used_templates(config)) templates.get(id);

  RunManifest m;
  m.created_at = utc_timestamp();
  m.input_hash = run_input_hash(corpus, schema, templates, config);
  m.run_id = config.run_id.empty() ? "run-" + m.input_hash.substr(0, 12) : config.run_id;
  m.config = config.to_json();
  m.schema_id = schema.schema_id;
  m.schema_version = schema.version;

  const auto dir = store.run_dir(m.run_id);
  if (file_exists(dir / "manifest.json"))
    throw Error(ErrorCode::kStore, "run " + m.run_id + " already exists under " + store.root().string());
  write_file_atomic(dir / "schema.json", write_schema(schema));
  for (const auto& id : used_templates(config)) write_file_atomic(dir / "templates" / (id + ".txt"), templates.get(id));

  std::vector<DocResult> results(corpus.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::string> store_errors(corpus.size());
  auto worker = [&] {
    for (std::size_t i; (i = next++) < corpus.size();) {
      results[i] = process_doc(corpus[i], schema, templates, config, gateway);
      try {
        persist_doc(store.doc_dir(m.run_id, corpus[i].doc_id), results[i]);
      } catch (const Error& e) {
        store_errors[i] = e.what();
      }
    }
  };
  {
    const std::size_t n = std::clamp<std::size_t>(config.workers, 1, std::max<std::size_t>(corpus.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : store_errors)
    if (!e.empty()) throw Error(ErrorCode::kStore, e);

  const std::size_t per_doc = config.mode == RunMode::kHybrid ? 2 : 1;
  for (const auto& r : results) {
    m.docs.push_back(doc_summary(r));
    m.prompts_total += r.prompts;
  }
  m.prompts_base = per_doc * corpus.size();
  m.prompts_repair = m.prompts_total > m.prompts_base ? m.prompts_total - m.prompts_base : 0;
  m.finished_at = utc_timestamp();
  write_file_atomic(dir / "manifest.json", m.to_json().dump(2) + "\n");
  return m;
}

RunManifest load_manifest(const std::filesystem::path& run_dir) {
  try {
    return RunManifest::from_json(json::parse(read_file(run_dir / "manifest.json")));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kStore, "bad manifest in " + run_dir.string() + ": " + e.what());
  }
}

std::map<std::string, KnowledgeGraph> load_run_kgs(const std::filesystem::path& run_dir) {
  const RunManifest m = load_manifest(run_dir);
  const EntitySchema schema = parse_schema(read_file(run_dir / "schema.json"));
  std::map<std::string, KnowledgeGraph> out;
  for (const auto& d : m.docs) {
    const std::string id = d.at("doc_id").get<std::string>();
    check_safe_id(id);
    const auto path = run_dir / "docs" / id / "kg.json";
    KnowledgeGraph g;
    if (file_exists(path)) g = parse_kg(read_file(path), schema, ParseMode::kLenient).graph;
    g.doc_id = id;
    out[id] = std::move(g);
  }
  return out;
}

RunScore score_run(const std::map<std::string, KnowledgeGraph>& run_kgs,
                   const std::map<std::string, KnowledgeGraph>& gold) {
  std::map<std::string, MatchCounts> nodes, relations;
  for (const auto& [id, pred] : run_kgs) {
    auto it = gold.find(id);
    if (it == gold.end()) throw Error(ErrorCode::kDocMismatch, "no gold knowledge graph for doc '" + id + "'");
    const KgCounts c = count_kg(pred, it->second);
    for (const auto& [k, v] : c.nodes) nodes[k] += v;
    for (const auto& [k, v] : c.relations) relations[k] += v;
  }
  return RunScore{make_report(nodes), make_report(relations)};
}

namespace {

json metric_delta(const Metrics& a, const Metrics& b) {
  return {{"precision", a.precision - b.precision}, {"recall", a.recall - b.recall}, {"f1", a.f1 - b.f1}};
}

json per_key_delta(const EvalReport& a, const EvalReport& b) {
  std::set<std::string> keys;
  for (const auto& [k, _] : a.per_symbol) keys.insert(k);
  for (const auto& [k, _] : b.per_symbol) keys.insert(k);
  json out = json::object();
  for (const auto& k : keys) {
    const auto ia = a.per_symbol.find(k);
    const auto ib = b.per_symbol.find(k);
    const double fa = ia == a.per_symbol.end() ? 0.0 : ia->second.metrics.f1;
    const double fb = ib == b.per_symbol.end() ? 0.0 : ib->second.metrics.f1;
    out[k] = fa - fb;
  }
  return out;
}

json score_json(const RunScore& s) { return {{"nodes", to_json(s.nodes)}, {"relations", to_json(s.relations)}}; }

}  // namespace

json RunComparison::to_json() const { return {{"a", score_json(a)}, {"b", score_json(b)}, {"deltas", deltas}}; }

RunComparison compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                           const std::map<std::string, KnowledgeGraph>& gold) {
  const auto kgs_a = load_run_kgs(run_a);
  const auto kgs_b = load_run_kgs(run_b);
  std::set<std::string> ids_a, ids_b;
  for (const auto& [k, _] : kgs_a) ids_a.insert(k);
  for (const auto& [k, _] : kgs_b) ids_b.insert(k);
  if (ids_a != ids_b) throw Error(ErrorCode::kDocMismatch, "runs cover different documents");

  RunComparison c{score_run(kgs_a, gold), score_run(kgs_b, gold), {}};
  c.deltas = {{"nodes", metric_delta(c.a.nodes.micro, c.b.nodes.micro)},
              {"relations", metric_delta(c.a.relations.micro, c.b.relations.micro)},
              {"per_symbol_f1", per_key_delta(c.a.nodes, c.b.nodes)},
              {"per_relation_f1", per_key_delta(c.a.relations, c.b.relations)}};
  return c;
}

std::map<std::string, KnowledgeGraph> load_gold_kgs(const std::filesystem::path& path, const EntitySchema& schema) {
  std::map<std::string, KnowledgeGraph> out;
  auto add = [&](std::string_view text, const std::string& fallback_id) {
    KnowledgeGraph g = parse_kg(text, schema, ParseMode::kStrict).graph;
    if (g.doc_id.empty()) g.doc_id = fallback_id;
    if (g.doc_id.empty()) throw Error(ErrorCode::kInvalidInput, "gold knowledge graph without doc_id");
    out[g.doc_id] = std::move(g);
  };
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path))
      if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) add(read_file(f), f.stem().string());
    return out;
  }
  const std::string data = read_file(path);
  if (path.extension() == ".jsonl") {
    std::size_t pos = 0;
    while (pos < data.size()) {
      std::size_t nl = data.find('\n', pos);
      if (nl == std::string::npos) nl = data.size();
      const std::string_view line = std::string_view(data).substr(pos, nl - pos);
      pos = nl + 1;
      if (!blank(line)) add(line, "");
    }
    return out;
  }
  add(data, path.stem().string());
  return out;
}

std::vector<RawDoc> load_raw_jsonl(std::string_view data) {
  std::vector<RawDoc> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < data.size()) {
    std::size_t nl = data.find('\n', pos);
    if (nl == std::string_view::npos) nl = data.size();
    const std::string_view line = data.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (blank(line)) continue;
    try {
      const auto j = json::parse(line);
      out.push_back(RawDoc{j.at("doc_id").get<std::string>(), j.at("text").get<std::string>()});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace matforge
