#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "matforge/gateway.hpp"
#include "matforge/kg.hpp"
#include "matforge/marker_codec.hpp"
#include "matforge/ner_eval.hpp"
#include "matforge/run_store.hpp"
#include "matforge/schema.hpp"
#include "matforge/templates.hpp"

namespace matforge {

enum class RunMode { kHybrid, kDirect };
enum class StageStatus { kOk, kRepaired, kFailed, kSkipped };

std::string_view to_string(RunMode mode) noexcept;
std::string_view to_string(StageStatus status) noexcept;
RunMode parse_run_mode(std::string_view s);
StageStatus parse_stage_status(std::string_view s);

struct RunConfig {
  RunMode mode = RunMode::kHybrid;
  std::string annotate_template = "annotate_entity_marker";
  // Empty selects kg_construct_hybrid / kg_construct_direct by mode.
  std::string kg_template;
  std::string kg_example = "kg_one_shot_example";
  GenerationParams annotate_params = default_params(GenerationTask::kAnnotate);
  GenerationParams kg_params = default_params(GenerationTask::kKgConstruct);
  // Each stage makes at most 1 + max_repair_attempts prompts.
  std::size_t max_repair_attempts = 2;
  ParseMode alignment = ParseMode::kStrict;
  // Description variant used for every entity type in pipeline prompts
  // (clamped to the type's list).
  std::size_t description_index = 0;
  std::size_t workers = 1;
  std::string run_id;

  std::string kg_template_id() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

struct Attempt {
  std::string stage;  // "annotate" | "kg"
  std::size_t number = 0;
  std::string prompt;
  std::string completion;
  std::string request_hash;
  std::vector<std::string> defects;
};

struct AnnotateResult {
  std::string marked_text;  // re-rendered from the aligned doc
  std::optional<AnnotatedDoc> doc;
  StageStatus status = StageStatus::kFailed;
  std::vector<std::string> warnings;
  std::vector<Attempt> attempts;
  std::string raw_completion;
  std::string error;
};

struct KgResult {
  std::optional<KnowledgeGraph> graph;
  StageStatus status = StageStatus::kFailed;
  std::vector<std::string> warnings;
  std::vector<Attempt> attempts;
  std::string raw_completion;
  std::string error;
};

// Gateway failures (Transport, Endpoint, CassetteMiss) propagate; empty
// completions and malformed output are repaired by re-prompting.
AnnotateResult annotate_doc(std::string_view doc_id, std::string_view text, const EntitySchema& schema,
                            const TemplateStore& templates, const RunConfig& config, LlmGateway& gateway);

KgResult construct_kg(std::string_view doc_id, std::string_view input_text, const EntitySchema& schema,
                      const TemplateStore& templates, const RunConfig& config, LlmGateway& gateway);

struct RawDoc {
  std::string doc_id;
  std::string text;
};

struct DocResult {
  std::string doc_id;
  std::string raw_text;
  std::optional<AnnotateResult> annotate;  // hybrid only
  std::optional<KgResult> kg;
  StageStatus status = StageStatus::kFailed;
  std::size_t prompts = 0;
  std::vector<std::string> warnings;
  std::string error;
};

// One document through the configured mode. Gateway errors are caught and
// reported as a failed doc.
DocResult process_doc(const RawDoc& doc, const EntitySchema& schema, const TemplateStore& templates,
                      const RunConfig& config, LlmGateway& gateway);

// Writes a doc's stage files; attempts are appended after any existing ones.
void persist_doc(const std::filesystem::path& doc_dir, const DocResult& result);

struct RunManifest {
  std::string run_id;
  std::string input_hash;
  std::string created_at;
  std::string finished_at;
  nlohmann::json config;
  std::string schema_id;
  std::int64_t schema_version = 0;
  std::vector<nlohmann::ordered_json> docs;  // per-doc summaries
  std::size_t prompts_total = 0;
  std::size_t prompts_base = 0;
  std::size_t prompts_repair = 0;

  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

std::string run_input_hash(std::span<const RawDoc> corpus, const EntitySchema& schema, const TemplateStore& templates,
                           const RunConfig& config);

// Throws StoreError.
RunManifest run(std::span<const RawDoc> corpus, const EntitySchema& schema, const TemplateStore& templates,
                const RunConfig& config, LlmGateway& gateway, const RunStore& store);

RunManifest load_manifest(const std::filesystem::path& run_dir);

// KG per doc of a finished run; failed docs yield an empty graph.
std::map<std::string, KnowledgeGraph> load_run_kgs(const std::filesystem::path& run_dir);

struct RunScore {
  EvalReport nodes;
  EvalReport relations;
};

// Pools node/relation counts over docs. Throws DocMismatch when gold lacks
// one of the run's docs.
RunScore score_run(const std::map<std::string, KnowledgeGraph>& run_kgs,
                   const std::map<std::string, KnowledgeGraph>& gold);

struct RunComparison {
  RunScore a;
  RunScore b;
  nlohmann::json deltas;  // a - b

  nlohmann::json to_json() const;
};

// Throws DocMismatch if the runs cover different docs or gold is missing.
RunComparison compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                           const std::map<std::string, KnowledgeGraph>& gold);

// Gold KGs from a directory of <doc_id>.json files or a JSONL file.
std::map<std::string, KnowledgeGraph> load_gold_kgs(const std::filesystem::path& path, const EntitySchema& schema);

std::vector<RawDoc> load_raw_jsonl(std::string_view data);

}  // namespace matforge
