#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "matforge/marker_codec.hpp"
#include "matforge/ner_eval.hpp"
#include "matforge/schema.hpp"

namespace matforge {

struct KgNode {
  std::string node_name;
  std::string symbol;
  std::vector<std::string> co_references;
  // Auxiliary context (symbol -> value) that separates same-named nodes,
  // e.g. {"SYN": "solvothermal"}.
  std::vector<std::pair<std::string, std::string>> related_entities;

  bool operator==(const KgNode&) const = default;
};

// Endpoints are indices into KnowledgeGraph::nodes.
struct KgEdge {
  std::size_t source = 0;
  std::string relation;
  std::size_t target = 0;

  bool operator==(const KgEdge&) const = default;
};

struct KnowledgeGraph {
  std::string doc_id;
  std::vector<KgNode> nodes;
  std::vector<KgEdge> edges;

  bool operator==(const KnowledgeGraph&) const = default;
};

// normalized name | symbol | sorted normalized related_entities
std::string node_key(const KgNode& node);

struct KgParseResult {
  KnowledgeGraph graph;
  std::vector<std::string> warnings;
};

// Tolerant reader: accepts fenced ```json blocks, edge endpoints given as
// array index, canonical key, or an unambiguous node name / co-reference.
// Throws NotJson when no JSON object can be recovered. Strict mode throws
// SchemaViolation / DanglingEdge; lenient mode drops offenders with
// warnings.
KgParseResult parse_kg(std::string_view text, const EntitySchema& schema, ParseMode mode);

// Canonical writer: fixed key order, endpoints as indices, 2-space indent.
std::string write_kg(const KnowledgeGraph& graph);
nlohmann::ordered_json kg_to_json(const KnowledgeGraph& graph);

bool node_match(const KgNode& pred, const KgNode& gold);

struct KgCounts {
  std::map<std::string, MatchCounts> nodes;      // by node symbol
  std::map<std::string, MatchCounts> relations;  // by normalized relation label
  std::vector<std::optional<std::size_t>> assignment;  // pred node -> gold node
};

// Maximum one-to-one node matching under node_match; relation TP requires
// both endpoints matched and equal normalized label.
KgCounts count_kg(const KnowledgeGraph& pred, const KnowledgeGraph& gold);

struct KgScore {
  EvalReport nodes;
  EvalReport relations;
  std::vector<std::optional<std::size_t>> assignment;
};

KgScore score_kg(const KnowledgeGraph& pred, const KnowledgeGraph& gold);

}  // namespace matforge
