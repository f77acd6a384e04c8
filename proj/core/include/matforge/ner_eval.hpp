#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "matforge/marker_codec.hpp"
#include "matforge/schema.hpp"

namespace matforge {

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const MatchCounts&) const = default;
};

// `degenerate` is set whenever either denominator was zero. Both zero is
// vacuous perfection (1.0); a single zero denominator yields 0.0 for that
// metric.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;
};

Metrics prf(const MatchCounts& counts);

struct SymbolScore {
  MatchCounts counts;
  Metrics metrics;
};

struct EvalReport {
  std::map<std::string, SymbolScore> per_symbol;
  MatchCounts total;
  Metrics micro;  // from pooled counts
  Metrics macro;  // unweighted mean over symbols present in pred or gold
};

// Multiset match on (symbol, start, end).
MatchCounts match_exact(std::span<const Span> pred, std::span<const Span> gold);

// Same rule, with counts bucketed by symbol.
std::map<std::string, MatchCounts> match_exact_by_symbol(std::span<const Span> pred, std::span<const Span> gold);

EvalReport make_report(const std::map<std::string, MatchCounts>& per_symbol);

// Throws DocMismatch if doc_id sets differ or a doc's text differs.
EvalReport evaluate_corpus(std::span<const AnnotatedDoc> pred_docs, std::span<const AnnotatedDoc> gold_docs);

// Prompts needed to tag n_units inputs: one per unit with entity markers,
// one per unit per entity type with special markers.
std::size_t prompt_count(const EntitySchema& schema, MarkerKind approach, std::size_t n_units);

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const EvalReport& report);

}  // namespace matforge
