#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matforge/marker_codec.hpp"
#include "matforge/schema.hpp"
#include "matforge/templates.hpp"

namespace matforge {

struct PairMeta {
  std::string doc_id;
  MarkerKind approach = MarkerKind::kEntityMarker;
  std::optional<std::string> target_symbol;
  DescriptionChoice description_choice;
};

struct FinetunePair {
  std::string prompt;
  std::string completion;
  PairMeta meta;
};

struct BuildConfig {
  MarkerKind approach = MarkerKind::kEntityMarker;
  double drop_rate = 0.5;
  std::uint64_t seed = 0;
  std::string template_id;
  // Stand-in for the model's token limit; 0 disables the check.
  std::size_t max_input_chars = 0;
};

struct BuildReport {
  std::vector<FinetunePair> pairs;
  std::size_t candidates = 0;
  std::size_t highlight_free = 0;
  std::size_t dropped = 0;
  std::vector<std::size_t> dropped_candidates;  // candidate indices, ascending
  std::vector<std::string> skipped;             // over-budget docs
};

// Special markers yield one candidate per (doc, entity type); entity markers
// one per doc. floor(drop_rate * k) of the k highlight-free candidates are
// removed by a seeded Fisher-Yates shuffle. Throws InvalidCorpus.
BuildReport build_pairs(std::span<const AnnotatedDoc> corpus, const EntitySchema& schema, const BuildConfig& config,
                        const TemplateStore& templates);

std::string write_pairs_jsonl(std::span<const FinetunePair> pairs);

// {doc_id, text, spans:[{start,end,symbol}]} per line. Throws MalformedLine.
std::vector<AnnotatedDoc> load_spans_jsonl(std::string_view data);
std::string write_spans_jsonl(std::span<const AnnotatedDoc> corpus);

// Label symbols are mapped through `symbol_map` (dataset label -> schema
// symbol); an empty map keeps labels as-is. Throws MalformedLine,
// UnknownLabel.
std::vector<AnnotatedDoc> load_conll_as_corpus(std::string_view data,
                                               const std::map<std::string, std::string>& symbol_map = {});

}  // namespace matforge
