#include "matforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "matforge/bio.hpp"
#include "matforge/errors.hpp"
#include "matforge/rng.hpp"
#include "matforge/utf8.hpp"

namespace matforge {

namespace {

struct Candidate {
  FinetunePair pair;
  bool highlighted = false;
};

}  // namespace

BuildReport build_pairs(std::span<const AnnotatedDoc> corpus, const EntitySchema& schema, const BuildConfig& config,
                        const TemplateStore& templates) {
  if (!(config.drop_rate >= 0.0 && config.drop_rate <= 1.0))
    throw Error(ErrorCode::kInvalidConfig, "drop_rate must lie in [0, 1]");
  if (auto v = validate_schema(schema); !v.empty())
    throw Error(ErrorCode::kInvalidCorpus, "schema: " + format_violations(v));
  templates.get(config.template_id);

  BuildReport report;
  // Separate streams: the drop selection depends only on (seed, k), not on
  // how many description draws preceded it.
  Lcg64 rng(config.seed);
  Lcg64 drop_rng(config.seed);
  std::vector<Candidate> candidates;

  auto choose = [&](const std::vector<std::string>& symbols) {
    DescriptionChoice choice;
    for (const auto& sym : symbols)
      choice[sym] = static_cast<std::size_t>(rng.below(schema.find(sym)->descriptions.size()));
    return choice;
  };

  for (const auto& doc : corpus) {
    if (auto v = validate_doc(doc, schema); !v.empty())
      throw Error(ErrorCode::kInvalidCorpus, doc.doc_id + ": " + format_violations(v));
    if (config.max_input_chars && utf8::length(doc.text) > config.max_input_chars) {
      report.skipped.push_back(doc.doc_id);
      continue;
    }
    if (config.approach == MarkerKind::kEntityMarker) {
      Candidate c;
      c.pair.meta = PairMeta{doc.doc_id, config.approach, std::nullopt, choose(schema.symbols())};
      c.pair.prompt = render_prompt(templates, config.template_id, schema, schema.symbols(),
                                    c.pair.meta.description_choice, doc.text);
      c.pair.completion = render_marked(doc, schema, MarkerFormat::entity());
      c.highlighted = !doc.spans.empty();
      candidates.push_back(std::move(c));
      continue;
    }
    for (const auto& type : schema.entity_types) {
      const std::vector<std::string> scope{type.symbol};
      Candidate c;
      c.pair.meta = PairMeta{doc.doc_id, config.approach, type.symbol, choose(scope)};
      c.pair.prompt =
          render_prompt(templates, config.template_id, schema, scope, c.pair.meta.description_choice, doc.text);
      c.pair.completion = render_marked(doc, schema, MarkerFormat::special(type.symbol));
      c.highlighted = std::any_of(doc.spans.begin(), doc.spans.end(),
                                  [&](const Span& s) { return s.symbol == type.symbol; });
      candidates.push_back(std::move(c));
    }
  }

  std::vector<std::size_t> free_idx;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (!candidates[i].highlighted) free_idx.push_back(i);
  drop_rng.shuffle(free_idx);
  const auto n_drop = static_cast<std::size_t>(std::floor(config.drop_rate * static_cast<double>(free_idx.size())));
  std::vector<bool> drop(candidates.size(), false);
  for (std::size_t k = 0; k < n_drop; ++k) {
    drop[free_idx[k]] = true;
    report.dropped_candidates.push_back(free_idx[k]);
  }
  std::sort(report.dropped_candidates.begin(), report.dropped_candidates.end());

  report.candidates = candidates.size();
  report.highlight_free = free_idx.size();
  report.dropped = n_drop;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (!drop[i]) report.pairs.push_back(std::move(candidates[i].pair));
  return report;
}

std::string write_pairs_jsonl(std::span<const FinetunePair> pairs) {
  std::string out;
  for (const auto& p : pairs) {
    nlohmann::ordered_json desc = nlohmann::ordered_json::object();
    for (const auto& [sym, idx] : p.meta.description_choice) desc[sym] = idx;
    nlohmann::ordered_json meta = {{"doc_id", p.meta.doc_id},
                                   {"approach", std::string(to_string(p.meta.approach))},
                                   {"target_symbol", p.meta.target_symbol ? nlohmann::ordered_json(*p.meta.target_symbol)
                                                                          : nlohmann::ordered_json()},
                                   {"descriptions", desc}};
    nlohmann::ordered_json line = {{"prompt", p.prompt}, {"completion", p.completion}, {"meta", meta}};
    out += line.dump() + "\n";
  }
  return out;
}

std::vector<AnnotatedDoc> load_spans_jsonl(std::string_view data) {
  std::vector<AnnotatedDoc> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t nl = data.find('\n', pos);
    if (nl == std::string_view::npos) nl = data.size();
    const std::string_view line = data.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    AnnotatedDoc doc;
    try {
      doc = nlohmann::json::parse(line).get<AnnotatedDoc>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + e.what());
    }
    sort_spans(doc.spans);
    if (auto v = validate_spans(doc); !v.empty())
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + format_violations(v));
    out.push_back(std::move(doc));
  }
  return out;
}

std::string write_spans_jsonl(std::span<const AnnotatedDoc> corpus) {
  std::string out;
  for (const auto& d : corpus) {
    nlohmann::ordered_json spans = nlohmann::ordered_json::array();
    for (const auto& s : d.spans) spans.push_back({{"start", s.start}, {"end", s.end}, {"symbol", s.symbol}});
    out += nlohmann::ordered_json{{"doc_id", d.doc_id}, {"text", d.text}, {"spans", spans}}.dump() + "\n";
  }
  return out;
}

std::vector<AnnotatedDoc> load_conll_as_corpus(std::string_view data,
                                               const std::map<std::string, std::string>& symbol_map) {
  std::vector<AnnotatedDoc> out;
  auto sequences = read_conll(data);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    auto& seq = sequences[i];
    if (!symbol_map.empty()) {
      for (auto& label : seq.labels) {
        if (label.tag == BioTag::kO) continue;
        auto it = symbol_map.find(label.symbol);
        if (it == symbol_map.end())
          throw Error(ErrorCode::kUnknownLabel, "label symbol '" + label.symbol + "' has no mapping");
        label.symbol = it->second;
      }
    }
    AnnotatedDoc doc;
    char id[32];
    std::snprintf(id, sizeof id, "sent-%06zu", i + 1);
    doc.doc_id = id;
    doc.text = sequence_text(seq);
    doc.spans = bio_to_spans(seq, ParseMode::kLenient).spans;
    out.push_back(std::move(doc));
  }
  return out;
}

}  // namespace matforge
