#include "matforge/ner_eval.hpp"

#include <set>
#include <tuple>

#include "matforge/errors.hpp"

namespace matforge {

Metrics prf(const MatchCounts& c) {
  Metrics m;
  const std::size_t pden = c.tp + c.fp;
  const std::size_t rden = c.tp + c.fn;
  if (pden == 0 && rden == 0) {
    m.precision = m.recall = m.f1 = 1.0;
    m.degenerate = true;
    return m;
  }
  m.degenerate = pden == 0 || rden == 0;
  m.precision = pden == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(pden);
  m.recall = rden == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(rden);
  const double sum = m.precision + m.recall;
  m.f1 = sum == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / sum;
  return m;
}

std::map<std::string, MatchCounts> match_exact_by_symbol(std::span<const Span> pred, std::span<const Span> gold) {
  using Key = std::tuple<std::string, std::size_t, std::size_t>;
  std::map<Key, std::size_t> gold_left;
  std::map<std::string, MatchCounts> out;
  for (const auto& g : gold) {
    ++gold_left[{g.symbol, g.start, g.end}];
    ++out[g.symbol].fn;
  }
  for (const auto& p : pred) {
    auto& c = out[p.symbol];
    auto it = gold_left.find({p.symbol, p.start, p.end});
    if (it != gold_left.end() && it->second > 0) {
      --it->second;
      ++c.tp;
      --c.fn;
    } else {
      ++c.fp;
    }
  }
  return out;
}

MatchCounts match_exact(std::span<const Span> pred, std::span<const Span> gold) {
  MatchCounts total;
  for (const auto& [_, c] : match_exact_by_symbol(pred, gold)) total += c;
  return total;
}

EvalReport make_report(const std::map<std::string, MatchCounts>& per_symbol) {
  EvalReport r;
  double p = 0, rc = 0, f = 0;
  std::size_t n = 0;
  for (const auto& [sym, counts] : per_symbol) {
    const Metrics m = prf(counts);
    r.per_symbol[sym] = SymbolScore{counts, m};
    r.total += counts;
    if (counts.tp + counts.fp + counts.fn == 0) continue;
    p += m.precision;
    rc += m.recall;
    f += m.f1;
    ++n;
  }
  r.micro = prf(r.total);
  if (n == 0) {
    r.macro = Metrics{1.0, 1.0, 1.0, true};
  } else {
    const double dn = static_cast<double>(n);
    r.macro = Metrics{p / dn, rc / dn, f / dn, false};
  }
  return r;
}

EvalReport evaluate_corpus(std::span<const AnnotatedDoc> pred_docs, std::span<const AnnotatedDoc> gold_docs) {
  std::map<std::string, const AnnotatedDoc*> pred_by_id;
  for (const auto& d : pred_docs) {
    if (!pred_by_id.emplace(d.doc_id, &d).second)
      throw Error(ErrorCode::kDocMismatch, "duplicate predicted doc_id '" + d.doc_id + "'");
  }
  std::set<std::string> gold_ids;
  std::map<std::string, MatchCounts> totals;
  for (const auto& g : gold_docs) {
    if (!gold_ids.insert(g.doc_id).second)
      throw Error(ErrorCode::kDocMismatch, "duplicate gold doc_id '" + g.doc_id + "'");
    auto it = pred_by_id.find(g.doc_id);
    if (it == pred_by_id.end())
      throw Error(ErrorCode::kDocMismatch, "doc '" + g.doc_id + "' missing from predictions");
    if (it->second->text != g.text)
      throw Error(ErrorCode::kDocMismatch, "doc '" + g.doc_id + "' text differs between prediction and gold");
    for (const auto& [sym, c] : match_exact_by_symbol(it->second->spans, g.spans)) totals[sym] += c;
  }
  for (const auto& [id, _] : pred_by_id)
    if (!gold_ids.count(id)) throw Error(ErrorCode::kDocMismatch, "doc '" + id + "' missing from gold");
  return make_report(totals);
}

std::size_t prompt_count(const EntitySchema& schema, MarkerKind approach, std::size_t n_units) {
  return approach == MarkerKind::kEntityMarker ? n_units : n_units * schema.entity_types.size();
}

nlohmann::json to_json(const Metrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"degenerate", m.degenerate}};
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [sym, s] : report.per_symbol) {
    auto j = to_json(s.metrics);
    j["tp"] = s.counts.tp;
    j["fp"] = s.counts.fp;
    j["fn"] = s.counts.fn;
    per[sym] = std::move(j);
  }
  auto micro = to_json(report.micro);
  micro["tp"] = report.total.tp;
  micro["fp"] = report.total.fp;
  micro["fn"] = report.total.fn;
  return {{"per_symbol", per}, {"micro", micro}, {"macro", to_json(report.macro)}};
}

}  // namespace matforge
