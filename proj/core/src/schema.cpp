#include "matforge/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "matforge/errors.hpp"
#include "matforge/utf8.hpp"

namespace matforge {

const EntityType* EntitySchema::find(std::string_view symbol) const {
  for (const auto& t : entity_types)
    if (t.symbol == symbol) return &t;
  return nullptr;
}

std::vector<std::string> EntitySchema::symbols() const {
  std::vector<std::string> out;
  out.reserve(entity_types.size());
  for (const auto& t : entity_types) out.push_back(t.symbol);
  return out;
}

bool is_valid_symbol(std::string_view symbol) noexcept {
  if (symbol.empty() || symbol.size() > 16) return false;
  if (symbol[0] < 'A' || symbol[0] > 'Z') return false;
  return std::all_of(symbol.begin() + 1, symbol.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

namespace {

bool blank(std::string_view s) {
  for (char32_t cp : utf8::decode(s))
    if (!utf8::is_space(cp)) return false;
  return true;
}

std::string at(std::string_view base, std::size_t i) {
  return std::string(base) + "[" + std::to_string(i) + "]";
}

}  // namespace

std::vector<Violation> validate_schema(const EntitySchema& schema) {
  std::vector<Violation> out;
  if (schema.schema_id.empty())
    out.push_back({"empty-schema-id", "schema_id", "schema_id must be non-empty"});
  if (schema.version < 1)
    out.push_back({"invalid-version", "version", "version must be >= 1"});

  std::set<std::string> seen;
  for (std::size_t i = 0; i < schema.entity_types.size(); ++i) {
    const auto& t = schema.entity_types[i];
    const std::string base = at("entity_types", i);
    if (!is_valid_symbol(t.symbol))
      out.push_back({"invalid-symbol", base + ".symbol",
                     "symbol '" + t.symbol + "' must match [A-Z][A-Z0-9_]{0,15}"});
    if (!seen.insert(t.symbol).second)
      out.push_back({"duplicate-symbol", base + ".symbol", "symbol '" + t.symbol + "' is defined twice"});
    if (t.descriptions.empty())
      out.push_back({"empty-descriptions", base + ".descriptions",
                     "entity type '" + t.symbol + "' needs at least one description"});
    for (std::size_t k = 0; k < t.descriptions.size(); ++k)
      if (blank(t.descriptions[k]))
        out.push_back({"empty-description", at(base + ".descriptions", k), "description is empty"});
  }

  std::set<std::tuple<std::string, std::string, std::string>> triples;
  for (std::size_t i = 0; i < schema.relation_types.size(); ++i) {
    const auto& r = schema.relation_types[i];
    const std::string base = at("relation_types", i);
    if (blank(r.label)) out.push_back({"empty-relation-label", base + ".label", "relation label is empty"});
    if (!seen.count(r.source))
      out.push_back({"dangling-relation", base + ".source", "unknown source symbol '" + r.source + "'"});
    if (!seen.count(r.target))
      out.push_back({"dangling-relation", base + ".target", "unknown target symbol '" + r.target + "'"});
    if (!triples.emplace(r.label, r.source, r.target).second)
      out.push_back({"duplicate-relation", base,
                     "relation (" + r.label + ", " + r.source + ", " + r.target + ") is defined twice"});
  }
  return out;
}

std::vector<Violation> validate_spans(const AnnotatedDoc& doc) {
  std::vector<Violation> out;
  const std::size_t len = utf8::length(doc.text);
  for (std::size_t i = 0; i < doc.spans.size(); ++i) {
    const auto& s = doc.spans[i];
    const std::string base = at("spans", i);
    if (s.start >= s.end)
      out.push_back({"empty-span", base, "span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                                             ") is empty or inverted"});
    if (s.end > len)
      out.push_back({"bounds", base + ".end",
                     "span end " + std::to_string(s.end) + " exceeds text length " + std::to_string(len)});
    if (i > 0) {
      const auto& p = doc.spans[i - 1];
      if (std::tie(p.start, p.end) > std::tie(s.start, s.end))
        out.push_back({"unsorted", base, "spans must be sorted by (start, end)"});
      if (s.start < p.end && p.start < s.end)
        out.push_back({"overlap", base,
                       "span [" + std::to_string(s.start) + "," + std::to_string(s.end) + ") overlaps [" +
                           std::to_string(p.start) + "," + std::to_string(p.end) + ")"});
    }
  }
  return out;
}

std::vector<Violation> validate_doc(const AnnotatedDoc& doc, const EntitySchema& schema) {
  auto out = validate_spans(doc);
  for (std::size_t i = 0; i < doc.spans.size(); ++i)
    if (!schema.has_symbol(doc.spans[i].symbol))
      out.push_back({"unknown-symbol", at("spans", i) + ".symbol",
                     "symbol '" + doc.spans[i].symbol + "' is not in schema " + schema.schema_id});
  return out;
}

void sort_spans(std::vector<Span>& spans) {
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return std::tie(a.start, a.end, a.symbol) < std::tie(b.start, b.end, b.symbol); });
}

std::string format_violations(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.code + " at " + v.field + ": " + v.message;
  }
  return out;
}

void to_json(nlohmann::json& j, const EntityType& t) {
  j = {{"symbol", t.symbol}, {"name", t.name}, {"descriptions", t.descriptions}};
}

void from_json(const nlohmann::json& j, EntityType& t) {
  j.at("symbol").get_to(t.symbol);
  t.name = j.value("name", std::string{});
  j.at("descriptions").get_to(t.descriptions);
}

void to_json(nlohmann::json& j, const RelationType& r) {
  j = {{"label", r.label}, {"source", r.source}, {"target", r.target}};
}

void from_json(const nlohmann::json& j, RelationType& r) {
  j.at("label").get_to(r.label);
  j.at("source").get_to(r.source);
  j.at("target").get_to(r.target);
}

void to_json(nlohmann::json& j, const EntitySchema& s) {
  j = {{"schema_id", s.schema_id},
       {"version", s.version},
       {"entity_types", s.entity_types},
       {"relation_types", s.relation_types}};
}

void from_json(const nlohmann::json& j, EntitySchema& s) {
  j.at("schema_id").get_to(s.schema_id);
  s.version = j.value("version", std::int64_t{1});
  j.at("entity_types").get_to(s.entity_types);
  s.relation_types = j.value("relation_types", std::vector<RelationType>{});
}

void to_json(nlohmann::json& j, const Span& s) {
  j = {{"start", s.start}, {"end", s.end}, {"symbol", s.symbol}};
}

void from_json(const nlohmann::json& j, Span& s) {
  j.at("start").get_to(s.start);
  j.at("end").get_to(s.end);
  j.at("symbol").get_to(s.symbol);
}

void to_json(nlohmann::json& j, const AnnotatedDoc& d) {
  j = {{"doc_id", d.doc_id}, {"text", d.text}, {"spans", d.spans}};
}

void from_json(const nlohmann::json& j, AnnotatedDoc& d) {
  j.at("doc_id").get_to(d.doc_id);
  j.at("text").get_to(d.text);
  d.spans = j.value("spans", std::vector<Span>{});
}

void to_json(nlohmann::json& j, const Violation& v) {
  j = {{"code", v.code}, {"field", v.field}, {"message", v.message}};
}

EntitySchema parse_schema(std::string_view json_text) {
  try {
    return nlohmann::json::parse(json_text).get<EntitySchema>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("schema: ") + e.what());
  }
}

EntitySchema load_schema_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kStore, "cannot open schema file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_schema(buf.str());
}

std::string write_schema(const EntitySchema& schema) {
  return nlohmann::json(schema).dump(2) + "\n";
}

}  // namespace matforge
