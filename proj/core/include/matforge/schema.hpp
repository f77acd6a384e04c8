#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace matforge {

struct EntityType {
  std::string symbol;
  std::string name;
  std::vector<std::string> descriptions;

  bool operator==(const EntityType&) const = default;
};

struct RelationType {
  std::string label;
  std::string source;
  std::string target;

  bool operator==(const RelationType&) const = default;
};

struct EntitySchema {
  std::string schema_id;
  std::int64_t version = 1;
  std::vector<EntityType> entity_types;
  std::vector<RelationType> relation_types;

  const EntityType* find(std::string_view symbol) const;
  bool has_symbol(std::string_view symbol) const { return find(symbol) != nullptr; }
  std::vector<std::string> symbols() const;

  bool operator==(const EntitySchema&) const = default;
};

// Half-open [start, end) range in Unicode scalar values.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string symbol;

  auto operator<=>(const Span&) const = default;
};

struct AnnotatedDoc {
  std::string doc_id;
  std::string text;
  std::vector<Span> spans;

  bool operator==(const AnnotatedDoc&) const = default;
};

struct Violation {
  std::string code;   // e.g. "duplicate-symbol", "overlap"
  std::string field;  // JSON-pointer-ish path to the offending field
  std::string message;

  bool operator==(const Violation&) const = default;
};

bool is_valid_symbol(std::string_view symbol) noexcept;

std::vector<Violation> validate_schema(const EntitySchema& schema);
std::vector<Violation> validate_doc(const AnnotatedDoc& doc, const EntitySchema& schema);

// Structural checks only (ordering, bounds, overlap); symbol membership is
// left to the caller. Used where no schema governs the doc (CoNLL imports).
std::vector<Violation> validate_spans(const AnnotatedDoc& doc);

void sort_spans(std::vector<Span>& spans);

std::string format_violations(const std::vector<Violation>& violations);

void to_json(nlohmann::json& j, const EntityType& t);
void from_json(const nlohmann::json& j, EntityType& t);
void to_json(nlohmann::json& j, const RelationType& r);
void from_json(const nlohmann::json& j, RelationType& r);
void to_json(nlohmann::json& j, const EntitySchema& s);
void from_json(const nlohmann::json& j, EntitySchema& s);
void to_json(nlohmann::json& j, const Span& s);
void from_json(const nlohmann::json& j, Span& s);
void to_json(nlohmann::json& j, const AnnotatedDoc& d);
void from_json(const nlohmann::json& j, AnnotatedDoc& d);
void to_json(nlohmann::json& j, const Violation& v);

// Parses schema.json; throws Error(kInvalidInput) on malformed JSON or
// missing fields. Does not run validate_schema.
EntitySchema parse_schema(std::string_view json_text);
EntitySchema load_schema_file(const std::string& path);
std::string write_schema(const EntitySchema& schema);

}  // namespace matforge
