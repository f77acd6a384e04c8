#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "matforge/schema.hpp"

namespace matforge {

enum class MarkerKind { kEntityMarker, kSpecialMarker };
enum class ParseMode { kStrict, kLenient };

std::string_view to_string(MarkerKind kind) noexcept;
MarkerKind parse_marker_kind(std::string_view s);  // "entity" | "special" (and *_marker)

// Entity markers highlight every type at once as <SYM>surface</SYM>.
// Special markers highlight a single target type as @@surface##.
class MarkerFormat {
 public:
  static MarkerFormat entity() { return MarkerFormat(MarkerKind::kEntityMarker, {}); }
  static MarkerFormat special(std::string target_symbol);

  MarkerKind kind() const noexcept { return kind_; }
  const std::string& target_symbol() const noexcept { return target_; }

  // Whether spans of `symbol` are expressible in this format.
  bool covers(std::string_view symbol) const { return kind_ == MarkerKind::kEntityMarker || symbol == target_; }

 private:
  MarkerFormat(MarkerKind kind, std::string target) : kind_(kind), target_(std::move(target)) {}

  MarkerKind kind_;
  std::string target_;
};

struct ParseOutcome {
  AnnotatedDoc doc;
  std::vector<std::string> warnings;
};

// Throws Error(kInvalidDoc) if validate_doc fails. Spans not covered by the
// format are omitted.
std::string render_marked(const AnnotatedDoc& doc, const EntitySchema& schema, const MarkerFormat& format);

// Strict mode throws UnknownSymbol / UnclosedMarker / MismatchedClose /
// NestedMarker / EmptyMarker on the first malformation. Lenient mode never
// throws; each repair is reported in `warnings`.
ParseOutcome parse_marked(std::string_view text, const EntitySchema& schema, const MarkerFormat& format,
                          ParseMode mode);

std::string strip_markers(std::string_view text, const EntitySchema& schema, const MarkerFormat& format);

struct AlignResult {
  AnnotatedDoc doc;  // doc.text == source
  std::vector<std::string> warnings;
};

// Re-anchors spans parsed from model output onto the original source text.
// Strict mode requires whitespace-normalized equality (SourceDivergence
// otherwise); lenient mode keeps spans whose surface occurs exactly once in
// the source.
AlignResult align_to_source(const ParseOutcome& outcome, std::string_view source, ParseMode mode);

// Collapses whitespace runs to a single space and trims both ends.
std::string normalize_whitespace(std::string_view text);

}  // namespace matforge
