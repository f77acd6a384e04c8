#include "matforge/marker_codec.hpp"

#include <optional>

#include "matforge/errors.hpp"
#include "matforge/utf8.hpp"

namespace matforge {

std::string_view to_string(MarkerKind kind) noexcept {
  return kind == MarkerKind::kEntityMarker ? "entity_marker" : "special_marker";
}

MarkerKind parse_marker_kind(std::string_view s) {
  if (s == "entity" || s == "entity_marker") return MarkerKind::kEntityMarker;
  if (s == "special" || s == "special_marker") return MarkerKind::kSpecialMarker;
  throw Error(ErrorCode::kInvalidInput, "unknown marker approach '" + std::string(s) + "'");
}

MarkerFormat MarkerFormat::special(std::string target_symbol) {
  if (target_symbol.empty())
    throw Error(ErrorCode::kInvalidInput, "special_marker format requires a target symbol");
  return MarkerFormat(MarkerKind::kSpecialMarker, std::move(target_symbol));
}

namespace {

constexpr std::u32string_view kSpecialOpen = U"@@";
constexpr std::u32string_view kSpecialClose = U"##";

enum class TokenKind { kOpen, kClose };

struct MarkerToken {
  TokenKind kind;
  std::string symbol;
  std::size_t length;  // in scalars
};

bool symbol_char(char32_t c, bool first) {
  if (c >= U'A' && c <= U'Z') return true;
  return !first && ((c >= U'0' && c <= U'9') || c == U'_');
}

// Recognizes `<SYM>` / `</SYM>` shaped text at `i`, regardless of schema
// membership. Anything else (`<b>`, `<100>`) is not tag-shaped.
std::optional<MarkerToken> tag_shape_at(std::u32string_view in, std::size_t i) {
  if (in[i] != U'<') return std::nullopt;
  std::size_t j = i + 1;
  TokenKind kind = TokenKind::kOpen;
  if (j < in.size() && in[j] == U'/') {
    kind = TokenKind::kClose;
    ++j;
  }
  const std::size_t sym_start = j;
  while (j < in.size() && j - sym_start < 17 && symbol_char(in[j], j == sym_start)) ++j;
  const std::size_t sym_len = j - sym_start;
  if (sym_len == 0 || sym_len > 16 || j >= in.size() || in[j] != U'>') return std::nullopt;
  return MarkerToken{kind, utf8::encode(in.substr(sym_start, sym_len)), j + 1 - i};
}

std::string tag_text(TokenKind kind, const std::string& symbol) {
  return (kind == TokenKind::kOpen ? "<" : "</") + symbol + ">";
}

struct OpenMarker {
  std::string symbol;
  std::size_t out_pos;
  std::size_t in_pos;
};

class MarkerScanner {
 public:
  MarkerScanner(const EntitySchema& schema, const MarkerFormat& format, ParseMode mode)
      : schema_(schema), format_(format), mode_(mode) {}

  ParseOutcome run(std::u32string_view in) {
    std::u32string out;
    out.reserve(in.size());
    for (std::size_t i = 0; i < in.size();) {
      if (auto tok = next_token(in, i)) {
        if (tok->kind == TokenKind::kOpen) {
          on_open(*tok, out.size(), i);
        } else {
          on_close(*tok, out.size(), i);
        }
        i += tok->length;
        continue;
      }
      out.push_back(in[i]);
      ++i;
    }
    if (open_) {
      fail(ErrorCode::kUnclosedMarker,
           "unclosed " + open_label() + " at offset " + std::to_string(open_->in_pos) + " dropped");
      open_.reset();
    }
    outcome_.doc.text = utf8::encode(out);
    return std::move(outcome_);
  }

 private:
  std::optional<MarkerToken> next_token(std::u32string_view in, std::size_t i) {
    if (format_.kind() == MarkerKind::kSpecialMarker) {
      if (in.substr(i, 2) == kSpecialOpen) return MarkerToken{TokenKind::kOpen, format_.target_symbol(), 2};
      if (in.substr(i, 2) == kSpecialClose) return MarkerToken{TokenKind::kClose, format_.target_symbol(), 2};
      return std::nullopt;
    }
    auto tok = tag_shape_at(in, i);
    if (!tok) return std::nullopt;
    if (!schema_.has_symbol(tok->symbol)) {
      fail(ErrorCode::kUnknownSymbol, "tag " + tag_text(tok->kind, tok->symbol) + " at offset " +
                                          std::to_string(i) + " is not a schema symbol; kept as text");
      return std::nullopt;
    }
    return tok;
  }

  void on_open(const MarkerToken& tok, std::size_t out_pos, std::size_t in_pos) {
    if (open_) {
      fail(ErrorCode::kNestedMarker, "marker " + marker_label(TokenKind::kOpen, tok.symbol) + " at offset " +
                                         std::to_string(in_pos) + " opened inside " + open_label() +
                                         " from offset " + std::to_string(open_->in_pos) +
                                         "; outer marker dropped");
    }
    open_ = OpenMarker{tok.symbol, out_pos, in_pos};
  }

  void on_close(const MarkerToken& tok, std::size_t out_pos, std::size_t in_pos) {
    if (!open_) {
      fail(ErrorCode::kMismatchedClose, "closing " + marker_label(TokenKind::kClose, tok.symbol) +
                                            " at offset " + std::to_string(in_pos) +
                                            " has no open marker; dropped");
      return;
    }
    if (tok.symbol != open_->symbol) {
      fail(ErrorCode::kMismatchedClose, "closing " + marker_label(TokenKind::kClose, tok.symbol) +
                                            " at offset " + std::to_string(in_pos) + " does not match " +
                                            open_label() + "; closed as " + open_->symbol);
    }
    if (out_pos == open_->out_pos) {
      fail(ErrorCode::kEmptyMarker, "empty " + open_label() + " at offset " +
                                        std::to_string(open_->in_pos) + " dropped");
    } else {
      outcome_.doc.spans.push_back(Span{open_->out_pos, out_pos, open_->symbol});
    }
    open_.reset();
  }

  std::string marker_label(TokenKind kind, const std::string& symbol) const {
    if (format_.kind() == MarkerKind::kSpecialMarker) return kind == TokenKind::kOpen ? "@@" : "##";
    return tag_text(kind, symbol);
  }

  std::string open_label() const { return marker_label(TokenKind::kOpen, open_->symbol); }

  void fail(ErrorCode code, std::string message) {
    if (mode_ == ParseMode::kStrict) throw Error(code, message);
    outcome_.warnings.push_back(std::move(message));
  }

  const EntitySchema& schema_;
  const MarkerFormat& format_;
  ParseMode mode_;
  std::optional<OpenMarker> open_;
  ParseOutcome outcome_;
};

struct Normalized {
  std::u32string text;
  std::vector<std::size_t> orig_of_norm;       // norm index -> original index
  std::vector<std::ptrdiff_t> norm_of_orig;    // -1 for whitespace
};

Normalized normalize_with_map(std::u32string_view in) {
  Normalized n;
  n.norm_of_orig.assign(in.size(), -1);
  bool pending_space = false;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (utf8::is_space(in[i])) {
      pending_space = !n.text.empty();
      continue;
    }
    if (pending_space) {
      n.text.push_back(U' ');
      n.orig_of_norm.push_back(i);
      pending_space = false;
    }
    n.norm_of_orig[i] = static_cast<std::ptrdiff_t>(n.text.size());
    n.text.push_back(in[i]);
    n.orig_of_norm.push_back(i);
  }
  return n;
}

std::string preview(std::u32string_view s, std::size_t at) {
  const std::size_t from = at > 20 ? at - 20 : 0;
  return "\"" + utf8::encode(s.substr(from, 40)) + "\"";
}

std::vector<Span> drop_overlaps(std::vector<Span> spans, std::vector<std::string>& warnings) {
  sort_spans(spans);
  std::vector<Span> kept;
  for (auto& s : spans) {
    if (!kept.empty() && s.start < kept.back().end) {
      warnings.push_back("span " + s.symbol + " [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                         ") overlaps an earlier span; dropped");
      continue;
    }
    kept.push_back(std::move(s));
  }
  return kept;
}

}  // namespace

std::string render_marked(const AnnotatedDoc& doc, const EntitySchema& schema, const MarkerFormat& format) {
  if (auto v = validate_doc(doc, schema); !v.empty())
    throw Error(ErrorCode::kInvalidDoc, doc.doc_id + ": " + format_violations(v));
  const std::u32string text = utf8::decode(doc.text);

  // Text that already contains marker tokens cannot round-trip.
  {
    MarkerScanner probe(schema, format, ParseMode::kLenient);
    const ParseOutcome po = probe.run(text);
    if (!po.doc.spans.empty() || !po.warnings.empty())
      throw Error(ErrorCode::kInvalidDoc, doc.doc_id + ": source text contains marker-like sequences");
  }

  std::string out;
  out.reserve(doc.text.size() + doc.spans.size() * 12);
  std::size_t pos = 0;
  for (const auto& span : doc.spans) {
    if (!format.covers(span.symbol)) continue;
    out += utf8::encode(std::u32string_view(text).substr(pos, span.start - pos));
    const std::string surface = utf8::encode(std::u32string_view(text).substr(span.start, span.end - span.start));
    if (format.kind() == MarkerKind::kEntityMarker) {
      out += "<" + span.symbol + ">" + surface + "</" + span.symbol + ">";
    } else {
      out += "@@" + surface + "##";
    }
    pos = span.end;
  }
  out += utf8::encode(std::u32string_view(text).substr(pos));
  return out;
}

ParseOutcome parse_marked(std::string_view text, const EntitySchema& schema, const MarkerFormat& format,
                          ParseMode mode) {
  MarkerScanner scanner(schema, format, mode);
  return scanner.run(utf8::decode(text));
}

std::string strip_markers(std::string_view text, const EntitySchema& schema, const MarkerFormat& format) {
  return parse_marked(text, schema, format, ParseMode::kLenient).doc.text;
}

std::string normalize_whitespace(std::string_view text) {
  return utf8::encode(normalize_with_map(utf8::decode(text)).text);
}

AlignResult align_to_source(const ParseOutcome& outcome, std::string_view source, ParseMode mode) {
  AlignResult result;
  result.doc.doc_id = outcome.doc.doc_id;
  result.doc.text = std::string(source);
  result.warnings = outcome.warnings;

  const std::u32string stripped = utf8::decode(outcome.doc.text);
  const std::u32string src = utf8::decode(source);
  const Normalized ns = normalize_with_map(stripped);
  const Normalized nsrc = normalize_with_map(src);

  if (ns.text == nsrc.text) {
    std::vector<Span> spans;
    for (const auto& span : outcome.doc.spans) {
      std::size_t a = span.start;
      std::size_t b = span.end;
      while (a < b && ns.norm_of_orig[a] < 0) ++a;
      while (b > a && ns.norm_of_orig[b - 1] < 0) --b;
      if (a == b) {
        result.warnings.push_back("whitespace-only " + span.symbol + " span at " + std::to_string(span.start) +
                                  " dropped");
        continue;
      }
      if (a != span.start || b != span.end)
        result.warnings.push_back(span.symbol + " span at " + std::to_string(span.start) +
                                  " trimmed of surrounding whitespace");
      const auto na = static_cast<std::size_t>(ns.norm_of_orig[a]);
      const auto nb = static_cast<std::size_t>(ns.norm_of_orig[b - 1]);
      spans.push_back(Span{nsrc.orig_of_norm[na], nsrc.orig_of_norm[nb] + 1, span.symbol});
    }
    result.doc.spans = drop_overlaps(std::move(spans), result.warnings);
    return result;
  }

  std::size_t diff = 0;
  while (diff < ns.text.size() && diff < nsrc.text.size() && ns.text[diff] == nsrc.text[diff]) ++diff;
  const std::string where = "output diverges from source at normalized offset " + std::to_string(diff) +
                            ": got " + preview(ns.text, diff) + ", expected " + preview(nsrc.text, diff);
  if (mode == ParseMode::kStrict) throw Error(ErrorCode::kSourceDivergence, where);

  result.warnings.push_back(where + "; spans re-anchored by surface search");
  std::vector<Span> spans;
  for (const auto& span : outcome.doc.spans) {
    const std::u32string_view surface = std::u32string_view(stripped).substr(span.start, span.end - span.start);
    std::size_t hits = 0;
    std::size_t first = 0;
    for (std::size_t p = src.find(surface); p != std::u32string::npos; p = src.find(surface, p + 1)) {
      if (hits++ == 0) first = p;
    }
    const std::string label = span.symbol + " \"" + utf8::encode(surface) + "\"";
    if (hits == 1) {
      spans.push_back(Span{first, first + surface.size(), span.symbol});
    } else if (hits == 0) {
      result.warnings.push_back(label + " not found in source; dropped");
    } else {
      result.warnings.push_back(label + " occurs " + std::to_string(hits) + " times in source; dropped");
    }
  }
  result.doc.spans = drop_overlaps(std::move(spans), result.warnings);
  return result;
}

}  // namespace matforge
