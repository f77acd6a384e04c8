#include "matforge/bio.hpp"

#include <algorithm>
#include <optional>

#include "matforge/errors.hpp"
#include "matforge/utf8.hpp"

namespace matforge {

BioLabel BioLabel::parse(std::string_view text) {
  if (text == "O") return outside();
  if (text.size() > 2 && text[1] == '-') {
    if (text[0] == 'B') return begin(std::string(text.substr(2)));
    if (text[0] == 'I') return inside(std::string(text.substr(2)));
  }
  throw Error(ErrorCode::kUnknownLabel, "unknown BIO label '" + std::string(text) + "'");
}

std::string BioLabel::str() const {
  switch (tag) {
    case BioTag::kB: return "B-" + symbol;
    case BioTag::kI: return "I-" + symbol;
    case BioTag::kO: break;
  }
  return "O";
}

namespace {

bool ascii_punct(char32_t c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
         (c >= 0x7B && c <= 0x7E);
}

std::string span_label(const Span& s) {
  return s.symbol + " [" + std::to_string(s.start) + "," + std::to_string(s.end) + ")";
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  const std::u32string cps = utf8::decode(text);
  std::vector<Token> out;
  auto emit = [&](std::size_t a, std::size_t b) {
    out.push_back(Token{utf8::encode(std::u32string_view(cps).substr(a, b - a)), a, b});
  };
  for (std::size_t i = 0; i < cps.size();) {
    if (utf8::is_space(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && !utf8::is_space(cps[j])) ++j;
    std::size_t a = i;
    std::size_t b = j;
    while (a < b && ascii_punct(cps[a])) {
      emit(a, a + 1);
      ++a;
    }
    std::size_t trail = b;
    while (trail > a && ascii_punct(cps[trail - 1])) --trail;
    if (a < trail) emit(a, trail);
    for (std::size_t k = trail; k < b; ++k) emit(k, k + 1);
    i = j;
  }
  return out;
}

std::vector<Token> tokens_from_surfaces(std::span<const std::string> surfaces, std::string* joined_text) {
  std::vector<Token> out;
  out.reserve(surfaces.size());
  std::size_t pos = 0;
  std::string joined;
  for (const auto& s : surfaces) {
    if (!out.empty()) {
      joined += ' ';
      ++pos;
    }
    const std::size_t len = utf8::length(s);
    out.push_back(Token{s, pos, pos + len});
    joined += s;
    pos += len;
  }
  if (joined_text) *joined_text = std::move(joined);
  return out;
}

BioResult spans_to_bio(std::span<const Token> tokens, std::span<const Span> spans, ParseMode mode) {
  BioResult result;
  result.sequence.tokens.assign(tokens.begin(), tokens.end());
  result.sequence.labels.assign(tokens.size(), BioLabel::outside());
  std::vector<bool> taken(tokens.size(), false);

  for (const auto& span : spans) {
    // Tokens overlapping [start, end).
    std::size_t first = tokens.size();
    std::size_t last = 0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t].start < span.end && span.start < tokens[t].end) {
        first = std::min(first, t);
        last = t;
      }
    }
    if (first == tokens.size()) {
      if (mode == ParseMode::kStrict)
        throw Error(ErrorCode::kMisalignedSpan, "span " + span_label(span) + " covers no token");
      result.warnings.push_back("span " + span_label(span) + " covers no token; dropped");
      continue;
    }
    const bool aligned = tokens[first].start == span.start && tokens[last].end == span.end;
    if (!aligned) {
      if (mode == ParseMode::kStrict)
        throw Error(ErrorCode::kMisalignedSpan,
                    "span " + span_label(span) + " boundary falls inside a token");
      result.warnings.push_back("span " + span_label(span) + " snapped to token boundaries [" +
                                std::to_string(tokens[first].start) + "," + std::to_string(tokens[last].end) +
                                ")");
    }
    bool clash = false;
    for (std::size_t t = first; t <= last; ++t) clash = clash || taken[t];
    if (clash) {
      if (mode == ParseMode::kStrict)
        throw Error(ErrorCode::kMisalignedSpan, "span " + span_label(span) + " shares a token with another span");
      result.warnings.push_back("span " + span_label(span) + " shares a token with another span; dropped");
      continue;
    }
    for (std::size_t t = first; t <= last; ++t) {
      taken[t] = true;
      result.sequence.labels[t] = t == first ? BioLabel::begin(span.symbol) : BioLabel::inside(span.symbol);
    }
  }
  return result;
}

SpansResult bio_to_spans(const BioSequence& sequence, ParseMode mode) {
  if (sequence.tokens.size() != sequence.labels.size())
    throw Error(ErrorCode::kInvalidInput, "token and label counts differ");
  SpansResult result;
  std::optional<Span> open;
  auto flush = [&] {
    if (open) result.spans.push_back(std::move(*open));
    open.reset();
  };
  for (std::size_t t = 0; t < sequence.tokens.size(); ++t) {
    const auto& label = sequence.labels[t];
    const auto& token = sequence.tokens[t];
    switch (label.tag) {
      case BioTag::kO:
        flush();
        break;
      case BioTag::kB:
        flush();
        open = Span{token.start, token.end, label.symbol};
        break;
      case BioTag::kI:
        if (open && open->symbol == label.symbol) {
          open->end = token.end;
          break;
        }
        if (mode == ParseMode::kStrict)
          throw Error(ErrorCode::kDanglingInside,
                      "I-" + label.symbol + " at token " + std::to_string(t) + " has no B-" + label.symbol);
        result.warnings.push_back("I-" + label.symbol + " at token " + std::to_string(t) + " read as B-" +
                                  label.symbol);
        flush();
        open = Span{token.start, token.end, label.symbol};
        break;
    }
  }
  flush();
  return result;
}

namespace {

std::vector<std::string> split_columns(std::string_view line) {
  std::vector<std::string> cols;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) cols.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return cols;
}

}  // namespace

std::vector<BioSequence> read_conll(std::string_view data) {
  std::vector<BioSequence> out;
  std::vector<std::string> surfaces;
  std::vector<BioLabel> labels;
  std::size_t columns = 0;
  std::size_t line_no = 0;

  auto finish = [&] {
    if (surfaces.empty()) return;
    BioSequence seq;
    seq.tokens = tokens_from_surfaces(surfaces);
    seq.labels = std::move(labels);
    out.push_back(std::move(seq));
    surfaces.clear();
    labels.clear();
  };

  std::size_t pos = 0;
  while (pos <= data.size()) {
    std::size_t nl = data.find('\n', pos);
    if (nl == std::string_view::npos) nl = data.size();
    std::string_view line = data.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const auto cols = split_columns(line);
    if (cols.empty()) {
      finish();
      continue;
    }
    if (cols[0] == "-DOCSTART-") {
      finish();
      continue;
    }
    if (cols.size() < 2)
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": expected token and label columns");
    if (columns == 0) columns = cols.size();
    if (cols.size() != columns)
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": expected " +
                                                 std::to_string(columns) + " columns, found " +
                                                 std::to_string(cols.size()));
    try {
      labels.push_back(BioLabel::parse(cols.back()));
    } catch (const Error&) {
      throw Error(ErrorCode::kUnknownLabel, "line " + std::to_string(line_no) + ": unknown label '" + cols.back() + "'");
    }
    surfaces.push_back(cols.front());
  }
  finish();
  return out;
}

std::string write_conll(std::span<const BioSequence> sequences) {
  std::string out;
  bool first = true;
  for (const auto& seq : sequences) {
    if (seq.tokens.empty()) continue;
    if (!first) out += '\n';
    first = false;
    for (std::size_t t = 0; t < seq.tokens.size(); ++t) {
      out += seq.tokens[t].surface;
      out += ' ';
      out += seq.labels.at(t).str();
      out += '\n';
    }
  }
  return out;
}

std::string sequence_text(const BioSequence& sequence) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& tok : sequence.tokens) {
    while (pos < tok.start) {
      out += ' ';
      ++pos;
    }
    out += tok.surface;
    pos = tok.end;
  }
  return out;
}

}  // namespace matforge
