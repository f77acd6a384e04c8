#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matforge/marker_codec.hpp"
#include "matforge/schema.hpp"

namespace matforge {

struct Token {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

enum class BioTag { kB, kI, kO };

// IOB2 label: B-X / I-X / O.
struct BioLabel {
  BioTag tag = BioTag::kO;
  std::string symbol;

  static BioLabel outside() { return {}; }
  static BioLabel begin(std::string symbol) { return {BioTag::kB, std::move(symbol)}; }
  static BioLabel inside(std::string symbol) { return {BioTag::kI, std::move(symbol)}; }

  // Throws Error(kUnknownLabel) for anything but O, B-*, I-*.
  static BioLabel parse(std::string_view text);
  std::string str() const;

  bool operator==(const BioLabel&) const = default;
};

struct BioSequence {
  std::vector<Token> tokens;
  std::vector<BioLabel> labels;

  bool operator==(const BioSequence&) const = default;
};

// Whitespace tokenization with leading/trailing ASCII punctuation split into
// single-character tokens. Interior punctuation ("0.9", "Li-ion") stays.
std::vector<Token> tokenize(std::string_view text);

// Builds tokens from pre-tokenized surfaces joined by single spaces; the
// returned text is that joined string.
std::vector<Token> tokens_from_surfaces(std::span<const std::string> surfaces, std::string* joined_text = nullptr);

struct BioResult {
  BioSequence sequence;
  std::vector<std::string> warnings;
};

// Strict mode throws MisalignedSpan when a span boundary falls inside a
// token; lenient mode snaps the span outward and warns.
BioResult spans_to_bio(std::span<const Token> tokens, std::span<const Span> spans, ParseMode mode);

struct SpansResult {
  std::vector<Span> spans;
  std::vector<std::string> warnings;
};

// Strict mode throws DanglingInside on I-X without a B-X/I-X predecessor;
// lenient mode reads it as B-X.
SpansResult bio_to_spans(const BioSequence& sequence, ParseMode mode);

// Token-per-line column text; blank line between sentences; label in the
// last column; -DOCSTART- lines are skipped.
std::vector<BioSequence> read_conll(std::string_view data);
std::string write_conll(std::span<const BioSequence> sequences);

// Text implied by a sequence's token offsets (tokens joined with spaces,
// gaps filled with spaces).
std::string sequence_text(const BioSequence& sequence);

}  // namespace matforge
