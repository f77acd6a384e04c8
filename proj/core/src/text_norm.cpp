#include "matforge/text_norm.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "matforge/errors.hpp"
#include "matforge/marker_codec.hpp"

namespace matforge {

std::string normalize_name(std::string_view s) {
  if (s.empty()) return {};
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc_cf = icu::Normalizer2::getNFKCCasefoldInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorCode::kInvalidConfig, "ICU NFKC_Casefold data unavailable");
  const icu::UnicodeString src = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  const icu::UnicodeString folded = nfkc_cf->normalize(src, status);
  if (U_FAILURE(status)) throw Error(ErrorCode::kInvalidInput, "cannot normalize name");
  std::string out;
  folded.toUTF8String(out);
  return normalize_whitespace(out);
}

}  // namespace matforge
