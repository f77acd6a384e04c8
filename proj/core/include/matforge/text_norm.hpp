#pragma once

#include <string>
#include <string_view>

namespace matforge {

// NFKC compatibility mapping with case folding (so "Al₂O₃" becomes
// "al2o3"), then whitespace runs collapsed to one space and trimmed.
// Idempotent.
std::string normalize_name(std::string_view s);

}  // namespace matforge
