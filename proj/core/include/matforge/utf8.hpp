#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Offsets throughout matforge count Unicode scalar values. These helpers
// convert between UTF-8 storage and scalar-indexed views.
namespace matforge::utf8 {

// Invalid byte sequences decode to U+FFFD.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

std::size_t length(std::string_view text);

// Scalar-indexed substring [start, end); clamps to the text length.
std::string substr(std::string_view text, std::size_t start, std::size_t end);

bool is_space(char32_t cp) noexcept;

}  // namespace matforge::utf8
