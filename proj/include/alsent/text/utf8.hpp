#pragma once

#include <string>
#include <string_view>

namespace alsent::text {

// Decodes UTF-8. Malformed sequences decode to U+FFFD, one per offending byte.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view codepoints);

bool is_unicode_whitespace(char32_t c);

// U+0621..U+064A minus tatweel, plus U+0671..U+06D3.
bool is_arabic_letter(char32_t c);
// U+064B..U+065F and U+0670.
bool is_arabic_diacritic(char32_t c);
inline constexpr char32_t kTatweel = U'\u0640';

}  // namespace alsent::text
