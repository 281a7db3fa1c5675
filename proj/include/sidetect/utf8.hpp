#pragma once

#include <string>
#include <string_view>

namespace sidetect::utf8 {

// Invalid or truncated sequences decode to U+FFFD.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view cps);
void append(std::string& out, char32_t cp);

std::size_t length(std::string_view bytes);

bool is_space(char32_t cp);

}  // namespace sidetect::utf8
