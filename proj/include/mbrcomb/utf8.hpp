#pragma once

#include <string>
#include <string_view>

namespace mbrcomb::utf8 {

// Decodes UTF-8 into scalar values. Throws InputError naming the byte offset
// of the first invalid sequence (overlong forms and surrogates included).
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
void append(std::string& out, char32_t c);

// Offset of the first invalid byte, or npos.
std::size_t find_invalid(std::string_view text);

bool is_space(char32_t c);
// Value 0..9 of a Unicode decimal digit (category Nd), -1 otherwise.
int digit_value(char32_t c);
bool is_cjk(char32_t c);
bool is_latin_letter(char32_t c);

}  // namespace mbrcomb::utf8
