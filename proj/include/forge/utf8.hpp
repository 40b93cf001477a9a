#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers. Character classes come from ICU; decoding assumes input was
// validated at ingestion.
namespace forge::utf8 {

bool is_valid(std::string_view text) noexcept;

// Decodes the code point starting at `pos` and advances `pos` past it.
// Invalid sequences decode as U+FFFD and consume one byte.
char32_t next(std::string_view text, std::size_t& pos) noexcept;

void append(std::string& out, char32_t cp);

std::vector<char32_t> decode(std::string_view text);
std::string encode(const std::vector<char32_t>& cps);

// Number of code points.
std::size_t length(std::string_view text) noexcept;

char32_t to_lower(char32_t cp) noexcept;
std::string lower(std::string_view text);

bool is_space(char32_t cp) noexcept;
bool is_alpha(char32_t cp) noexcept;
bool is_digit(char32_t cp) noexcept;
bool is_punct(char32_t cp) noexcept;

// Splits on runs of Unicode whitespace; never yields empty pieces.
std::vector<std::string_view> split_whitespace(std::string_view text);

// Lowercases and collapses whitespace runs to a single ASCII space, trimming
// both ends.
std::string normalize(std::string_view text);

std::string_view rtrim(std::string_view text) noexcept;

}  // namespace forge::utf8
