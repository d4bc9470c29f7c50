#pragma once

#include <string>
#include <string_view>

// Byte-level helpers shared by the MIME layer, the mock provider and reports.
namespace covertmail::codec {

// Standard alphabet with padding, no line breaks.
std::string base64_encode(std::string_view data);

// Ignores CR, LF, space and tab. Throws Error(InvalidBase64) on anything else
// outside the alphabet or on bad padding.
std::string base64_decode(std::string_view text);

// Base64 wrapped at `width` columns with CRLF separators (no trailing CRLF).
std::string base64_wrapped(std::string_view data, std::size_t width = 76);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Bare LF -> CRLF. Existing CRLF pairs are left untouched.
std::string normalize_crlf(std::string_view text);

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string_view trim(std::string_view s);
bool starts_with_icase(std::string_view s, std::string_view prefix);

// Collapses every run of ASCII whitespace into a single space and trims.
std::string collapse_whitespace(std::string_view s);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

}  // namespace covertmail::codec
