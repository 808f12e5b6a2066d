#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace cqadet {

bool is_valid_utf8(std::string_view bytes);

// Extracts the charset parameter of a Content-Type value, lowercased.
std::optional<std::string> charset_of(std::string_view content_type);

// Converts `bytes` from `charset` to UTF-8 with iconv. UTF-8 input is only
// validated. Throws EncodingError for unknown charsets and invalid input.
std::string to_utf8(std::string_view bytes, const std::string& charset);

// Converts UTF-8 text into `charset`; used by tests and clients.
std::string from_utf8(std::string_view text, const std::string& charset);

}  // namespace cqadet
