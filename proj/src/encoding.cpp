#include "cqadet/encoding.hpp"

#include <iconv.h>

#include <algorithm>
#include <cerrno>
#include <memory>

#include "cqadet/errors.hpp"

namespace cqadet {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_utf8_name(const std::string& charset) {
  const auto c = lower(charset);
  return c == "utf-8" || c == "utf8";
}

std::string convert(std::string_view bytes, const std::string& from, const std::string& to) {
  iconv_t cd = iconv_open(to.c_str(), from.c_str());
  if (cd == reinterpret_cast<iconv_t>(-1)) throw EncodingError("unsupported charset: " + from);
  std::unique_ptr<void, int (*)(iconv_t)> guard(cd, iconv_close);

  std::string out;
  std::string in(bytes);
  char* src = in.data();
  std::size_t src_left = in.size();
  char chunk[4096];
  while (src_left > 0) {
    char* dst = chunk;
    std::size_t dst_left = sizeof chunk;
    const std::size_t rc = iconv(cd, &src, &src_left, &dst, &dst_left);
    out.append(chunk, static_cast<std::size_t>(dst - chunk));
    if (rc == static_cast<std::size_t>(-1) && errno != E2BIG)
      throw EncodingError("input is not valid " + from);
  }
  char* dst = chunk;
  std::size_t dst_left = sizeof chunk;
  if (iconv(cd, nullptr, nullptr, &dst, &dst_left) == static_cast<std::size_t>(-1))
    throw EncodingError("incomplete " + from + " sequence");
  out.append(chunk, static_cast<std::size_t>(dst - chunk));
  return out;
}

}  // namespace

bool is_valid_utf8(std::string_view bytes) {
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    std::size_t len;
    char32_t cp;
    if (b0 < 0x80) {
      ++i;
      continue;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      return false;
    }
    if (i + len > bytes.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(bytes[i + k]);
      if ((b & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

std::optional<std::string> charset_of(std::string_view content_type) {
  const std::string ct = lower(content_type);
  const auto at = ct.find("charset=");
  if (at == std::string::npos) return std::nullopt;
  std::string value = ct.substr(at + 8);
  value = value.substr(0, value.find(';'));
  while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.pop_back();
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
    value = value.substr(1, value.size() - 2);
  if (value.empty()) return std::nullopt;
  return value;
}

std::string to_utf8(std::string_view bytes, const std::string& charset) {
  if (is_utf8_name(charset)) {
    if (!is_valid_utf8(bytes)) throw EncodingError("input is not valid UTF-8");
    return std::string(bytes);
  }
  std::string out = convert(bytes, charset, "UTF-8");
  if (!is_valid_utf8(out)) throw EncodingError("conversion produced invalid UTF-8");
  return out;
}

std::string from_utf8(std::string_view text, const std::string& charset) {
  if (is_utf8_name(charset)) return std::string(text);
  return convert(text, "UTF-8", charset);
}

}  // namespace cqadet
