#include "mpmbr/text.hpp"

#include <unicode/unorm2.h>
#include <unicode/ustring.h>

#include <array>
#include <cctype>
#include <cstdint>

namespace mpmbr {

namespace {

bool is_unicode_space(uint32_t cp) {
  // Code points with the White_Space property.
  switch (cp) {
    case 0x0009:
    case 0x000A:
    case 0x000B:
    case 0x000C:
    case 0x000D:
    case 0x0020:
    case 0x0085:
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Decodes one UTF-8 code point at s[i]; advances i. Invalid bytes decode as
// themselves (Latin-1 fallback) so tokenization never fails.
uint32_t decode_utf8(std::string_view s, size_t& i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  size_t remaining = s.size() - i;
  auto cont = [&](size_t k) {
    return k < remaining &&
           (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  if (c < 0x80) {
    i += 1;
    return c;
  }
  if ((c & 0xE0) == 0xC0 && cont(1)) {
    uint32_t cp = (c & 0x1Fu) << 6 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
    i += 2;
    return cp;
  }
  if ((c & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    uint32_t cp = (c & 0x0Fu) << 12 |
                  (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6 |
                  (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
    i += 3;
    return cp;
  }
  if ((c & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    uint32_t cp = (c & 0x07u) << 18 |
                  (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 12 |
                  (static_cast<unsigned char>(s[i + 2]) & 0x3Fu) << 6 |
                  (static_cast<unsigned char>(s[i + 3]) & 0x3Fu);
    i += 4;
    return cp;
  }
  i += 1;
  return c;
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::string nfc(std::string_view utf8) {
  if (utf8.empty()) return {};
  UErrorCode ec = U_ZERO_ERROR;
  const UNormalizer2* norm = unorm2_getNFCInstance(&ec);
  if (U_FAILURE(ec)) return std::string(utf8);

  int32_t ulen = 0;
  ec = U_ZERO_ERROR;
  u_strFromUTF8(nullptr, 0, &ulen, utf8.data(),
                static_cast<int32_t>(utf8.size()), &ec);
  if (ec != U_BUFFER_OVERFLOW_ERROR && U_FAILURE(ec)) return std::string(utf8);
  std::vector<UChar> u16(static_cast<size_t>(ulen) + 1);
  ec = U_ZERO_ERROR;
  u_strFromUTF8(u16.data(), static_cast<int32_t>(u16.size()), &ulen,
                utf8.data(), static_cast<int32_t>(utf8.size()), &ec);
  if (U_FAILURE(ec)) return std::string(utf8);

  int32_t nlen = unorm2_normalize(norm, u16.data(), ulen, nullptr, 0, &ec);
  if (ec != U_BUFFER_OVERFLOW_ERROR && U_FAILURE(ec)) return std::string(utf8);
  std::vector<UChar> out16(static_cast<size_t>(nlen) + 1);
  ec = U_ZERO_ERROR;
  nlen = unorm2_normalize(norm, u16.data(), ulen, out16.data(),
                          static_cast<int32_t>(out16.size()), &ec);
  if (U_FAILURE(ec)) return std::string(utf8);

  int32_t olen = 0;
  ec = U_ZERO_ERROR;
  u_strToUTF8(nullptr, 0, &olen, out16.data(), nlen, &ec);
  if (ec != U_BUFFER_OVERFLOW_ERROR && U_FAILURE(ec)) return std::string(utf8);
  std::string out(static_cast<size_t>(olen), '\0');
  ec = U_ZERO_ERROR;
  u_strToUTF8(out.data(), olen, &olen, out16.data(), nlen, &ec);
  if (U_FAILURE(ec)) return std::string(utf8);
  out.resize(static_cast<size_t>(olen));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::string normalized = nfc(text);
  std::vector<std::string> tokens;
  size_t i = 0;
  size_t token_start = 0;
  bool in_token = false;
  while (i < normalized.size()) {
    size_t cp_start = i;
    uint32_t cp = decode_utf8(normalized, i);
    if (is_unicode_space(cp)) {
      if (in_token) {
        tokens.emplace_back(normalized.substr(token_start, cp_start - token_start));
        in_token = false;
      }
    } else if (!in_token) {
      token_start = cp_start;
      in_token = true;
    }
  }
  if (in_token) tokens.emplace_back(normalized.substr(token_start));
  return tokens;
}

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && is_ascii_space(s[b])) ++b;
  while (e > b && is_ascii_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string casefold_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string strip_trailing_punct(std::string_view s) {
  size_t e = s.size();
  auto is_punct = [](char c) {
    return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' ||
           c == '?';
  };
  while (e > 0 && is_punct(s[e - 1])) --e;
  return std::string(s.substr(0, e));
}

std::string normalize_answer(std::string_view s) {
  return strip_trailing_punct(casefold_ascii(trim(s)));
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_ascii_space(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

bool is_blank(std::string_view s) {
  for (char c : s) {
    if (!is_ascii_space(c)) return false;
  }
  return true;
}

}  // namespace mpmbr
