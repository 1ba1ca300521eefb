#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "nutriset/error.hpp"

namespace nutriset {

namespace detail {

inline const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw FatalError("ICU NFC normalizer unavailable");
  }
  return *n;
}

inline icu::UnicodeString compose(const icu::UnicodeString& s) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc().normalize(s, status);
  if (U_FAILURE(status)) {
    throw FatalError("ICU normalization failed");
  }
  return out;
}

}  // namespace detail

/// Canonical form used for every text comparison in the pipeline: NFC
/// composition, simple case folding, whitespace runs collapsed to one ASCII
/// space, ends trimmed. Invalid UTF-8 bytes become U+FFFD.
inline std::string normalize_text(std::string_view s) {
  icu::UnicodeString u = detail::compose(
      icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size()))));

  // Simple folding keeps the string length stable per code point ("ß" stays "ß").
  icu::UnicodeString folded;
  for (int32_t i = 0; i < u.length();) {
    UChar32 c = u.char32At(i);
    folded.append(u_foldCase(c, U_FOLD_CASE_DEFAULT));
    i += U16_LENGTH(c);
  }
  u = detail::compose(folded);

  icu::UnicodeString collapsed;
  bool pending_space = false;
  for (int32_t i = 0; i < u.length();) {
    UChar32 c = u.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c) || c == 0x200B) {
      pending_space = !collapsed.isEmpty();
      continue;
    }
    if (pending_space) {
      collapsed.append(static_cast<UChar>(u' '));
      pending_space = false;
    }
    collapsed.append(c);
  }

  std::string out;
  collapsed.toUTF8String(out);
  return out;
}

/// Decodes UTF-8 into code points; invalid sequences map to U+FFFD.
inline std::u32string to_code_points(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto length = static_cast<int32_t>(s.size());
  for (int32_t i = 0; i < length;) {
    UChar32 c = 0;
    U8_NEXT(bytes, i, length, c);
    out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
  }
  return out;
}

inline std::string from_code_points(std::u32string_view cps) {
  icu::UnicodeString u;
  for (char32_t c : cps) {
    u.append(static_cast<UChar32>(c));
  }
  std::string out;
  u.toUTF8String(out);
  return out;
}

/// Splits normalized text into word tokens: maximal runs of letters, digits,
/// and combining marks. Punctuation and whitespace separate tokens.
inline std::vector<std::string> tokenize_words(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::u32string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(from_code_points(current));
      current.clear();
    }
  };
  for (char32_t c : to_code_points(normalized)) {
    const auto cp = static_cast<UChar32>(c);
    if (u_isalnum(cp) || u_getCombiningClass(cp) != 0 || u_charType(cp) == U_NON_SPACING_MARK) {
      current.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

inline bool contains_digit(std::string_view s) {
  for (char32_t c : to_code_points(s)) {
    if (u_isdigit(static_cast<UChar32>(c))) return true;
  }
  return false;
}

}  // namespace nutriset
