#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <unicode/uchar.h>

#include "nutriset/error.hpp"
#include "nutriset/ingestion.hpp"
#include "nutriset/rational.hpp"
#include "nutriset/text.hpp"

namespace nutriset {

enum class QuantityKind { Count, ByTaste, Unknown };

struct ParsedQuantity {
  QuantityKind kind = QuantityKind::Unknown;
  Rational value = 0;  // > 0 iff kind == Count

  static ParsedQuantity count(Rational v) { return {QuantityKind::Count, std::move(v)}; }
  static ParsedQuantity by_taste() { return {QuantityKind::ByTaste, 0}; }
  static ParsedQuantity unknown() { return {QuantityKind::Unknown, 0}; }

  bool is_count() const { return kind == QuantityKind::Count; }
  bool operator==(const ParsedQuantity&) const = default;
};

struct ParsedIngredient {
  ParsedQuantity quantity;
  std::string unit_token;  // normalized, no digits, may be empty
  std::string name;        // normalized, non-empty

  bool operator==(const ParsedIngredient&) const = default;
};

struct LineReject {
  std::string reason;
};

/// Marker phrases meaning "amount left to the cook". Entries are stored
/// normalized; lookups compare whole normalized strings.
struct ParserLexicon {
  std::set<std::string> by_taste;
  std::vector<std::string> approx_prefixes;

  bool is_by_taste(const std::string& normalized) const { return by_taste.count(normalized) > 0; }

  static ParserLexicon defaults() {
    ParserLexicon lex;
    for (const char* m : {"nach belieben", "n. b.", "n.b.", "nb", "etwas", "nach geschmack", "evtl.",
                          "eventuell", "by taste", "to taste", "some", "as needed", "optional"}) {
      lex.by_taste.insert(normalize_text(m));
    }
    lex.approx_prefixes = {"ca.", "ca", "circa", "etwa", "approx.", "about"};
    return lex;
  }
};

/// Loads a by-taste lexicon: one marker per line, blank lines and lines
/// starting with '#' ignored.
inline ParserLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FatalError("cannot read lexicon " + path.string());
  ParserLexicon lex = ParserLexicon::defaults();
  lex.by_taste.clear();
  std::string line;
  while (std::getline(in, line)) {
    std::string entry = normalize_text(line);
    if (entry.empty() || entry.front() == '#') continue;
    lex.by_taste.insert(entry);
  }
  return lex;
}

namespace detail {

struct Fraction {
  int64_t numerator;
  int64_t denominator;
};

inline std::optional<Fraction> vulgar_fraction(char32_t c) {
  switch (c) {
    case U'¼': return Fraction{1, 4};
    case U'½': return Fraction{1, 2};
    case U'¾': return Fraction{3, 4};
    case U'⅐': return Fraction{1, 7};
    case U'⅑': return Fraction{1, 9};
    case U'⅒': return Fraction{1, 10};
    case U'⅓': return Fraction{1, 3};
    case U'⅔': return Fraction{2, 3};
    case U'⅕': return Fraction{1, 5};
    case U'⅖': return Fraction{2, 5};
    case U'⅗': return Fraction{3, 5};
    case U'⅘': return Fraction{4, 5};
    case U'⅙': return Fraction{1, 6};
    case U'⅚': return Fraction{5, 6};
    case U'⅛': return Fraction{1, 8};
    case U'⅜': return Fraction{3, 8};
    case U'⅝': return Fraction{5, 8};
    case U'⅞': return Fraction{7, 8};
    case U'↉': return Fraction{0, 3};
    default: return std::nullopt;
  }
}

inline int superscript_digit(char32_t c) {
  switch (c) {
    case U'⁰': return 0;
    case U'¹': return 1;
    case U'²': return 2;
    case U'³': return 3;
    case U'⁴': return 4;
    case U'⁵': return 5;
    case U'⁶': return 6;
    case U'⁷': return 7;
    case U'⁸': return 8;
    case U'⁹': return 9;
    default: return -1;
  }
}

inline int subscript_digit(char32_t c) {
  if (c >= U'₀' && c <= U'₉') return static_cast<int>(c - U'₀');
  return -1;
}

inline int plain_digit(char32_t c) {
  if (u_charType(static_cast<UChar32>(c)) != U_DECIMAL_DIGIT_NUMBER) return -1;
  return u_charDigitValue(static_cast<UChar32>(c));
}

inline bool is_fraction_slash(char32_t c) { return c == U'/' || c == U'⁄' || c == U'∕'; }

inline std::optional<BigInt> parse_digits(std::u32string_view s, int (*digit)(char32_t)) {
  if (s.empty() || s.size() > 30) return std::nullopt;
  BigInt v = 0;
  for (char32_t c : s) {
    int d = digit(c);
    if (d < 0) return std::nullopt;
    v = v * 10 + d;
  }
  return v;
}

inline std::optional<Rational> parse_plain_decimal(std::u32string_view s) {
  std::string ascii;
  for (char32_t c : s) {
    int d = plain_digit(c);
    if (d >= 0) {
      ascii.push_back(static_cast<char>('0' + d));
    } else if (c == U'.' || c == U',') {
      ascii.push_back(static_cast<char>(c));
    } else {
      return std::nullopt;
    }
  }
  if (ascii.size() > 40) return std::nullopt;
  return parse_decimal(ascii);
}

// One token without spaces: "3", "1,5", "3/4", "¼", "1½", "¹⁄₄", "⅟4".
inline std::optional<Rational> parse_number_token(std::u32string_view tok) {
  if (tok.empty()) return std::nullopt;

  if (tok.size() == 1) {
    if (auto f = vulgar_fraction(tok[0])) return Rational(f->numerator, f->denominator);
  }
  // Whole part glued to a vulgar fraction: "1½".
  if (tok.size() >= 2) {
    if (auto f = vulgar_fraction(tok.back())) {
      auto whole = parse_digits(tok.substr(0, tok.size() - 1), plain_digit);
      if (!whole) return std::nullopt;
      return Rational(*whole) + Rational(f->numerator, f->denominator);
    }
  }
  if (tok.front() == U'⅟') {
    auto den = parse_digits(tok.substr(1), plain_digit);
    if (!den) den = parse_digits(tok.substr(1), subscript_digit);
    if (!den || *den == 0) return std::nullopt;
    return Rational(BigInt(1), *den);
  }

  auto slash = std::u32string_view::npos;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    if (is_fraction_slash(tok[i])) {
      if (slash != std::u32string_view::npos) return std::nullopt;
      slash = i;
    }
  }
  if (slash != std::u32string_view::npos) {
    auto num_text = tok.substr(0, slash);
    auto den_text = tok.substr(slash + 1);
    auto num = parse_digits(num_text, plain_digit);
    if (!num) num = parse_digits(num_text, superscript_digit);
    auto den = parse_digits(den_text, plain_digit);
    if (!den) den = parse_digits(den_text, subscript_digit);
    if (!num || !den || *den == 0) return std::nullopt;
    return Rational(*num, *den);
  }
  return parse_plain_decimal(tok);
}

inline bool is_integer_token(std::u32string_view tok) {
  if (tok.empty()) return false;
  for (char32_t c : tok) {
    if (plain_digit(c) < 0) return false;
  }
  return true;
}

inline std::vector<std::u32string_view> split_spaces(std::u32string_view s) {
  std::vector<std::u32string_view> parts;
  std::size_t start = 0;
  while (start < s.size()) {
    while (start < s.size() && s[start] == U' ') ++start;
    std::size_t end = start;
    while (end < s.size() && s[end] != U' ') ++end;
    if (end > start) parts.push_back(s.substr(start, end - start));
    start = end;
  }
  return parts;
}

// A single amount: one number token, or a whole number followed by a
// fraction token ("1 3/4", "2 ½").
inline std::optional<Rational> parse_single_amount(std::u32string_view s) {
  auto parts = split_spaces(s);
  if (parts.size() == 1) return parse_number_token(parts[0]);
  if (parts.size() == 2 && is_integer_token(parts[0])) {
    auto whole = parse_digits(parts[0], plain_digit);
    auto frac = parse_number_token(parts[1]);
    bool frac_is_fraction = false;
    for (char32_t c : parts[1]) {
      if (is_fraction_slash(c) || vulgar_fraction(c) || c == U'⅟') frac_is_fraction = true;
    }
    if (whole && frac && frac_is_fraction && *frac < 1) return Rational(*whole) + *frac;
  }
  return std::nullopt;
}

inline std::u32string_view trim_spaces(std::u32string_view s) {
  while (!s.empty() && s.front() == U' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == U' ') s.remove_suffix(1);
  return s;
}

// Ranges ("2-3", "2 – 3", "2 bis 3") resolve to the midpoint.
inline std::optional<Rational> parse_amount_or_range(std::u32string_view s) {
  if (auto v = parse_single_amount(s)) return v;
  for (std::u32string_view sep : {std::u32string_view(U"-"), std::u32string_view(U"–"),
                                  std::u32string_view(U"—"), std::u32string_view(U" bis "),
                                  std::u32string_view(U" to ")}) {
    auto pos = s.find(sep);
    if (pos == std::u32string_view::npos) continue;
    auto lo = parse_single_amount(trim_spaces(s.substr(0, pos)));
    auto hi = parse_single_amount(trim_spaces(s.substr(pos + sep.size())));
    if (lo && hi) return (*lo + *hi) / 2;
    return std::nullopt;
  }
  return std::nullopt;
}

inline std::u32string_view strip_approx_prefix(std::u32string_view s, const ParserLexicon& lex) {
  for (const auto& prefix : lex.approx_prefixes) {
    std::u32string p = to_code_points(prefix);
    if (s.size() > p.size() && s.substr(0, p.size()) == p) {
      auto rest = s.substr(p.size());
      // "ca." may be glued to the number; bare words need a following space.
      if (rest.front() == U' ' || p.back() == U'.') return trim_spaces(rest);
    }
  }
  return s;
}

inline bool is_numeric_char(char32_t c) {
  return plain_digit(c) >= 0 || vulgar_fraction(c) || superscript_digit(c) >= 0 || subscript_digit(c) >= 0 ||
         is_fraction_slash(c) || c == U'⅟' || c == U'.' || c == U',' || c == U'-' || c == U'–' || c == U' ';
}

}  // namespace detail

/// Parses an amount string into an exact quantity. Integers, decimals with
/// '.' or ',', "a/b", mixed "a b/c", unicode vulgar fractions and ranges are
/// Count; lexicon markers are ByTaste; everything else is Unknown.
inline ParsedQuantity parse_quantity(std::string_view amount_text,
                                     const ParserLexicon& lexicon = ParserLexicon::defaults()) {
  const std::string normalized = normalize_text(amount_text);
  if (normalized.empty()) return ParsedQuantity::unknown();
  if (lexicon.is_by_taste(normalized)) return ParsedQuantity::by_taste();

  const std::u32string cps = to_code_points(normalized);
  auto body = detail::strip_approx_prefix(cps, lexicon);
  auto value = detail::parse_amount_or_range(body);
  if (!value || *value <= 0) return ParsedQuantity::unknown();
  return ParsedQuantity::count(*value);
}

/// Splits a leading amount off free text: "500 g" -> (500, "g"),
/// "1 3/4 cups" -> (7/4, "cups"). Returns nullopt if no prefix parses.
inline std::optional<std::pair<Rational, std::string>> split_leading_quantity(
    std::string_view normalized, const ParserLexicon& lexicon = ParserLexicon::defaults()) {
  const std::u32string cps = to_code_points(normalized);
  auto body = detail::strip_approx_prefix(cps, lexicon);
  std::size_t end = 0;
  while (end < body.size() && detail::is_numeric_char(body[end])) ++end;
  // Longest prefix first; cuts are only tried at token boundaries.
  for (std::size_t cut = end; cut > 0; --cut) {
    if (cut < body.size() && body[cut] != U' ' && detail::is_numeric_char(body[cut])) continue;
    auto head = detail::trim_spaces(body.substr(0, cut));
    auto value = detail::parse_amount_or_range(head);
    if (value && *value > 0) {
      auto rest = detail::trim_spaces(body.substr(cut));
      return std::make_pair(*value, from_code_points(rest));
    }
  }
  return std::nullopt;
}

namespace detail {

inline std::string strip_digits(std::string_view normalized) {
  std::u32string kept;
  for (char32_t c : to_code_points(normalized)) {
    if (!u_isdigit(static_cast<UChar32>(c))) kept.push_back(c);
  }
  return normalize_text(from_code_points(kept));
}

}  // namespace detail

/// Parses one (amount, unit, name) triple. A quantity written into the unit
/// column ("500 g") is split out; when both columns carry a count they
/// multiply ("2" x "500 g").
inline std::variant<ParsedIngredient, LineReject> parse_ingredient_line(
    const IngredientLine& line, const ParserLexicon& lexicon = ParserLexicon::defaults()) {
  ParsedIngredient out;
  out.name = normalize_text(line.name_text);
  if (out.name.empty()) return LineReject{"empty ingredient name"};

  const std::string amount = normalize_text(line.amount_text);
  std::string unit = normalize_text(line.unit_text);
  ParsedQuantity q = parse_quantity(amount, lexicon);

  if (lexicon.is_by_taste(unit) && q.kind != QuantityKind::Count) {
    out.quantity = ParsedQuantity::by_taste();
    return out;
  }

  if (q.kind == QuantityKind::Unknown && !amount.empty() && unit.empty()) {
    if (auto split = split_leading_quantity(amount, lexicon)) {
      q = ParsedQuantity::count(split->first);
      unit = split->second;
    }
  }

  if (contains_digit(unit)) {
    auto split = split_leading_quantity(unit, lexicon);
    if (split && !contains_digit(split->second)) {
      if (q.kind == QuantityKind::Count) {
        q = ParsedQuantity::count(q.value * split->first);
      } else if (amount.empty()) {
        q = ParsedQuantity::count(split->first);
      } else {
        q = ParsedQuantity::unknown();
      }
      unit = split->second;
    } else {
      q = ParsedQuantity::unknown();
      unit = detail::strip_digits(unit);
    }
  }

  out.quantity = std::move(q);
  out.unit_token = std::move(unit);
  return out;
}

}  // namespace nutriset
