#include <random>

#include <gtest/gtest.h>

#include "nutriset/rational.hpp"
#include "nutriset/text.hpp"

using namespace nutriset;

TEST(NormalizeText, CollapsesWhitespaceAndFoldsCase) {
  EXPECT_EQ(normalize_text("  Rote   Zwiebel "), "rote zwiebel");
  EXPECT_EQ(normalize_text("\tTOMATEN\n"), "tomaten");
  EXPECT_EQ(normalize_text(""), "");
  EXPECT_EQ(normalize_text("   "), "");
}

TEST(NormalizeText, DecomposedEqualsComposed) {
  const std::string decomposed = "Ka\xCC\x88se";  // a + U+0308
  EXPECT_EQ(normalize_text(decomposed), normalize_text("käse"));
  EXPECT_EQ(normalize_text(decomposed), "käse");
}

TEST(NormalizeText, UnicodeSpacesCollapse) {
  EXPECT_EQ(normalize_text("rote\xC2\xA0zwiebel"), "rote zwiebel");      // NBSP
  EXPECT_EQ(normalize_text("rote\xE2\x80\x83 zwiebel"), "rote zwiebel");  // EM SPACE
}

TEST(NormalizeText, SimpleFoldingKeepsSharpS) { EXPECT_EQ(normalize_text("Größe"), "größe"); }

TEST(NormalizeText, IdempotentOnRandomStrings) {
  const std::u32string alphabet = U"aAbZzäÄöÖüÜßẞéÉ \t\n  ​́̈̊1234½¼-,./ΣσςİıǅＡ";
  std::mt19937 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(0, 24);
  for (int i = 0; i < 1000; ++i) {
    std::u32string s;
    for (int n = len(rng); n > 0; --n) s.push_back(alphabet[pick(rng)]);
    const std::string once = normalize_text(from_code_points(s));
    ASSERT_EQ(normalize_text(once), once) << "case " << i;
  }
}

TEST(NormalizeText, InvalidUtf8DoesNotThrow) {
  EXPECT_NO_THROW(normalize_text("ab\xFF\xFE" "cd"));
  EXPECT_EQ(to_code_points("a\xFF"), std::u32string(U"a�"));
}

TEST(Tokenize, SplitsOnNonWordCharacters) {
  EXPECT_EQ(tokenize_words("zwiebeln, gewürfelt"), (std::vector<std::string>{"zwiebeln", "gewürfelt"}));
  EXPECT_TRUE(tokenize_words("  ,;  ").empty());
}

TEST(Rational, ParseDecimal) {
  EXPECT_EQ(*parse_decimal("1,5"), Rational(3, 2));
  EXPECT_EQ(*parse_decimal("225.14"), Rational(11257, 50));
  EXPECT_EQ(*parse_decimal("7"), Rational(7));
  EXPECT_FALSE(parse_decimal("-1"));
  EXPECT_FALSE(parse_decimal("1.2.3"));
  EXPECT_FALSE(parse_decimal(""));
}

TEST(Rational, FromDoubleRecoversShortestDecimal) {
  EXPECT_EQ(rational_from_double(225.14), Rational(11257, 50));
  EXPECT_EQ(rational_from_double(0.1), Rational(1, 10));
  EXPECT_EQ(rational_from_double(28.06), Rational(1403, 50));
  EXPECT_EQ(rational_from_double(0), Rational(0));
  EXPECT_THROW(rational_from_double(std::numeric_limits<double>::infinity()), std::exception);
}

TEST(Rational, ToDoubleIsCorrectlyRounded) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int64_t> num(1, int64_t{1} << 52);
  for (int i = 0; i < 2000; ++i) {
    const int64_t n = num(rng);
    const int64_t d = num(rng);
    // No neighbouring double may be strictly closer to n/d.
    const double got = to_double(Rational(n, d));
    const Rational up = abs(Rational(std::nextafter(got, 1e300)) - Rational(n, d));
    const Rational down = abs(Rational(std::nextafter(got, -1e300)) - Rational(n, d));
    const Rational exact_err = abs(Rational(got) - Rational(n, d));
    ASSERT_LE(exact_err, up);
    ASSERT_LE(exact_err, down);
  }
}
