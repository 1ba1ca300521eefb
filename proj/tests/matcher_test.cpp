#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nutriset/ingestion.hpp"
#include "nutriset/matcher.hpp"
#include "test_support.hpp"

using namespace nutriset;
using testing_support::fixture;

namespace {

std::string random_word(std::mt19937& rng) {
  static const std::u32string letters = U"abcdeilnorstuzäöüß ";
  std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
  std::uniform_int_distribution<int> len(0, 12);
  std::u32string s;
  for (int n = len(rng); n > 0; --n) s.push_back(letters[pick(rng)]);
  return from_code_points(s);
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

TEST(EditDistance, Examples) {
  EXPECT_DOUBLE_EQ(edit_distance_score("zwiebel", "zwiebel"), 1.0);
  EXPECT_DOUBLE_EQ(edit_distance_score("kitten", "sitting"), 1.0 - 3.0 / 7.0);
  EXPECT_DOUBLE_EQ(edit_distance_score("", ""), 1.0);
  EXPECT_DOUBLE_EQ(edit_distance_score("abc", ""), 0.0);
  // Code points, not bytes.
  EXPECT_DOUBLE_EQ(edit_distance_score("käse", "kase"), 0.75);
}

TEST(EditDistance, Symmetric) {
  std::mt19937 rng(5);
  for (int i = 0; i < 500; ++i) {
    auto a = random_word(rng), b = random_word(rng);
    ASSERT_EQ(edit_distance_score(a, b), edit_distance_score(b, a)) << a << " / " << b;
    const double s = edit_distance_score(a, b);
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, 1.0);
  }
}

TEST(EditDistance, MatchesTextbookDp) {
  std::mt19937 rng(9);
  for (int i = 0; i < 300; ++i) {
    auto a = to_code_points(random_word(rng)), b = to_code_points(random_word(rng));
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t x = 0; x <= a.size(); ++x) d[x][0] = x;
    for (std::size_t y = 0; y <= b.size(); ++y) d[0][y] = y;
    for (std::size_t x = 1; x <= a.size(); ++x)
      for (std::size_t y = 1; y <= b.size(); ++y)
        d[x][y] = std::min({d[x - 1][y] + 1, d[x][y - 1] + 1, d[x - 1][y - 1] + (a[x - 1] != b[y - 1])});
    ASSERT_EQ(levenshtein(a, b), d[a.size()][b.size()]);
  }
}

TEST(AvgWordEmbed, SingleWordIsThatVector) {
  EmbeddingTable t(3);
  t.insert("zwiebel", {0, 3, 4});
  auto r = avg_word_embed("Zwiebel", t);
  ASSERT_TRUE(r.embeddable);
  EXPECT_NEAR(r.vector[0], 0.0, 1e-15);
  EXPECT_NEAR(r.vector[1], 0.6, 1e-15);
  EXPECT_NEAR(r.vector[2], 0.8, 1e-15);
}

TEST(AvgWordEmbed, AntipodalWordsCancel) {
  EmbeddingTable t(2);
  t.insert("hot", {1, 0});
  t.insert("cold", {-1, 0});
  auto r = avg_word_embed("hot cold", t);
  EXPECT_FALSE(r.embeddable);
  EXPECT_EQ(r.vector, (std::vector<double>{0, 0}));
}

TEST(AvgWordEmbed, ThreeWordsOverToyTable) {
  EmbeddingTable t(3);
  t.insert("rote", {1, 0, 0});
  t.insert("zwiebel", {0, 1, 0});
  t.insert("gehackt", {0, 0, 1});
  t.insert("salz", {1, 1, 0});
  t.insert("butter", {0, 1, 1});
  // mean of e1, e2, e3 = (1,1,1)/3; renormalized to (1,1,1)/sqrt 3. "xyz" is ignored.
  auto r = avg_word_embed("Rote Zwiebel, gehackt xyz", t);
  ASSERT_TRUE(r.embeddable);
  for (double v : r.vector) EXPECT_NEAR(v, 1 / std::sqrt(3.0), 1e-15);
  EXPECT_FALSE(avg_word_embed("nothing known", t).embeddable);
}

TEST(EmbeddingTable, RejectsBadRows) {
  EmbeddingTable t(2);
  EXPECT_THROW(t.insert("a", {1, 2, 3}), FatalError);
  EXPECT_THROW(t.insert("a", {0, 0}), FatalError);
  t.insert("a", {3, 4});
  EXPECT_THROW(t.insert("A", {1, 0}), FatalError);
  EXPECT_NEAR((*t.find("a"))[0], 0.6, 1e-15);
}

TEST(EmbeddingTable, LoadChecksHeaderCount) {
  testing_support::TempDir tmp;
  EXPECT_THROW(load_embeddings(tmp.write("e.txt", "3 2\na\t1 0\nb\t0 1\n")), FatalError);
  auto t = load_embeddings(tmp.write("f.txt", "2 2\na\t1 0\nb\t0 1\n"));
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.dim(), 2u);
}

TEST(BuildIndex, FixtureRowsAreUnitNorm) {
  auto db = load_food_db(fixture("food_db.jsonl")).value;
  auto table = std::make_shared<const EmbeddingTable>(load_embeddings(fixture("embeddings.txt")));
  auto index = build_index(db, SimilarityProvider::precomputed(table));
  ASSERT_EQ(index.rows(), 200u);
  for (std::size_t i = 0; i < index.rows(); ++i) EXPECT_NEAR(norm2(index.row(i)), 1.0, 1e-12);
  EXPECT_TRUE(std::is_sorted(index.food_ids.begin(), index.food_ids.end()));
  auto again = build_index(db, SimilarityProvider::precomputed(table));
  EXPECT_TRUE(index == again);
}

TEST(BuildIndex, EmptyDatabase) {
  auto index = build_index(FoodDatabase{}, SimilarityProvider::edit_distance());
  EXPECT_EQ(index.rows(), 0u);
  EXPECT_TRUE(candidates(index, "salz", 0.84).empty());
}

TEST(BuildIndex, MissingPrecomputedEmbeddingIsFatal) {
  FoodDatabase db;
  db.items["x"] = FoodItem{"x", "Unbekannt", 1, 1, 1, 1, {}, 0};
  auto table = std::make_shared<EmbeddingTable>(2);
  table->insert("salz", {1, 0});
  EXPECT_THROW(build_index(db, SimilarityProvider::precomputed(table)), FatalError);
  // The word-vector provider falls back to a zero row instead.
  auto index = build_index(db, SimilarityProvider::word_vectors(table));
  EXPECT_EQ(index.vectors, (std::vector<double>{0, 0}));
}

TEST(Candidates, SelfMatchComesFirst) {
  auto db = load_food_db(fixture("food_db.jsonl")).value;
  auto table = std::make_shared<const EmbeddingTable>(load_embeddings(fixture("embeddings.txt")));
  auto index = build_index(db, SimilarityProvider::precomputed(table));
  for (const auto& [id, item] : db.items) {
    auto c = candidates(index, item.name, kDefaultMatchThreshold);
    ASSERT_FALSE(c.empty()) << item.name;
    EXPECT_EQ(c.front().food_id, id);
    EXPECT_GE(c.front().score, 0.999);
  }
}

TEST(Candidates, StrictThreshold) {
  FoodDatabase db;
  db.items["a"] = FoodItem{"a", "A", 1, 1, 1, 1, {}, 0};
  db.items["b"] = FoodItem{"b", "B", 1, 1, 1, 1, {}, 0};
  MatchIndex index{SimilarityProvider::edit_distance(), {"a", "b"}, {"a", "b"}, 2, {0.84, std::sqrt(1 - 0.84 * 0.84), 1, 0}};
  const std::vector<double> q{1, 0};
  auto c = candidates_for_vector(index, q, 0.84);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].food_id, "b");
  EXPECT_EQ(candidates_for_vector(index, q, 0.8399999).size(), 2u);
}

TEST(Candidates, TiesBrokenById) {
  MatchIndex index{SimilarityProvider::edit_distance(), {"b", "a", "c"}, {"", "", ""}, 1, {1, 1, 1}};
  const std::vector<double> q{1};
  auto c = candidates_for_vector(index, q, 0.5);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].food_id, "a");
  EXPECT_EQ(c[1].food_id, "b");
  EXPECT_EQ(c[2].food_id, "c");
}

TEST(Candidates, ThresholdOutOfRange) {
  auto index = build_index(FoodDatabase{}, SimilarityProvider::edit_distance());
  EXPECT_THROW(candidates(index, "x", 1.5), ValidationError);
  EXPECT_THROW(candidates(index, "x", -0.1), ValidationError);
}

TEST(Candidates, EditDistanceProvider) {
  FoodDatabase db;
  db.items["1"] = FoodItem{"1", "Zwiebel", 1, 1, 1, 1, {}, 0};
  db.items["2"] = FoodItem{"2", "Zwiebeln", 1, 1, 1, 1, {}, 0};
  db.items["3"] = FoodItem{"3", "Zucker", 1, 1, 1, 1, {}, 0};
  auto index = build_index(db, SimilarityProvider::edit_distance());
  auto c = candidates(index, "ZWIEBEL", 0.84);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (Candidate{"1", 1.0}));
  EXPECT_EQ(c[1].food_id, "2");
  EXPECT_DOUBLE_EQ(c[1].score, 1.0 - 1.0 / 8.0);
}
