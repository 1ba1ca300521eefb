#include <algorithm>

#include <gtest/gtest.h>

#include "nutriset/ingestion.hpp"
#include "test_support.hpp"

using namespace nutriset;
using testing_support::fixture;
using testing_support::TempDir;

namespace {

const char* kRecipe = R"({"id":"%s","title":"T","portions":2,"ingredients":[{"amount":"1","unit":"","name":"Ei"}],"images":["a.jpg"],"kcal_user":null,"meta":{}})";

std::string recipe_line(const std::string& id) {
  std::string s = kRecipe;
  s.replace(s.find("%s"), 2, id);
  return s + "\n";
}

std::string food_line(const std::string& id, const std::string& name, int popularity, double kcal = 100) {
  nlohmann::json j = {{"id", id},
                      {"name", name},
                      {"per_100g", {{"kcal", kcal}, {"fat", 1}, {"protein", 2}, {"carbs", 3}}},
                      {"quantities", nlohmann::json::array()},
                      {"popularity", popularity}};
  return j.dump() + "\n";
}

}  // namespace

TEST(LoadRecipes, ThreeValidRecords) {
  TempDir tmp;
  auto p = tmp.write("r.jsonl", recipe_line("a") + recipe_line("b") + recipe_line("c"));
  auto loaded = load_recipes(p);
  EXPECT_EQ(loaded.value.size(), 3u);
  EXPECT_TRUE(loaded.rejects.empty());
}

TEST(LoadRecipes, MissingIngredientsIsRejected) {
  TempDir tmp;
  auto p = tmp.write("r.jsonl", R"({"id":"a","title":"T","portions":2,"images":[],"kcal_user":null,"meta":{}})" "\n");
  auto loaded = load_recipes(p);
  EXPECT_TRUE(loaded.value.empty());
  ASSERT_EQ(loaded.rejects.size(), 1u);
  EXPECT_EQ(loaded.rejects.rejects[0].reason, "missing field");
  EXPECT_EQ(loaded.rejects.rejects[0].line_number, 1u);
}

TEST(LoadRecipes, MalformedDuplicateAndInvalid) {
  TempDir tmp;
  auto p = tmp.write("r.jsonl", recipe_line("a") + "{not json\n" + recipe_line("a") +
                                    R"({"id":"z","title":"T","portions":"two","ingredients":[],"images":[],"kcal_user":null,"meta":{}})"
                                    "\n");
  auto loaded = load_recipes(p);
  ASSERT_EQ(loaded.value.size(), 1u);
  ASSERT_EQ(loaded.rejects.size(), 3u);
  EXPECT_EQ(loaded.rejects.rejects[0].reason, "malformed record");
  EXPECT_EQ(loaded.rejects.rejects[0].line_number, 2u);
  EXPECT_EQ(loaded.rejects.rejects[1].reason, "duplicate id");
  EXPECT_EQ(loaded.rejects.rejects[2].reason, "invalid field");
}

TEST(LoadRecipes, FixtureWithTwoMalformed) {
  auto loaded = load_recipes(fixture("recipes_rejects.jsonl"));
  EXPECT_EQ(loaded.value.size(), 48u);
  EXPECT_EQ(loaded.rejects.size(), 2u);
}

TEST(LoadRecipes, MissingFileIsFatal) { EXPECT_THROW(load_recipes("/nonexistent/recipes.jsonl"), FatalError); }

TEST(LoadRecipes, RoundTrip) {
  auto loaded = load_recipes(fixture("recipes.jsonl"));
  ASSERT_EQ(loaded.value.size(), 50u);
  for (const auto& r : loaded.value) EXPECT_EQ(recipe_from_json(to_json(r)), r);
}

TEST(LoadFoodDb, StoresValuesVerbatim) {
  TempDir tmp;
  auto p = tmp.write("f.jsonl", R"({"id":"x","name":"X","per_100g":{"kcal":250,"fat":10,"protein":5,"carbs":30},"quantities":[{"unit":"cup","grams":225.14}],"popularity":3})" "\n");
  auto loaded = load_food_db(p);
  ASSERT_EQ(loaded.value.size(), 1u);
  const FoodItem& f = *loaded.value.find("x");
  EXPECT_EQ(f.kcal_per_100g, 250);
  EXPECT_EQ(f.fat_per_100g, 10);
  EXPECT_EQ(f.protein_per_100g, 5);
  EXPECT_EQ(f.carbs_per_100g, 30);
  ASSERT_EQ(f.quantities.size(), 1u);
  EXPECT_EQ(f.quantities[0].grams, Rational(11257, 50));
  EXPECT_EQ(food_item_from_json(to_json(f)), f);
}

TEST(LoadFoodDb, NegativeKcalIsInvariantViolation) {
  TempDir tmp;
  auto p = tmp.write("f.jsonl", food_line("x", "X", 1, -5));
  auto loaded = load_food_db(p);
  EXPECT_EQ(loaded.value.size(), 0u);
  ASSERT_EQ(loaded.rejects.size(), 1u);
  EXPECT_EQ(loaded.rejects.rejects[0].reason, "invariant violation");
}

TEST(LoadFoodDb, Fixture) {
  auto loaded = load_food_db(fixture("food_db.jsonl"));
  EXPECT_EQ(loaded.value.size(), 200u);
  EXPECT_TRUE(loaded.rejects.empty());
}

TEST(FilterFoodDb, DedupKeepsMorePopular) {
  TempDir tmp;
  auto db = load_food_db(tmp.write("f.jsonl", food_line("a", "Salz", 5) + food_line("b", "salz", 9))).value;
  auto out = filter_food_db(db, 10);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.items.begin()->second.popularity, 9);
}

TEST(FilterFoodDb, TopByPopularityTiesByLowerId) {
  TempDir tmp;
  auto db = load_food_db(tmp.write("f.jsonl", food_line("a", "A", 9) + food_line("b", "B", 7) + food_line("c", "C", 7) +
                                                  food_line("d", "D", 2) + food_line("e", "E", 1)))
                .value;
  auto out = filter_food_db(db, 3);
  std::vector<std::string> ids;
  for (const auto* item : by_popularity(out)) ids.push_back(item->id);
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_THROW(filter_food_db(db, 0), ValidationError);
}

TEST(FilterFoodDb, FixtureMatchesFullSort) {
  auto db = load_food_db(fixture("food_db.jsonl")).value;
  auto out = filter_food_db(db, 150);
  ASSERT_EQ(out.size(), 150u);

  // Oracle: the fixture has unique names, so a full sort by the ranking rule.
  std::vector<const FoodItem*> all;
  for (const auto& [id, item] : db.items) all.push_back(&item);
  std::sort(all.begin(), all.end(), [](const FoodItem* a, const FoodItem* b) {
    return a->popularity != b->popularity ? a->popularity > b->popularity : a->id < b->id;
  });
  all.resize(150);
  auto got = by_popularity(out);
  ASSERT_EQ(got.size(), all.size());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(got[i]->id, all[i]->id);
}
