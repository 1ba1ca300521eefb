#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nutriset/aggregator.hpp"

using namespace nutriset;

namespace {

FoodDatabase make_db() {
  FoodDatabase db;
  db.items["a"] = FoodItem{"a", "A", 250, 10, 5, 30, {}, 0};
  db.items["b"] = FoodItem{"b", "B", Rational(2806, 100), Rational(1, 4), Rational(5, 4), Rational(491, 100), {}, 0};
  db.items["s"] = FoodItem{"s", "Salz", 0, 0, 0, 0, {}, 0};
  return db;
}

MatchedIngredient m(const std::string& id, Rational grams) { return {id, 1.0, std::move(grams), false}; }

ExactNutrition exact(const RecipeNutrition& rn, Basis b) { return std::get<ExactNutrition>(to_basis(rn, b)); }

// Naive oracle: remove everything beyond k sigma, repeat; no sorting tricks.
std::set<std::string> brute_force_filter(const std::vector<std::pair<std::string, double>>& values, double k) {
  std::vector<std::pair<std::string, double>> kept = values;
  while (true) {
    double mean = 0;
    for (auto& [id, v] : kept) mean += v;
    mean /= kept.size();
    double var = 0;
    for (auto& [id, v] : kept) var += (v - mean) * (v - mean);
    const double sigma = std::sqrt(var / kept.size());
    std::vector<std::pair<std::string, double>> next;
    for (auto& e : kept)
      if (!(std::abs(e.second - mean) > k * sigma)) next.push_back(e);
    if (next.size() == kept.size()) break;
    kept = next;
  }
  std::set<std::string> ids;
  for (auto& [id, v] : kept) ids.insert(id);
  return ids;
}

}  // namespace

TEST(RecipeTotals, SingleLine) {
  auto rn = recipe_totals("r", {m("a", 200)}, make_db(), 2);
  EXPECT_EQ(rn.totals.kcal, 500);
  EXPECT_EQ(rn.totals.fat_g, 20);
  EXPECT_EQ(rn.totals.protein_g, 10);
  EXPECT_EQ(rn.totals.carbs_g, 60);
  EXPECT_EQ(rn.total_mass_g, 200);
}

TEST(RecipeTotals, Additive) {
  const auto db = make_db();
  auto one = recipe_totals("r", {m("a", Rational(7, 3))}, db, 1);
  auto two = recipe_totals("r", {m("b", Rational(78799, 200))}, db, 1);
  auto both = recipe_totals("r", {m("a", Rational(7, 3)), m("b", Rational(78799, 200))}, db, 1);
  EXPECT_EQ(both.totals, one.totals + two.totals);
  EXPECT_EQ(both.total_mass_g, one.total_mass_g + two.total_mass_g);
}

TEST(RecipeTotals, HandComputedFiveLines) {
  // 150 g a, 80 g b, salt by taste, 3/2 kg a, 1/3 g b.
  auto rn = recipe_totals("r",
                          {m("a", 150), m("b", 80), MatchedIngredient{"s", 1.0, 0, true}, m("a", 1500),
                           m("b", Rational(1, 3))},
                          make_db(), 4);
  // kcal: 1650 g x 2.5 + (80 + 1/3) g x 0.2806 = 4125 + 241/3 x 1403/5000
  EXPECT_EQ(rn.totals.kcal, Rational(4125) + Rational(241, 3) * Rational(1403, 5000));
  EXPECT_EQ(rn.totals.fat_g, Rational(165) + Rational(241, 3) * Rational(1, 400));
  EXPECT_EQ(rn.total_mass_g, Rational(1730) + Rational(1, 3));
}

TEST(RecipeTotals, UnknownFoodIsFatal) {
  EXPECT_THROW(recipe_totals("r", {m("zzz", 1)}, make_db(), 1), FatalError);
}

TEST(ToBasis, Examples) {
  RecipeNutrition rn{"r", {1000, 10, 20, 30}, 500, 4};
  EXPECT_EQ(exact(rn, Basis::Per100g).kcal, 200);
  EXPECT_EQ(exact(rn, Basis::PerRecipe).kcal, 1000);
  rn.totals.kcal = 1200;
  EXPECT_EQ(exact(rn, Basis::PerPortion).kcal, 300);
  rn.portions.reset();
  EXPECT_EQ(std::get<BasisReject>(to_basis(rn, Basis::PerPortion)), BasisReject::NoPortionInfo);
  rn.total_mass_g = 0;
  EXPECT_EQ(std::get<BasisReject>(to_basis(rn, Basis::Per100g)), BasisReject::NoMass);
}

TEST(ToBasis, ConsistentAcrossBases) {
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> d(1, 100000);
  for (int i = 0; i < 200; ++i) {
    RecipeNutrition rn{"r", {Rational(d(rng), 7), Rational(d(rng), 3), d(rng), d(rng)}, Rational(d(rng), 11),
                       d(rng) % 12 + 1};
    auto per_recipe = exact(rn, Basis::PerRecipe);
    EXPECT_EQ(exact(rn, Basis::PerPortion).scaled(Rational(*rn.portions)), per_recipe);
    EXPECT_EQ(exact(rn, Basis::Per100g).scaled(rn.total_mass_g / 100), per_recipe);
  }
}

TEST(FilterOutliers, WorkedExample) {
  auto r = filter_outliers({{"a", 100}, {"b", 110}, {"c", 90}, {"d", 95}, {"e", 105}, {"f", 5000}}, 2.0);
  EXPECT_EQ(r.removed, (std::vector<std::string>{"f"}));
  EXPECT_EQ(r.kept.size(), 5u);
  EXPECT_EQ(r.passes, 2u);
}

TEST(FilterOutliers, AllEqual) {
  auto r = filter_outliers({{"a", 7}, {"b", 7}, {"c", 7}}, 2.0);
  EXPECT_EQ(r.kept.size(), 3u);
  EXPECT_TRUE(r.removed.empty());
  EXPECT_EQ(r.passes, 1u);
}

TEST(FilterOutliers, Errors) {
  EXPECT_THROW(filter_outliers({}, 2.0), ValidationError);
  EXPECT_THROW(filter_outliers({{"a", 1}}, 0.0), ValidationError);
  EXPECT_THROW(filter_outliers({{"a", 1}, {"b", 2}}, -1), ValidationError);
}

TEST(FilterOutliers, TinyKRemovesEverythingIsDegenerate) {
  EXPECT_THROW(filter_outliers({{"a", 0}, {"b", 10}}, 0.5), ValidationError);
}

TEST(FilterOutliers, OrderIndependentAndFixedPoint) {
  std::mt19937 rng(4);
  std::lognormal_distribution<double> dist(6, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<std::string, double>> v;
    for (int i = 0; i < 50; ++i) v.emplace_back("r" + std::to_string(i), dist(rng));
    auto first = filter_outliers(v, 2.0);
    std::shuffle(v.begin(), v.end(), rng);
    auto second = filter_outliers(v, 2.0);
    ASSERT_EQ(first.kept, second.kept);
    ASSERT_EQ(first.removed, second.removed);
    std::vector<std::pair<std::string, double>> survivors;
    for (auto& e : v)
      if (first.kept.count(e.first)) survivors.push_back(e);
    auto again = filter_outliers(survivors, 2.0);
    ASSERT_TRUE(again.removed.empty());
    ASSERT_EQ(again.passes, 1u);
  }
}

TEST(FilterOutliers, MatchesBruteForce) {
  std::mt19937 rng(12);
  std::normal_distribution<double> normal(500, 120);
  std::uniform_real_distribution<double> spike(2000, 20000);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::pair<std::string, double>> v;
    for (int i = 0; i < 40; ++i) v.emplace_back("r" + std::to_string(i), i % 13 == 0 ? spike(rng) : normal(rng));
    ASSERT_EQ(filter_outliers(v, 2.0).kept, brute_force_filter(v, 2.0));
  }
}

TEST(Basis, RoundTripNames) {
  for (Basis b : {Basis::PerRecipe, Basis::PerPortion, Basis::Per100g}) EXPECT_EQ(parse_basis(to_string(b)), b);
  EXPECT_EQ(parse_basis("per100g"), Basis::Per100g);
  EXPECT_EQ(parse_basis("perportion"), Basis::PerPortion);
  EXPECT_FALSE(parse_basis("kg"));
}

TEST(Atwater, FlagsLargeDeviation) {
  RecipeNutrition ok{"ok", {900, 20, 50, 130}, 100, 1};  // 4*50 + 4*130 + 9*20 = 900
  EXPECT_FALSE(atwater_check(ok));
  RecipeNutrition bad{"bad", {2000, 20, 50, 130}, 100, 1};
  auto w = atwater_check(bad);
  ASSERT_TRUE(w);
  EXPECT_EQ(w->recipe_id, "bad");
  EXPECT_DOUBLE_EQ(w->estimate, 900);
}
