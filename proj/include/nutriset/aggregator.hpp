#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nutriset/amount_resolver.hpp"
#include "nutriset/error.hpp"
#include "nutriset/ingestion.hpp"
#include "nutriset/rational.hpp"

namespace nutriset {

/// kcal plus macronutrient grams. Instantiated over Rational inside the
/// pipeline and over double at the dataset/evaluation boundary.
template <typename T>
struct BasicNutrition {
  T kcal{};
  T fat_g{};
  T protein_g{};
  T carbs_g{};

  BasicNutrition& operator+=(const BasicNutrition& o) {
    kcal += o.kcal;
    fat_g += o.fat_g;
    protein_g += o.protein_g;
    carbs_g += o.carbs_g;
    return *this;
  }
  friend BasicNutrition operator+(BasicNutrition a, const BasicNutrition& b) { return a += b; }

  template <typename S>
  BasicNutrition scaled(const S& factor) const {
    return {kcal * factor, fat_g * factor, protein_g * factor, carbs_g * factor};
  }

  bool operator==(const BasicNutrition&) const = default;
};

using ExactNutrition = BasicNutrition<Rational>;
using NutritionFacts = BasicNutrition<double>;

inline NutritionFacts to_double(const ExactNutrition& n) {
  return {to_double(n.kcal), to_double(n.fat_g), to_double(n.protein_g), to_double(n.carbs_g)};
}

struct RecipeNutrition {
  std::string recipe_id;
  ExactNutrition totals;
  Rational total_mass_g = 0;
  std::optional<int64_t> portions;
};

enum class Basis { PerRecipe, PerPortion, Per100g };

inline const char* to_string(Basis b) {
  switch (b) {
    case Basis::PerRecipe: return "recipe";
    case Basis::PerPortion: return "portion";
    case Basis::Per100g: return "100g";
  }
  return "?";
}

inline std::optional<Basis> parse_basis(std::string_view s) {
  if (s == "recipe" || s == "perrecipe") return Basis::PerRecipe;
  if (s == "portion" || s == "perportion") return Basis::PerPortion;
  if (s == "100g" || s == "per100g") return Basis::Per100g;
  return std::nullopt;
}

/// Sum of grams/100 x per-100g values over the matched lines. By-taste lines
/// weigh 0 g and so contribute nothing.
inline RecipeNutrition recipe_totals(const std::string& recipe_id, const std::vector<MatchedIngredient>& matched,
                                     const FoodDatabase& db, std::optional<int64_t> portions = std::nullopt) {
  RecipeNutrition rn{recipe_id, {}, 0, portions};
  for (const auto& m : matched) {
    const FoodItem* item = db.find(m.food_id);
    if (!item) throw FatalError("recipe " + recipe_id + ": food id '" + m.food_id + "' not in database");
    if (m.by_taste) continue;
    const Rational share = m.grams / 100;
    rn.totals += ExactNutrition{item->kcal_per_100g, item->fat_per_100g, item->protein_per_100g,
                                item->carbs_per_100g}
                     .scaled(share);
    rn.total_mass_g += m.grams;
  }
  return rn;
}

enum class BasisReject { NoPortionInfo, NoMass };

inline const char* to_string(BasisReject r) {
  return r == BasisReject::NoPortionInfo ? "no portion info" : "no mass";
}

inline std::variant<ExactNutrition, BasisReject> to_basis(const RecipeNutrition& rn, Basis basis) {
  switch (basis) {
    case Basis::PerRecipe:
      return rn.totals;
    case Basis::PerPortion:
      if (!rn.portions) return BasisReject::NoPortionInfo;
      return rn.totals.scaled(Rational(1, *rn.portions));
    case Basis::Per100g:
      if (rn.total_mass_g <= 0) return BasisReject::NoMass;
      return rn.totals.scaled(Rational(100) / rn.total_mass_g);
  }
  throw FatalError("unknown basis");
}

struct OutlierResult {
  std::set<std::string> kept;
  std::vector<std::string> removed;  // in removal order, sorted within a pass
  std::size_t passes = 0;            // including the final pass that removes nothing
};

/// Iterative k-sigma filter: drop every value with |v - mean| > k * sigma
/// (population sigma of the currently kept values) and repeat until a pass
/// removes nothing.
///
/// Values are processed in (value, id) order so the result does not depend on
/// input order, including floating-point summation order.
inline OutlierResult filter_outliers(std::vector<std::pair<std::string, double>> values, double k) {
  if (!(k > 0)) throw ValidationError("outlier k must be > 0");
  if (values.empty()) throw ValidationError("filter_outliers needs at least one value");
  std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });

  OutlierResult result;
  std::vector<std::pair<std::string, double>> kept = std::move(values);
  while (true) {
    ++result.passes;
    const auto n = static_cast<double>(kept.size());
    double sum = 0;
    for (const auto& [id, v] : kept) sum += v;
    const double mean = sum / n;
    double sq = 0;
    for (const auto& [id, v] : kept) sq += (v - mean) * (v - mean);
    const double bound = k * std::sqrt(sq / n);

    std::vector<std::pair<std::string, double>> next;
    std::vector<std::string> removed_now;
    for (const auto& entry : kept) {
      if (std::abs(entry.second - mean) > bound) {
        removed_now.push_back(entry.first);
      } else {
        next.push_back(entry);
      }
    }
    if (removed_now.empty()) break;
    if (next.empty()) throw ValidationError("degenerate distribution: every value is an outlier");
    std::sort(removed_now.begin(), removed_now.end());
    result.removed.insert(result.removed.end(), removed_now.begin(), removed_now.end());
    kept = std::move(next);
  }
  for (auto& [id, v] : kept) result.kept.insert(id);
  return result;
}

struct AtwaterWarning {
  std::string recipe_id;
  double kcal = 0;
  double estimate = 0;  // 4 protein + 4 carbs + 9 fat
};

/// Flags totals whose database kcal deviates more than `tolerance` (relative)
/// from the 4/4/9 Atwater estimate. Only checked when every macro is > 0.
inline std::optional<AtwaterWarning> atwater_check(const RecipeNutrition& rn, double tolerance = 0.25) {
  const NutritionFacts t = to_double(rn.totals);
  if (!(t.fat_g > 0 && t.protein_g > 0 && t.carbs_g > 0)) return std::nullopt;
  const double estimate = 4 * t.protein_g + 4 * t.carbs_g + 9 * t.fat_g;
  if (std::abs(t.kcal - estimate) > tolerance * estimate) {
    return AtwaterWarning{rn.recipe_id, t.kcal, estimate};
  }
  return std::nullopt;
}

inline void write_warnings(std::ostream& os, const std::vector<AtwaterWarning>& warnings) {
  for (const auto& w : warnings) {
    os << w.recipe_id << "\tatwater\t" << w.kcal << '\t' << w.estimate << '\n';
  }
}

}  // namespace nutriset
