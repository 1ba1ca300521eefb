#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "nutriset/aggregator.hpp"
#include "nutriset/error.hpp"
#include "nutriset/ingestion.hpp"

namespace nutriset {

enum class Split { Train, Val, Test };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

using SplitAssignment = std::map<std::string, Split>;

/// 64-bit FNV-1a of the id, mixed with the seed through splitmix64. Stable
/// across platforms and standard library implementations.
inline uint64_t keyed_hash(std::string_view id, uint64_t seed) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  uint64_t z = h ^ (seed + 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Ranks ids by keyed hash and cuts the ranking at the ratio boundaries, so
/// each split is within one id of its exact share. Appending ids only moves
/// existing ids whose rank crosses a boundary.
inline SplitAssignment assign_splits(const std::vector<std::string>& recipe_ids, SplitRatios ratios, uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split ratios must be non-negative and sum to 1");
  }
  std::vector<std::pair<uint64_t, const std::string*>> ranked;
  ranked.reserve(recipe_ids.size());
  for (const auto& id : recipe_ids) ranked.emplace_back(keyed_hash(id, seed), &id);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return *a.second < *b.second;
  });

  const auto n = static_cast<double>(ranked.size());
  const auto train_end = static_cast<std::size_t>(std::llround(ratios.train * n));
  const auto val_end = std::max(train_end, static_cast<std::size_t>(std::llround((ratios.train + ratios.val) * n)));

  SplitAssignment out;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    Split s = i < train_end ? Split::Train : (i < val_end ? Split::Val : Split::Test);
    if (!out.emplace(*ranked[i].second, s).second) {
      throw ValidationError("duplicate recipe id " + *ranked[i].second);
    }
  }
  return out;
}

struct VocabEntry {
  std::string food_id;
  std::size_t count = 0;

  bool operator==(const VocabEntry&) const = default;
};

using IngredientVocab = std::vector<VocabEntry>;

/// Top-n food ids by number of recipes containing them; ties by id.
inline IngredientVocab build_vocab(const std::vector<std::set<std::string>>& recipes, std::size_t n) {
  if (n < 1) throw ValidationError("vocab size must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& ids : recipes) {
    for (const auto& id : ids) ++counts[id];
  }
  IngredientVocab vocab;
  vocab.reserve(counts.size());
  for (auto& [id, c] : counts) vocab.push_back({id, c});
  std::stable_sort(vocab.begin(), vocab.end(),
                   [](const VocabEntry& a, const VocabEntry& b) { return a.count > b.count; });
  if (vocab.size() > n) vocab.resize(n);
  return vocab;
}

inline void write_vocab(std::ostream& os, const IngredientVocab& vocab, const FoodDatabase& db) {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const FoodItem* item = db.find(vocab[i].food_id);
    os << (i + 1) << '\t' << vocab[i].food_id << '\t' << (item ? item->name : "") << '\t' << vocab[i].count
       << '\n';
  }
}

struct DatasetSample {
  std::string image_ref;
  std::string recipe_id;
  Split split = Split::Train;
  Basis basis = Basis::PerRecipe;
  NutritionFacts targets;
  std::vector<std::size_t> label_indices;  // sorted positions into the vocab

  bool operator==(const DatasetSample&) const = default;
};

/// Multi-hot label of a recipe as sorted vocab positions.
inline std::vector<std::size_t> label_indices(const IngredientVocab& vocab, const std::set<std::string>& food_ids) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (food_ids.count(vocab[i].food_id)) out.push_back(i);
  }
  return out;
}

/// Per-recipe values that survived matching, basis conversion and outlier
/// filtering.
struct SurvivingRecipe {
  NutritionFacts targets;
  std::set<std::string> food_ids;
};

/// One sample per image of every surviving recipe, sorted by
/// (recipe_id, image_ref).
inline std::vector<DatasetSample> emit_samples(const std::vector<RecipeRaw>& corpus,
                                               const std::map<std::string, SurvivingRecipe>& surviving,
                                               const SplitAssignment& splits, const IngredientVocab& vocab,
                                               Basis basis) {
  std::vector<DatasetSample> samples;
  for (const auto& recipe : corpus) {
    auto it = surviving.find(recipe.id);
    if (it == surviving.end()) continue;
    auto split = splits.find(recipe.id);
    if (split == splits.end()) throw FatalError("recipe " + recipe.id + " has no split");
    const auto labels = label_indices(vocab, it->second.food_ids);
    for (const auto& image : recipe.image_refs) {
      samples.push_back({image, recipe.id, split->second, basis, it->second.targets, labels});
    }
  }
  std::sort(samples.begin(), samples.end(), [](const DatasetSample& a, const DatasetSample& b) {
    if (a.recipe_id != b.recipe_id) return a.recipe_id < b.recipe_id;
    return a.image_ref < b.image_ref;
  });
  return samples;
}

inline nlohmann::json to_json(const DatasetSample& s) {
  nlohmann::json j;
  j["image"] = s.image_ref;
  j["recipe_id"] = s.recipe_id;
  j["split"] = to_string(s.split);
  j["basis"] = to_string(s.basis);
  j["kcal"] = s.targets.kcal;
  j["fat"] = s.targets.fat_g;
  j["protein"] = s.targets.protein_g;
  j["carbs"] = s.targets.carbs_g;
  j["label_indices"] = s.label_indices;
  return j;
}

inline DatasetSample sample_from_json(const nlohmann::json& j) {
  DatasetSample s;
  s.image_ref = j.at("image").get<std::string>();
  s.recipe_id = j.at("recipe_id").get<std::string>();
  auto split = parse_split(j.at("split").get<std::string>());
  auto basis = parse_basis(j.at("basis").get<std::string>());
  if (!split || !basis) throw ValidationError("bad split/basis in dataset record");
  s.split = *split;
  s.basis = *basis;
  s.targets = {j.at("kcal").get<double>(), j.at("fat").get<double>(), j.at("protein").get<double>(),
               j.at("carbs").get<double>()};
  s.label_indices = j.at("label_indices").get<std::vector<std::size_t>>();
  return s;
}

/// Removal counts for one basis. original - all removals == final.
struct StageCounts {
  std::size_t original = 0;
  std::size_t removed_incomplete_match = 0;
  std::size_t removed_no_portion = 0;
  std::size_t removed_no_mass = 0;
  std::size_t removed_kcal_outliers = 0;
  std::size_t final_count = 0;

  bool reconciles() const {
    return original == removed_incomplete_match + removed_no_portion + removed_no_mass + removed_kcal_outliers +
                           final_count;
  }
};

struct IngredientFrequency {
  std::string food_id;
  std::string name;
  std::size_t recipes = 0;
};

struct StatsReport {
  Basis basis = Basis::PerRecipe;
  StageCounts counts;
  std::size_t sample_count = 0;
  double kcal_mean = 0;
  double kcal_std = 0;  // population
  std::size_t outlier_passes = 0;
  double outlier_k = 2.0;
  double gamma = 1.0;
  bool gamma_degenerate = false;
  std::array<std::size_t, 3> split_recipes{};  // train/val/test among final recipes
  std::vector<IngredientFrequency> top_ingredients;
};

inline nlohmann::json to_json(const StatsReport& r) {
  nlohmann::json top = nlohmann::json::array();
  for (const auto& f : r.top_ingredients) {
    top.push_back({{"food_id", f.food_id}, {"name", f.name}, {"recipes", f.recipes}});
  }
  return {
      {"basis", to_string(r.basis)},
      {"counts",
       {{"original", r.counts.original},
        {"removed_incomplete_match", r.counts.removed_incomplete_match},
        {"removed_no_portion", r.counts.removed_no_portion},
        {"removed_no_mass", r.counts.removed_no_mass},
        {"removed_kcal_outliers", r.counts.removed_kcal_outliers},
        {"final", r.counts.final_count}}},
      {"sample_count", r.sample_count},
      {"kcal_mean", r.kcal_mean},
      {"kcal_std", r.kcal_std},
      {"outlier_passes", r.outlier_passes},
      {"outlier_k", r.outlier_k},
      {"std_kind", "population"},
      {"gamma", r.gamma},
      {"gamma_degenerate", r.gamma_degenerate},
      {"split_recipes", {{"train", r.split_recipes[0]}, {"val", r.split_recipes[1]}, {"test", r.split_recipes[2]}}},
      {"top_ingredients", std::move(top)},
  };
}

inline StatsReport stats_from_json(const nlohmann::json& j) {
  StatsReport r;
  auto basis = parse_basis(j.at("basis").get<std::string>());
  if (!basis) throw ValidationError("bad basis in stats record");
  r.basis = *basis;
  const auto& c = j.at("counts");
  r.counts = {c.at("original").get<std::size_t>(),      c.at("removed_incomplete_match").get<std::size_t>(),
              c.at("removed_no_portion").get<std::size_t>(), c.at("removed_no_mass").get<std::size_t>(),
              c.at("removed_kcal_outliers").get<std::size_t>(), c.at("final").get<std::size_t>()};
  r.sample_count = j.at("sample_count").get<std::size_t>();
  r.kcal_mean = j.at("kcal_mean").get<double>();
  r.kcal_std = j.at("kcal_std").get<double>();
  r.outlier_passes = j.at("outlier_passes").get<std::size_t>();
  r.outlier_k = j.at("outlier_k").get<double>();
  r.gamma = j.at("gamma").get<double>();
  r.gamma_degenerate = j.at("gamma_degenerate").get<bool>();
  const auto& s = j.at("split_recipes");
  r.split_recipes = {s.at("train").get<std::size_t>(), s.at("val").get<std::size_t>(),
                     s.at("test").get<std::size_t>()};
  for (const auto& f : j.at("top_ingredients")) {
    r.top_ingredients.push_back(
        {f.at("food_id").get<std::string>(), f.at("name").get<std::string>(), f.at("recipes").get<std::size_t>()});
  }
  return r;
}

}  // namespace nutriset
