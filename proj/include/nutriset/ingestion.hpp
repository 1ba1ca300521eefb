#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "nutriset/error.hpp"
#include "nutriset/rational.hpp"
#include "nutriset/text.hpp"

namespace nutriset {

using json = nlohmann::json;

struct IngredientLine {
  std::string amount_text;
  std::string unit_text;
  std::string name_text;

  bool operator==(const IngredientLine&) const = default;
};

struct RecipeRaw {
  std::string id;
  std::string title;
  std::optional<int64_t> portions;
  std::vector<IngredientLine> ingredient_lines;
  std::vector<std::string> image_refs;
  std::optional<double> user_kcal_per_portion;
  std::map<std::string, std::string> metadata;

  bool operator==(const RecipeRaw&) const = default;
};

struct QuantityConversion {
  std::string unit_name;
  Rational grams;

  bool operator==(const QuantityConversion&) const = default;
};

/// Per-100g values are exact rationals of the decimal given in the file.
struct FoodItem {
  std::string id;
  std::string name;
  Rational kcal_per_100g;
  Rational fat_per_100g;
  Rational protein_per_100g;
  Rational carbs_per_100g;
  std::vector<QuantityConversion> quantities;
  int64_t popularity = 0;

  bool operator==(const FoodItem&) const = default;
};

/// Items keyed (and therefore iterated) by id ascending.
struct FoodDatabase {
  std::map<std::string, FoodItem> items;

  const FoodItem* find(const std::string& id) const {
    auto it = items.find(id);
    return it == items.end() ? nullptr : &it->second;
  }
  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

namespace reject_reason {
inline constexpr const char* kMalformed = "malformed record";
inline constexpr const char* kMissingField = "missing field";
inline constexpr const char* kInvalidField = "invalid field";
inline constexpr const char* kDuplicateId = "duplicate id";
inline constexpr const char* kInvariant = "invariant violation";
}  // namespace reject_reason

struct Reject {
  std::size_t line_number = 0;  // 1-based
  std::string reason;
  std::string detail;
};

struct RejectReport {
  std::vector<Reject> rejects;

  bool empty() const { return rejects.empty(); }
  std::size_t size() const { return rejects.size(); }

  /// One line per reject: line number, tab, reason code, tab, detail.
  void write(std::ostream& os) const {
    for (const auto& r : rejects) {
      os << r.line_number << '\t' << r.reason << '\t' << r.detail << '\n';
    }
  }
};

template <typename T>
struct Loaded {
  T value;
  RejectReport rejects;
};

namespace detail {

// Thrown while decoding a single record; converted into a Reject.
struct RecordError {
  std::string reason;
  std::string detail;
};

inline const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw RecordError{reject_reason::kMissingField, key};
  }
  return *it;
}

inline std::string require_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) throw RecordError{reject_reason::kInvalidField, key};
  return v.get<std::string>();
}

inline double require_number(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_number()) throw RecordError{reject_reason::kInvalidField, key};
  double d = v.get<double>();
  if (!std::isfinite(d)) throw RecordError{reject_reason::kInvariant, key};
  return d;
}

inline Rational require_non_negative(const json& obj, const char* key) {
  double d = require_number(obj, key);
  if (d < 0) throw RecordError{reject_reason::kInvariant, std::string(key) + " < 0"};
  return rational_from_double(d);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FatalError("cannot read " + path.string());
  }
  return in;
}

// Drives the per-line decode loop shared by both record types: blank lines
// are skipped, decode failures and duplicate ids become rejects.
template <typename T, typename Decode, typename Accept>
RejectReport read_records(const std::filesystem::path& path, Decode decode, Accept accept) {
  std::ifstream in = open_input(path);
  RejectReport report;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (record.is_discarded() || !record.is_object()) {
      report.rejects.push_back({line_number, reject_reason::kMalformed, "not a JSON object"});
      continue;
    }
    try {
      T value = decode(record);
      if (!seen.insert(value.id).second) {
        report.rejects.push_back({line_number, reject_reason::kDuplicateId, value.id});
        continue;
      }
      accept(std::move(value));
    } catch (const RecordError& e) {
      report.rejects.push_back({line_number, e.reason, e.detail});
    } catch (const json::exception& e) {
      report.rejects.push_back({line_number, reject_reason::kInvalidField, e.what()});
    } catch (const ValidationError& e) {
      report.rejects.push_back({line_number, reject_reason::kInvalidField, e.what()});
    }
  }
  if (in.bad()) {
    throw FatalError("read error on " + path.string());
  }
  return report;
}

}  // namespace detail

inline RecipeRaw recipe_from_json(const json& j) {
  using detail::RecordError;
  RecipeRaw r;
  r.id = detail::require_string(j, "id");
  if (r.id.empty()) throw RecordError{reject_reason::kInvariant, "empty id"};
  r.title = detail::require_string(j, "title");

  const json& portions = detail::require(j, "portions");
  if (!portions.is_null()) {
    if (!portions.is_number_integer()) throw RecordError{reject_reason::kInvalidField, "portions"};
    auto p = portions.get<int64_t>();
    if (p < 1) throw RecordError{reject_reason::kInvariant, "portions < 1"};
    r.portions = p;
  }

  const json& ingredients = detail::require(j, "ingredients");
  if (!ingredients.is_array()) throw RecordError{reject_reason::kInvalidField, "ingredients"};
  for (const json& ing : ingredients) {
    if (!ing.is_object()) throw RecordError{reject_reason::kInvalidField, "ingredients"};
    IngredientLine line{detail::require_string(ing, "amount"), detail::require_string(ing, "unit"),
                        detail::require_string(ing, "name")};
    if (normalize_text(line.name_text).empty()) {
      throw RecordError{reject_reason::kInvariant, "empty ingredient name"};
    }
    r.ingredient_lines.push_back(std::move(line));
  }
  if (r.ingredient_lines.empty()) throw RecordError{reject_reason::kInvariant, "no ingredients"};

  const json& images = detail::require(j, "images");
  if (!images.is_array()) throw RecordError{reject_reason::kInvalidField, "images"};
  for (const json& img : images) {
    if (!img.is_string()) throw RecordError{reject_reason::kInvalidField, "images"};
    r.image_refs.push_back(img.get<std::string>());
  }

  const json& kcal = detail::require(j, "kcal_user");
  if (!kcal.is_null()) {
    double v = detail::require_number(j, "kcal_user");
    if (v < 0) throw RecordError{reject_reason::kInvariant, "kcal_user < 0"};
    r.user_kcal_per_portion = v;
  }

  const json& meta = detail::require(j, "meta");
  if (!meta.is_object()) throw RecordError{reject_reason::kInvalidField, "meta"};
  for (const auto& [k, v] : meta.items()) {
    if (!v.is_string()) throw RecordError{reject_reason::kInvalidField, "meta." + k};
    r.metadata.emplace(k, v.get<std::string>());
  }
  return r;
}

inline json to_json(const RecipeRaw& r) {
  json ingredients = json::array();
  for (const auto& line : r.ingredient_lines) {
    ingredients.push_back({{"amount", line.amount_text}, {"unit", line.unit_text}, {"name", line.name_text}});
  }
  json j;
  j["id"] = r.id;
  j["title"] = r.title;
  j["portions"] = r.portions ? json(*r.portions) : json(nullptr);
  j["ingredients"] = std::move(ingredients);
  j["images"] = r.image_refs;
  j["kcal_user"] = r.user_kcal_per_portion ? json(*r.user_kcal_per_portion) : json(nullptr);
  j["meta"] = r.metadata;
  return j;
}

inline FoodItem food_item_from_json(const json& j) {
  using detail::RecordError;
  FoodItem f;
  f.id = detail::require_string(j, "id");
  if (f.id.empty()) throw RecordError{reject_reason::kInvariant, "empty id"};
  f.name = detail::require_string(j, "name");
  if (normalize_text(f.name).empty()) throw RecordError{reject_reason::kInvariant, "empty name"};

  const json& per = detail::require(j, "per_100g");
  if (!per.is_object()) throw RecordError{reject_reason::kInvalidField, "per_100g"};
  f.kcal_per_100g = detail::require_non_negative(per, "kcal");
  f.fat_per_100g = detail::require_non_negative(per, "fat");
  f.protein_per_100g = detail::require_non_negative(per, "protein");
  f.carbs_per_100g = detail::require_non_negative(per, "carbs");

  const json& quantities = detail::require(j, "quantities");
  if (!quantities.is_array()) throw RecordError{reject_reason::kInvalidField, "quantities"};
  std::set<std::string> units;
  for (const json& q : quantities) {
    if (!q.is_object()) throw RecordError{reject_reason::kInvalidField, "quantities"};
    QuantityConversion conv{detail::require_string(q, "unit"), 0};
    double grams = detail::require_number(q, "grams");
    if (grams <= 0) throw RecordError{reject_reason::kInvariant, "quantity grams <= 0"};
    conv.grams = rational_from_double(grams);
    if (!units.insert(normalize_text(conv.unit_name)).second) {
      throw RecordError{reject_reason::kInvariant, "duplicate unit " + conv.unit_name};
    }
    f.quantities.push_back(std::move(conv));
  }

  const json& pop = detail::require(j, "popularity");
  if (!pop.is_number_integer()) throw RecordError{reject_reason::kInvalidField, "popularity"};
  f.popularity = pop.get<int64_t>();
  if (f.popularity < 0) throw RecordError{reject_reason::kInvariant, "popularity < 0"};
  return f;
}

inline json to_json(const FoodItem& f) {
  json quantities = json::array();
  for (const auto& q : f.quantities) {
    quantities.push_back({{"unit", q.unit_name}, {"grams", to_double(q.grams)}});
  }
  json j;
  j["id"] = f.id;
  j["name"] = f.name;
  j["per_100g"] = {{"kcal", to_double(f.kcal_per_100g)},
                   {"fat", to_double(f.fat_per_100g)},
                   {"protein", to_double(f.protein_per_100g)},
                   {"carbs", to_double(f.carbs_per_100g)}};
  j["quantities"] = std::move(quantities);
  j["popularity"] = f.popularity;
  return j;
}

/// Reads one recipe record per line. Well-formed records come back in file
/// order; everything else, including later duplicates of an id, goes to the
/// rejects report.
inline Loaded<std::vector<RecipeRaw>> load_recipes(const std::filesystem::path& path) {
  Loaded<std::vector<RecipeRaw>> out;
  out.rejects = detail::read_records<RecipeRaw>(path, recipe_from_json,
                                                [&](RecipeRaw r) { out.value.push_back(std::move(r)); });
  return out;
}

inline Loaded<FoodDatabase> load_food_db(const std::filesystem::path& path) {
  Loaded<FoodDatabase> out;
  out.rejects = detail::read_records<FoodItem>(path, food_item_from_json, [&](FoodItem f) {
    std::string id = f.id;
    out.value.items.emplace(std::move(id), std::move(f));
  });
  return out;
}

/// Collapses items with the same normalized name (keeping the most popular,
/// lower id on ties), then keeps the `max_items` most popular. Ranking ties
/// are broken by id ascending.
inline FoodDatabase filter_food_db(const FoodDatabase& db, std::size_t max_items) {
  if (max_items < 1) {
    throw ValidationError("max_items must be >= 1");
  }
  auto better = [](const FoodItem* a, const FoodItem* b) {
    if (a->popularity != b->popularity) return a->popularity > b->popularity;
    return a->id < b->id;
  };

  std::unordered_map<std::string, const FoodItem*> by_name;
  for (const auto& [id, item] : db.items) {
    auto [it, inserted] = by_name.emplace(normalize_text(item.name), &item);
    if (!inserted && better(&item, it->second)) it->second = &item;
  }

  std::vector<const FoodItem*> ranked;
  ranked.reserve(by_name.size());
  for (const auto& [name, item] : by_name) ranked.push_back(item);
  std::sort(ranked.begin(), ranked.end(), better);
  if (ranked.size() > max_items) ranked.resize(max_items);

  FoodDatabase out;
  for (const FoodItem* item : ranked) out.items.emplace(item->id, *item);
  return out;
}

/// Popularity-ranked view of a database (popularity desc, id asc).
inline std::vector<const FoodItem*> by_popularity(const FoodDatabase& db) {
  std::vector<const FoodItem*> items;
  for (const auto& [id, item] : db.items) items.push_back(&item);
  std::sort(items.begin(), items.end(), [](const FoodItem* a, const FoodItem* b) {
    if (a->popularity != b->popularity) return a->popularity > b->popularity;
    return a->id < b->id;
  });
  return items;
}

}  // namespace nutriset
