#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nutriset/error.hpp"
#include "nutriset/ingestion.hpp"
#include "nutriset/ingredient_parser.hpp"
#include "nutriset/matcher.hpp"
#include "nutriset/rational.hpp"
#include "nutriset/text.hpp"

namespace nutriset {

/// unit token -> database unit names to try, in order. Keys and values are
/// normalized. The token graph must be acyclic.
class UnitSynonyms {
 public:
  UnitSynonyms() = default;

  void add(const std::string& token, std::vector<std::string> names) {
    std::string key = normalize_text(token);
    if (key.empty()) throw FatalError("empty synonym token");
    if (names.empty()) throw FatalError("synonym '" + key + "' has no targets");
    for (auto& n : names) {
      n = normalize_text(n);
      if (n.empty()) throw FatalError("synonym '" + key + "' has an empty target");
    }
    auto& slot = map_[key];
    slot.insert(slot.end(), names.begin(), names.end());
    check_acyclic();
  }

  const std::vector<std::string>* find(const std::string& token) const {
    auto it = map_.find(token);
    return it == map_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, std::vector<std::string>>& entries() const { return map_; }

  /// Seed list: the drained-weight can case plus common plural/abbreviation forms.
  static UnitSynonyms defaults() {
    UnitSynonyms s;
    s.add("dose", {"dose (abtropfgewicht)"});
    s.add("dosen", {"dose (abtropfgewicht)", "dose"});
    s.add("can", {"can (drained weight)"});
    s.add("cans", {"can (drained weight)", "can"});
    s.add("cups", {"cup"});
    s.add("el", {"esslöffel", "tablespoon"});
    s.add("tl", {"teelöffel", "teaspoon"});
    s.add("tbsp", {"tablespoon"});
    s.add("tsp", {"teaspoon"});
    return s;
  }

 private:
  void check_acyclic() const {
    std::map<std::string, int> state;  // 1 = on stack, 2 = done
    std::function<void(const std::string&)> visit = [&](const std::string& node) {
      auto it = map_.find(node);
      if (it == map_.end()) return;
      int& st = state[node];
      if (st == 2) return;
      if (st == 1) throw FatalError("unit synonym cycle through '" + node + "'");
      st = 1;
      for (const auto& next : it->second) visit(next);
      state[node] = 2;
    };
    for (const auto& [token, names] : map_) visit(token);
  }

  std::map<std::string, std::vector<std::string>> map_;
};

/// Parses "token = name1 | name2 | ..." lines; '#' starts a comment line.
inline UnitSynonyms load_unit_synonyms(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FatalError("cannot read unit synonyms " + path.string());
  UnitSynonyms syn;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string trimmed = normalize_text(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FatalError(path.string() + ":" + std::to_string(line_number) + ": expected 'token = names'");
    }
    std::vector<std::string> names;
    std::string rhs = line.substr(eq + 1);
    std::size_t start = 0;
    while (start <= rhs.size()) {
      auto bar = rhs.find('|', start);
      if (bar == std::string::npos) bar = rhs.size();
      names.push_back(rhs.substr(start, bar - start));
      start = bar + 1;
    }
    syn.add(line.substr(0, eq), std::move(names));
  }
  return syn;
}

namespace detail {

inline const QuantityConversion* find_conversion(const FoodItem& item, const std::string& unit) {
  for (const auto& q : item.quantities) {
    if (normalize_text(q.unit_name) == unit) return &q;
  }
  return nullptr;
}

inline bool is_piece_token(const std::string& unit) {
  static const std::set<std::string> pieces = {"", "piece", "pieces", "stück", "stk", "stk."};
  return pieces.count(unit) > 0;
}

}  // namespace detail

/// Grams for a Count quantity of `item`, or nullopt (no conversion).
///
/// g/gramm pass through, kg and l scale by 1000, ml counts 1 g per ml unless
/// the item carries its own "ml"/"l" entry. Piece-like or empty units try the
/// item's "stück"/"piece" entries, then its only quantity if it has exactly
/// one. Any other unit is looked up by exact name, then through `synonyms`.
inline std::optional<Rational> resolve_amount(const ParsedIngredient& parsed, const FoodItem& item,
                                              const UnitSynonyms& synonyms) {
  if (!parsed.quantity.is_count()) return std::nullopt;
  const Rational& value = parsed.quantity.value;
  const std::string unit = normalize_text(parsed.unit_token);

  if (unit == "g" || unit == "gramm" || unit == "gram" || unit == "grams") return value;
  if (unit == "kg" || unit == "kilogramm") return value * 1000;
  if (unit == "ml" || unit == "l") {
    const Rational scale = unit == "l" ? 1000 : 1;
    if (const auto* own = detail::find_conversion(item, unit)) return value * own->grams;
    if (const auto* per_ml = detail::find_conversion(item, "ml")) return value * scale * per_ml->grams;
    return value * scale;
  }

  if (const auto* conv = detail::find_conversion(item, unit)) return value * conv->grams;
  if (const auto* names = synonyms.find(unit)) {
    for (const auto& name : *names) {
      if (const auto* conv = detail::find_conversion(item, name)) return value * conv->grams;
    }
  }

  if (detail::is_piece_token(unit)) {
    for (const char* piece : {"stück", "piece"}) {
      if (const auto* conv = detail::find_conversion(item, piece)) return value * conv->grams;
    }
    if (item.quantities.size() == 1) return value * item.quantities.front().grams;
  }
  return std::nullopt;
}

struct MatchedIngredient {
  std::string food_id;
  double similarity = 0;
  Rational grams = 0;
  bool by_taste = false;

  bool operator==(const MatchedIngredient&) const = default;
};

enum class MatchStatus {
  Matched,           // amount resolved (or by-taste against the top candidate)
  ByTasteExcluded,   // by-taste with no candidate: dropped, recipe kept
  Unmatched,         // recipe must be discarded
};

enum class UnmatchedReason { None, NoCandidates, NoConversion, UnknownQuantity };

struct MatchResult {
  MatchStatus status = MatchStatus::Unmatched;
  std::optional<MatchedIngredient> matched;
  UnmatchedReason reason = UnmatchedReason::None;
  std::size_t consulted = 0;  // candidates tried, for auditing the descending walk
};

inline const char* to_string(UnmatchedReason r) {
  switch (r) {
    case UnmatchedReason::None: return "none";
    case UnmatchedReason::NoCandidates: return "no candidates";
    case UnmatchedReason::NoConversion: return "no conversion";
    case UnmatchedReason::UnknownQuantity: return "unknown quantity";
  }
  return "?";
}

/// Walks `cands` best-first and takes the first one whose amount converts.
/// By-taste lines bind to the top candidate with 0 g.
inline MatchResult match_ingredient(const ParsedIngredient& parsed, const std::vector<Candidate>& cands,
                                    const FoodDatabase& db, const UnitSynonyms& synonyms) {
  MatchResult result;
  if (parsed.quantity.kind == QuantityKind::ByTaste) {
    if (cands.empty()) {
      result.status = MatchStatus::ByTasteExcluded;
      return result;
    }
    result.status = MatchStatus::Matched;
    result.consulted = 1;
    result.matched = MatchedIngredient{cands.front().food_id, cands.front().score, 0, true};
    return result;
  }
  if (parsed.quantity.kind == QuantityKind::Unknown) {
    result.reason = UnmatchedReason::UnknownQuantity;
    return result;
  }
  if (cands.empty()) {
    result.reason = UnmatchedReason::NoCandidates;
    return result;
  }
  for (const auto& cand : cands) {
    ++result.consulted;
    const FoodItem* item = db.find(cand.food_id);
    if (!item) throw FatalError("candidate '" + cand.food_id + "' not in food database");
    if (auto grams = resolve_amount(parsed, *item, synonyms)) {
      result.status = MatchStatus::Matched;
      result.matched = MatchedIngredient{cand.food_id, cand.score, std::move(*grams), false};
      return result;
    }
  }
  result.reason = UnmatchedReason::NoConversion;
  return result;
}

}  // namespace nutriset
