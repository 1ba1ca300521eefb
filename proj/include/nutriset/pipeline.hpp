#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "nutriset/aggregator.hpp"
#include "nutriset/amount_resolver.hpp"
#include "nutriset/dataset_builder.hpp"
#include "nutriset/error.hpp"
#include "nutriset/evalkit.hpp"
#include "nutriset/ingestion.hpp"
#include "nutriset/ingredient_parser.hpp"
#include "nutriset/matcher.hpp"

namespace nutriset {

struct PipelineConfig {
  std::filesystem::path recipes;
  std::filesystem::path food_db;
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> synonyms;
  std::optional<std::filesystem::path> lexicon;
  std::filesystem::path out_dir = "out";
  ProviderKind provider = ProviderKind::EditDistance;
  double threshold = kDefaultMatchThreshold;
  double outlier_k = 2.0;
  Basis basis = Basis::PerRecipe;
  SplitRatios ratios;
  uint64_t seed = 0;
  std::size_t vocab_n = 100;
  std::optional<double> gamma;
  std::optional<std::size_t> max_food_items;
  std::size_t top_k_stats = 15;

  void validate() const {
    if (!(threshold >= 0 && threshold <= 1)) throw ValidationError("--threshold must be in [0, 1]");
    if (!(outlier_k > 0)) throw ValidationError("--outlier-k must be > 0");
    if (vocab_n < 1) throw ValidationError("--vocab-n must be >= 1");
    if (gamma && !(*gamma >= 0)) throw ValidationError("--gamma must be >= 0");
    if (max_food_items && *max_food_items < 1) throw ValidationError("--max-food-items must be >= 1");
    const double sum = ratios.train + ratios.val + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");
    if (provider != ProviderKind::EditDistance && !embeddings) {
      throw ValidationError("--embeddings is required for the wordvec/precomputed providers");
    }
  }
};

inline std::optional<ProviderKind> parse_provider(std::string_view s) {
  if (s == "edit") return ProviderKind::EditDistance;
  if (s == "wordvec") return ProviderKind::AveragedWordVectors;
  if (s == "precomputed") return ProviderKind::PrecomputedEmbeddings;
  return std::nullopt;
}

/// Audit record for one ingredient line.
struct LineDecision {
  std::string recipe_id;
  std::size_t line_index = 0;
  std::string name;
  std::string quantity;  // exact rational, "by taste", or "unknown"
  std::string unit;
  std::string status;    // matched | by taste | excluded | unmatched | rejected
  std::string detail;    // unmatched reason or parse reject
  std::string food_id;
  double similarity = 0;
  std::string grams;
};

struct RecipeMatch {
  bool complete = true;
  std::vector<MatchedIngredient> matched;
  std::set<std::string> food_ids;
};

/// Everything up to and including ingredient matching; shared by all bases.
struct PreparedCorpus {
  std::vector<RecipeRaw> recipes;
  RejectReport recipe_rejects;
  FoodDatabase food_db;
  RejectReport food_rejects;
  std::vector<RecipeMatch> matches;  // parallel to recipes
  std::vector<LineDecision> decisions;
};

namespace detail {

inline std::string quantity_label(const ParsedQuantity& q) {
  switch (q.kind) {
    case QuantityKind::Count: return to_string(q.value);
    case QuantityKind::ByTaste: return "by taste";
    case QuantityKind::Unknown: return "unknown";
  }
  return "?";
}

}  // namespace detail

inline SimilarityProvider make_provider(const PipelineConfig& cfg) {
  if (cfg.provider == ProviderKind::EditDistance) return SimilarityProvider::edit_distance();
  auto table = std::make_shared<const EmbeddingTable>(load_embeddings(*cfg.embeddings));
  return cfg.provider == ProviderKind::AveragedWordVectors ? SimilarityProvider::word_vectors(std::move(table))
                                                           : SimilarityProvider::precomputed(std::move(table));
}

inline PreparedCorpus prepare_corpus(const PipelineConfig& cfg) {
  cfg.validate();
  PreparedCorpus pc;
  auto recipes = load_recipes(cfg.recipes);
  pc.recipes = std::move(recipes.value);
  pc.recipe_rejects = std::move(recipes.rejects);
  auto food = load_food_db(cfg.food_db);
  pc.food_rejects = std::move(food.rejects);
  pc.food_db = cfg.max_food_items ? filter_food_db(food.value, *cfg.max_food_items) : std::move(food.value);

  const ParserLexicon lexicon = cfg.lexicon ? load_lexicon(*cfg.lexicon) : ParserLexicon::defaults();
  const UnitSynonyms synonyms = cfg.synonyms ? load_unit_synonyms(*cfg.synonyms) : UnitSynonyms::defaults();
  const MatchIndex index = build_index(pc.food_db, make_provider(cfg));

  std::unordered_map<std::string, std::vector<Candidate>> cache;
  pc.matches.reserve(pc.recipes.size());
  for (const auto& recipe : pc.recipes) {
    RecipeMatch rm;
    for (std::size_t i = 0; i < recipe.ingredient_lines.size(); ++i) {
      LineDecision d{recipe.id, i, normalize_text(recipe.ingredient_lines[i].name_text), "", "", "", "", "", 0, ""};
      auto parsed_or = parse_ingredient_line(recipe.ingredient_lines[i], lexicon);
      if (auto* rej = std::get_if<LineReject>(&parsed_or)) {
        d.status = "rejected";
        d.detail = rej->reason;
        rm.complete = false;
        pc.decisions.push_back(std::move(d));
        continue;
      }
      const auto& parsed = std::get<ParsedIngredient>(parsed_or);
      d.quantity = detail::quantity_label(parsed.quantity);
      d.unit = parsed.unit_token;

      auto it = cache.find(parsed.name);
      if (it == cache.end()) it = cache.emplace(parsed.name, candidates(index, parsed.name, cfg.threshold)).first;
      const MatchResult result = match_ingredient(parsed, it->second, pc.food_db, synonyms);

      switch (result.status) {
        case MatchStatus::Matched:
          d.status = result.matched->by_taste ? "by taste" : "matched";
          d.food_id = result.matched->food_id;
          d.similarity = result.matched->similarity;
          d.grams = to_string(result.matched->grams);
          rm.food_ids.insert(result.matched->food_id);
          rm.matched.push_back(*result.matched);
          break;
        case MatchStatus::ByTasteExcluded:
          d.status = "excluded";
          d.detail = "by taste without candidate";
          break;
        case MatchStatus::Unmatched:
          d.status = "unmatched";
          d.detail = to_string(result.reason);
          rm.complete = false;
          break;
      }
      pc.decisions.push_back(std::move(d));
    }
    pc.matches.push_back(std::move(rm));
  }
  return pc;
}

struct BuildResult {
  std::vector<DatasetSample> samples;
  IngredientVocab vocab;
  StatsReport stats;
  SplitAssignment splits;
  std::vector<AtwaterWarning> warnings;
  std::map<std::string, std::string> removals;  // recipe id -> stats category
};

inline BuildResult build_dataset(const PreparedCorpus& pc, const PipelineConfig& cfg, Basis basis) {
  BuildResult br;
  StatsReport& st = br.stats;
  st.basis = basis;
  st.outlier_k = cfg.outlier_k;
  st.counts.original = pc.recipes.size();

  std::map<std::string, SurvivingRecipe> surviving;
  std::vector<std::pair<std::string, double>> kcal_values;
  for (std::size_t r = 0; r < pc.recipes.size(); ++r) {
    const RecipeRaw& recipe = pc.recipes[r];
    const RecipeMatch& rm = pc.matches[r];
    if (!rm.complete) {
      ++st.counts.removed_incomplete_match;
      br.removals[recipe.id] = "removed_incomplete_match";
      continue;
    }
    const RecipeNutrition rn = recipe_totals(recipe.id, rm.matched, pc.food_db, recipe.portions);
    if (auto w = atwater_check(rn)) br.warnings.push_back(*w);
    auto converted = to_basis(rn, basis);
    if (auto* rej = std::get_if<BasisReject>(&converted)) {
      if (*rej == BasisReject::NoPortionInfo) {
        ++st.counts.removed_no_portion;
        br.removals[recipe.id] = "removed_no_portion";
      } else {
        ++st.counts.removed_no_mass;
        br.removals[recipe.id] = "removed_no_mass";
      }
      continue;
    }
    const NutritionFacts facts = to_double(std::get<ExactNutrition>(converted));
    surviving[recipe.id] = {facts, rm.food_ids};
    kcal_values.emplace_back(recipe.id, facts.kcal);
  }

  if (!kcal_values.empty()) {
    const OutlierResult outliers = filter_outliers(kcal_values, cfg.outlier_k);
    st.outlier_passes = outliers.passes;
    for (const auto& id : outliers.removed) {
      surviving.erase(id);
      ++st.counts.removed_kcal_outliers;
      br.removals[id] = "removed_kcal_outliers";
    }
  }
  st.counts.final_count = surviving.size();

  std::vector<std::string> ids;
  ids.reserve(pc.recipes.size());
  for (const auto& recipe : pc.recipes) ids.push_back(recipe.id);
  br.splits = assign_splits(ids, cfg.ratios, cfg.seed);

  std::vector<std::set<std::string>> train_sets;
  for (const auto& [id, s] : surviving) {
    const Split split = br.splits.at(id);
    ++st.split_recipes[static_cast<std::size_t>(split)];
    if (split == Split::Train) train_sets.push_back(s.food_ids);
  }
  br.vocab = build_vocab(train_sets, cfg.vocab_n);
  br.samples = emit_samples(pc.recipes, surviving, br.splits, br.vocab, basis);
  st.sample_count = br.samples.size();

  if (!surviving.empty()) {
    double sum = 0;
    for (const auto& [id, s] : surviving) sum += s.targets.kcal;
    st.kcal_mean = sum / static_cast<double>(surviving.size());
    double sq = 0;
    for (const auto& [id, s] : surviving) sq += (s.targets.kcal - st.kcal_mean) * (s.targets.kcal - st.kcal_mean);
    st.kcal_std = std::sqrt(sq / static_cast<double>(surviving.size()));
  }

  std::vector<std::set<std::string>> final_sets;
  for (const auto& [id, s] : surviving) final_sets.push_back(s.food_ids);
  for (const auto& entry : build_vocab(final_sets, cfg.top_k_stats)) {
    const FoodItem* item = pc.food_db.find(entry.food_id);
    st.top_ingredients.push_back({entry.food_id, item ? item->name : "", entry.count});
  }

  if (cfg.gamma) {
    st.gamma = *cfg.gamma;
  } else {
    std::vector<eval::MultiTaskTarget> train_targets;
    for (const auto& s : br.samples) {
      if (s.split == Split::Train) {
        train_targets.push_back({s.targets, eval::multi_hot(s.label_indices, br.vocab.size())});
      }
    }
    if (train_targets.empty()) {
      st.gamma = 1.0;
      st.gamma_degenerate = true;
    } else {
      const auto g = eval::calibrate_gamma(train_targets);
      st.gamma = g.gamma;
      st.gamma_degenerate = g.degenerate;
    }
  }
  return br;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FatalError("cannot write " + path.string());
  return out;
}

}  // namespace detail

inline void write_decisions(std::ostream& os, const std::vector<LineDecision>& decisions) {
  os << "recipe_id\tline\tname\tquantity\tunit\tstatus\tdetail\tfood_id\tsimilarity\tgrams\n";
  for (const auto& d : decisions) {
    std::ostringstream sim;
    if (!d.food_id.empty()) sim << std::setprecision(9) << d.similarity;
    os << d.recipe_id << '\t' << d.line_index << '\t' << d.name << '\t' << d.quantity << '\t' << d.unit << '\t'
       << d.status << '\t' << d.detail << '\t' << d.food_id << '\t' << sim.str() << '\t' << d.grams << '\n';
  }
}

inline void write_rejects(const PreparedCorpus& pc, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto r = detail::open_output(dir / "recipes_rejects.tsv");
  pc.recipe_rejects.write(r);
  auto f = detail::open_output(dir / "fooddb_rejects.tsv");
  pc.food_rejects.write(f);
}

/// Writes dataset.jsonl, vocab.tsv, stats.json and warnings.tsv.
inline void write_build(const BuildResult& br, const PreparedCorpus& pc, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = detail::open_output(dir / "dataset.jsonl");
    for (const auto& s : br.samples) out << to_json(s).dump() << '\n';
  }
  {
    auto out = detail::open_output(dir / "vocab.tsv");
    write_vocab(out, br.vocab, pc.food_db);
  }
  {
    auto out = detail::open_output(dir / "stats.json");
    out << to_json(br.stats).dump(2) << '\n';
  }
  {
    auto out = detail::open_output(dir / "warnings.tsv");
    write_warnings(out, br.warnings);
  }
}

/// Preprocessing table with one column per basis, in the order per portion,
/// per 100 g, per recipe.
inline void print_stats_table(std::ostream& os, const std::vector<StatsReport>& reports) {
  auto row = [&](const std::string& label, auto getter) {
    os << std::left << std::setw(44) << label;
    for (const auto& r : reports) os << std::right << std::setw(14) << getter(r);
    os << '\n';
  };
  auto fixed = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << v;
    return s.str();
  };
  os << std::left << std::setw(44) << "Preprocessing";
  for (const auto& r : reports) {
    const char* name = r.basis == Basis::PerPortion ? "Per portion" : r.basis == Basis::Per100g ? "Per 100 g" : "Per recipe";
    os << std::right << std::setw(14) << name;
  }
  os << '\n';
  row("Original recipes count", [](const StatsReport& r) { return r.counts.original; });
  row("Removed (incomplete ingredients match)", [](const StatsReport& r) { return r.counts.removed_incomplete_match; });
  row("Removed (no portion size information)", [](const StatsReport& r) { return r.counts.removed_no_portion; });
  row("Removed (no ingredient mass)", [](const StatsReport& r) { return r.counts.removed_no_mass; });
  row("Removed (kcal outliers)", [](const StatsReport& r) { return r.counts.removed_kcal_outliers; });
  row("Final recipe count", [](const StatsReport& r) { return r.counts.final_count; });
  row("Sample count", [](const StatsReport& r) { return r.sample_count; });
  row("Mean [kcal]", [&](const StatsReport& r) { return fixed(r.kcal_mean); });
  row("Std. Dev. [kcal]", [&](const StatsReport& r) { return fixed(r.kcal_std); });
}

}  // namespace nutriset
