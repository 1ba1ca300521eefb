// nutriset command line: runs the recipe -> nutrition dataset pipeline stage
// by stage and scores predictions.
//
// Exit status: 0 success, 1 validation failure or bad usage, 2 fatal error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nutriset/nutriset.hpp"

namespace fs = std::filesystem;
using namespace nutriset;

namespace {

struct Options {
  std::string recipes;
  std::string fooddb;
  std::string embeddings;
  std::string synonyms;
  std::string lexicon;
  std::string provider = "edit";
  std::string basis = "recipe";
  std::string out = "out";
  double threshold = kDefaultMatchThreshold;
  double outlier_k = 2.0;
  uint64_t seed = 0;
  std::size_t vocab_n = 100;
  std::optional<double> gamma;
  std::optional<std::size_t> max_food_items;

  // baseline / eval
  std::string dataset;
  std::string vocab;
  std::string predictions;
  std::string kind = "mean";
  std::string split = "test";

  // losscheck
  std::size_t points = 100;
  std::size_t features = 16;
  std::size_t batch = 8;
  std::size_t check_vocab = 8;
  double check_gamma = 1.0;
};

void add_pipeline_flags(CLI::App* cmd, Options& o, bool with_basis) {
  cmd->add_option("--recipes", o.recipes, "recipes file (one JSON record per line)")->required();
  cmd->add_option("--fooddb", o.fooddb, "food database file (one JSON record per line)")->required();
  cmd->add_option("--embeddings", o.embeddings, "embedding or word-vector file");
  cmd->add_option("--provider", o.provider, "similarity provider")
      ->check(CLI::IsMember({"edit", "wordvec", "precomputed"}));
  cmd->add_option("--threshold", o.threshold, "match threshold (strictly greater)")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--synonyms", o.synonyms, "unit synonym file");
  cmd->add_option("--lexicon", o.lexicon, "by-taste marker file");
  cmd->add_option("--max-food-items", o.max_food_items, "dedup + keep the N most popular food items");
  cmd->add_option("--outlier-k", o.outlier_k, "outlier bound in standard deviations");
  cmd->add_option("--seed", o.seed, "split seed");
  cmd->add_option("--vocab-n", o.vocab_n, "ingredient vocabulary size");
  cmd->add_option("--gamma", o.gamma, "BCE weight (default: calibrated)");
  cmd->add_option("--out", o.out, "output directory");
  if (with_basis) {
    cmd->add_option("--basis", o.basis, "aggregation basis")->check(CLI::IsMember({"recipe", "portion", "100g", "perrecipe", "perportion", "per100g"}));
  }
}

PipelineConfig make_config(const Options& o) {
  PipelineConfig cfg;
  cfg.recipes = o.recipes;
  cfg.food_db = o.fooddb;
  if (!o.embeddings.empty()) cfg.embeddings = o.embeddings;
  if (!o.synonyms.empty()) cfg.synonyms = o.synonyms;
  if (!o.lexicon.empty()) cfg.lexicon = o.lexicon;
  cfg.out_dir = o.out;
  cfg.provider = *parse_provider(o.provider);
  cfg.threshold = o.threshold;
  cfg.outlier_k = o.outlier_k;
  cfg.basis = *parse_basis(o.basis);
  cfg.seed = o.seed;
  cfg.vocab_n = o.vocab_n;
  cfg.gamma = o.gamma;
  cfg.max_food_items = o.max_food_items;
  return cfg;
}

int cmd_ingest(const Options& o) {
  auto recipes = load_recipes(o.recipes);
  auto food = load_food_db(o.fooddb);
  PreparedCorpus pc;
  pc.recipe_rejects = std::move(recipes.rejects);
  pc.food_rejects = std::move(food.rejects);
  write_rejects(pc, o.out);
  std::cout << "recipes: " << recipes.value.size() << " loaded, " << pc.recipe_rejects.size() << " rejected\n"
            << "food db: " << food.value.size() << " loaded, " << pc.food_rejects.size() << " rejected\n";
  return pc.recipe_rejects.empty() && pc.food_rejects.empty() ? 0 : 1;
}

int cmd_match(const Options& o) {
  const PipelineConfig cfg = make_config(o);
  const PreparedCorpus pc = prepare_corpus(cfg);
  write_rejects(pc, cfg.out_dir);
  std::ofstream out(cfg.out_dir / "matches.tsv", std::ios::binary | std::ios::trunc);
  if (!out) throw FatalError("cannot write " + (cfg.out_dir / "matches.tsv").string());
  write_decisions(out, pc.decisions);
  std::size_t complete = 0;
  for (const auto& m : pc.matches) complete += m.complete ? 1 : 0;
  std::cout << complete << " of " << pc.recipes.size() << " recipes fully matched\n";
  return 0;
}

int cmd_build(const Options& o) {
  const PipelineConfig cfg = make_config(o);
  const PreparedCorpus pc = prepare_corpus(cfg);
  const BuildResult br = build_dataset(pc, cfg, cfg.basis);
  write_rejects(pc, cfg.out_dir);
  write_build(br, pc, cfg.out_dir);
  {
    std::ofstream out(cfg.out_dir / "matches.tsv", std::ios::binary | std::ios::trunc);
    write_decisions(out, pc.decisions);
  }
  std::cout << "basis " << to_string(cfg.basis) << ": " << br.stats.counts.final_count << " recipes, "
            << br.samples.size() << " samples, vocab " << br.vocab.size() << ", gamma " << br.stats.gamma << "\n";
  return 0;
}

int cmd_stats(const Options& o) {
  const PipelineConfig cfg = make_config(o);
  const PreparedCorpus pc = prepare_corpus(cfg);
  std::vector<StatsReport> reports;
  for (Basis b : {Basis::PerPortion, Basis::Per100g, Basis::PerRecipe}) {
    reports.push_back(build_dataset(pc, cfg, b).stats);
  }
  print_stats_table(std::cout, reports);
  return 0;
}

fs::path default_vocab(const Options& o) {
  if (!o.vocab.empty()) return o.vocab;
  return fs::path(o.dataset).parent_path() / "vocab.tsv";
}

int cmd_baseline(const Options& o) {
  const auto samples = load_dataset(o.dataset);
  const std::size_t n = load_vocab_size(default_vocab(o));
  const auto split = parse_split(o.split);
  if (!split) throw ValidationError("--split must be train, val or test");

  std::vector<eval::MultiTaskTarget> train_samples;
  std::map<std::string, eval::MultiTaskTarget> train_recipes;
  for (const auto& s : samples) {
    if (s.split != Split::Train) continue;
    eval::MultiTaskTarget t{s.targets, eval::multi_hot(s.label_indices, n)};
    train_samples.push_back(t);
    train_recipes.emplace(s.recipe_id, t);
  }
  if (train_samples.empty()) throw ValidationError("dataset has no train samples");

  std::vector<Prediction> preds;
  if (o.kind == "mean") {
    const eval::MeanBaseline baseline(train_samples);
    for (const auto& s : samples) {
      if (s.split == *split) preds.push_back({s.image_ref, baseline.predict(), true});
    }
  } else if (o.kind == "random") {
    std::vector<eval::MultiTaskTarget> recipes;
    for (auto& [id, t] : train_recipes) recipes.push_back(t);
    eval::RandomBaseline baseline(std::move(recipes), o.seed);
    for (const auto& s : samples) {
      if (s.split == *split) preds.push_back({s.image_ref, baseline.predict(), true});
    }
  } else {
    throw ValidationError("--kind must be mean or random");
  }

  fs::path out_path = o.predictions.empty() ? fs::path(o.out) / ("predictions_" + o.kind + ".jsonl")
                                            : fs::path(o.predictions);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw FatalError("cannot write " + out_path.string());
  for (const auto& p : preds) out << to_json(p).dump() << '\n';
  std::cout << "wrote " << preds.size() << " predictions to " << out_path.string() << "\n";
  return 0;
}

int cmd_eval(const Options& o) {
  const auto samples = load_dataset(o.dataset);
  const auto predictions = load_predictions(o.predictions);
  std::map<std::string, const DatasetSample*> by_image;
  for (const auto& s : samples) {
    if (!by_image.emplace(s.image_ref, &s).second) throw ValidationError("duplicate image " + s.image_ref);
  }
  std::vector<eval::MultiTaskOutput> preds;
  std::vector<eval::MultiTaskTarget> tgts;
  for (const auto& p : predictions) {
    auto it = by_image.find(p.image);
    if (it == by_image.end()) throw ValidationError("prediction for unknown image " + p.image);
    preds.push_back(p.output);
    tgts.push_back({it->second->targets, {}});
  }
  const auto metrics = eval::evaluate(preds, tgts);
  print_metrics_table(std::cout, fs::path(o.predictions).stem().string(), metrics);
  std::cout << metrics.samples << " samples, " << metrics.rel_samples << " with kcal > 0\n";
  return 0;
}

int cmd_losscheck(const Options& o) {
  const auto report =
      eval::run_gradient_check(o.points, o.features, o.check_vocab, o.batch, o.check_gamma, o.seed);
  std::cout << "gradient check: " << report.points << " points, " << report.failures
            << " failures, worst relative error " << report.worst_error << "\n";
  std::cout << (report.failures == 0 ? "PASS" : "FAIL") << "\n";
  return report.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nutriset: recipe corpora to calorie/macronutrient datasets"};
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "validate inputs and write rejects reports");
  ingest->add_option("--recipes", o.recipes, "recipes file")->required();
  ingest->add_option("--fooddb", o.fooddb, "food database file")->required();
  ingest->add_option("--out", o.out, "output directory");

  auto* match = app.add_subcommand("match", "write per-line match decisions");
  add_pipeline_flags(match, o, false);

  auto* build = app.add_subcommand("build", "write dataset, vocab and stats for one basis");
  add_pipeline_flags(build, o, true);

  auto* stats = app.add_subcommand("stats", "print the preprocessing table for all bases");
  add_pipeline_flags(stats, o, false);

  auto* baseline = app.add_subcommand("baseline", "write mean or random baseline predictions");
  baseline->add_option("--dataset", o.dataset, "dataset.jsonl from build")->required();
  baseline->add_option("--vocab", o.vocab, "vocab.tsv (default: next to the dataset)");
  baseline->add_option("--kind", o.kind, "mean or random")->check(CLI::IsMember({"mean", "random"}));
  baseline->add_option("--split", o.split, "split to predict")->check(CLI::IsMember({"train", "val", "test"}));
  baseline->add_option("--seed", o.seed, "seed for the random baseline");
  baseline->add_option("--predictions", o.predictions, "output predictions file");
  baseline->add_option("--out", o.out, "output directory");

  auto* evalcmd = app.add_subcommand("eval", "score a predictions file against a dataset");
  evalcmd->add_option("--dataset", o.dataset, "dataset.jsonl from build")->required();
  evalcmd->add_option("--predictions", o.predictions, "predictions file")->required();

  auto* losscheck = app.add_subcommand("losscheck", "finite-difference check of the multi-task loss gradient");
  losscheck->add_option("--points", o.points, "random points");
  losscheck->add_option("--features", o.features, "reference model feature count");
  losscheck->add_option("--batch", o.batch, "batch size");
  losscheck->add_option("--vocab-n", o.check_vocab, "ingredient outputs");
  losscheck->add_option("--gamma", o.check_gamma, "BCE weight");
  losscheck->add_option("--seed", o.seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*ingest) return cmd_ingest(o);
    if (*match) return cmd_match(o);
    if (*build) return cmd_build(o);
    if (*stats) return cmd_stats(o);
    if (*baseline) return cmd_baseline(o);
    if (*evalcmd) return cmd_eval(o);
    if (*losscheck) return cmd_losscheck(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
