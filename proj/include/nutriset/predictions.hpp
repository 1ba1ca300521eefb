#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nutriset/dataset_builder.hpp"
#include "nutriset/error.hpp"
#include "nutriset/evalkit.hpp"

namespace nutriset {

struct Prediction {
  std::string image;
  eval::MultiTaskOutput output;
  bool has_probs = false;
};

/// One prediction per line: image, kcal, fat, protein, carbs and optional
/// ingredient_probs (probabilities, stored back as logits).
inline nlohmann::json to_json(const Prediction& p) {
  nlohmann::json j;
  j["image"] = p.image;
  j["kcal"] = p.output.kcal;
  j["fat"] = p.output.fat_g;
  j["protein"] = p.output.protein_g;
  j["carbs"] = p.output.carbs_g;
  if (p.has_probs) {
    std::vector<double> probs;
    probs.reserve(p.output.ingredient_logits.size());
    for (double z : p.output.ingredient_logits) probs.push_back(eval::sigmoid(z));
    j["ingredient_probs"] = probs;
  }
  return j;
}

inline Prediction prediction_from_json(const nlohmann::json& j) {
  Prediction p;
  p.image = j.at("image").get<std::string>();
  p.output.kcal = j.at("kcal").get<double>();
  p.output.fat_g = j.at("fat").get<double>();
  p.output.protein_g = j.at("protein").get<double>();
  p.output.carbs_g = j.at("carbs").get<double>();
  if (auto it = j.find("ingredient_probs"); it != j.end() && !it->is_null()) {
    p.has_probs = true;
    for (double prob : it->get<std::vector<double>>()) {
      if (!(prob >= 0 && prob <= 1)) throw ValidationError("ingredient probability outside [0, 1]");
      p.output.ingredient_logits.push_back(std::log(prob) - std::log1p(-prob));
    }
  }
  return p;
}

namespace detail {

template <typename T, typename Decode>
std::vector<T> read_jsonl(const std::filesystem::path& path, Decode decode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FatalError("cannot read " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(decode(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace detail

inline std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  return detail::read_jsonl<Prediction>(path, prediction_from_json);
}

inline std::vector<DatasetSample> load_dataset(const std::filesystem::path& path) {
  return detail::read_jsonl<DatasetSample>(path, sample_from_json);
}

/// Number of vocab entries in a vocab.tsv file.
inline std::size_t load_vocab_size(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FatalError("cannot read " + path.string());
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++n;
  }
  return n;
}

inline void print_metrics_table(std::ostream& os, const std::string& model, const eval::MetricsTable& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-20s %12s %10s %10s %10s %10s\n", "Model", "kcal (rel)", "kcal", "protein",
                "fat", "carbs");
  os << buf;
  std::snprintf(buf, sizeof(buf), "%-20s %12.3f %10.1f %10.2f %10.2f %10.1f\n", model.c_str(), m.kcal_rel, m.kcal_abs,
                m.protein_abs, m.fat_abs, m.carbs_abs);
  os << buf;
}

}  // namespace nutriset
