#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "nutriset/error.hpp"
#include "nutriset/ingestion.hpp"
#include "nutriset/text.hpp"

namespace nutriset {

inline constexpr double kDefaultMatchThreshold = 0.84;

/// Classic unit-cost Levenshtein distance over code points, two-row DP.
template <typename Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
  const Seq& longer = a.size() >= b.size() ? a : b;
  const Seq& shorter = a.size() >= b.size() ? b : a;
  std::vector<std::size_t> row(shorter.size() + 1);
  for (std::size_t i = 0; i <= shorter.size(); ++i) row[i] = i;
  for (std::size_t j = 1; j <= longer.size(); ++j) {
    std::size_t diagonal = row[0];
    row[0] = j;
    for (std::size_t i = 1; i <= shorter.size(); ++i) {
      std::size_t above = row[i];
      if (shorter[i - 1] == longer[j - 1]) {
        row[i] = diagonal;
      } else {
        row[i] = 1 + std::min({diagonal, above, row[i - 1]});
      }
      diagonal = above;
    }
  }
  return row[shorter.size()];
}

/// 1 - lev(a, b) / max(|a|, |b|) over code points; two empty strings score 1.
inline double edit_distance_score(std::string_view a, std::string_view b) {
  const std::u32string ca = to_code_points(a);
  const std::u32string cb = to_code_points(b);
  const std::size_t longest = std::max(ca.size(), cb.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(ca, cb)) / static_cast<double>(longest);
}

/// Key -> vector table loaded from the "<count> <dim>" text layout. Keys are
/// stored normalized; rows are renormalized to unit length on insert.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw FatalError("embedding dimension must be > 0");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  void insert(std::string_view key, std::vector<double> vec) {
    if (vec.size() != dim_) {
      throw FatalError("embedding for '" + std::string(key) + "' has dimension " + std::to_string(vec.size()) +
                       ", expected " + std::to_string(dim_));
    }
    double norm = 0;
    for (double v : vec) norm += v * v;
    norm = std::sqrt(norm);
    if (!std::isfinite(norm) || norm == 0) {
      throw FatalError("embedding for '" + std::string(key) + "' is zero or non-finite");
    }
    for (double& v : vec) v /= norm;
    std::string k = normalize_text(key);
    if (!index_.emplace(k, rows_.size()).second) {
      throw FatalError("duplicate embedding key '" + k + "'");
    }
    rows_.push_back(std::move(vec));
  }

  const std::vector<double>* find(const std::string& normalized_key) const {
    auto it = index_.find(normalized_key);
    return it == index_.end() ? nullptr : &rows_[it->second];
  }

 private:
  std::size_t dim_;
  std::vector<std::vector<double>> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads an embedding or word-vector file: header "<count> <dim>", then one
/// "key<TAB>v1 v2 ... vdim" line per entry.
inline EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FatalError("cannot read embeddings " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw FatalError("empty embedding file " + path.string());
  std::istringstream hs(header);
  std::size_t count = 0, dim = 0;
  if (!(hs >> count >> dim) || dim == 0) {
    throw FatalError("bad embedding header in " + path.string());
  }
  EmbeddingTable table(dim);
  std::string line;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FatalError(path.string() + ":" + std::to_string(line_number) + ": missing tab");
    }
    std::vector<double> vec;
    vec.reserve(dim);
    const char* p = line.data() + tab + 1;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double v = 0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        throw FatalError(path.string() + ":" + std::to_string(line_number) + ": bad float");
      }
      vec.push_back(v);
      p = next;
    }
    table.insert(std::string_view(line).substr(0, tab), std::move(vec));
  }
  if (table.size() != count) {
    throw FatalError(path.string() + ": header says " + std::to_string(count) + " entries, found " +
                     std::to_string(table.size()));
  }
  return table;
}

struct EmbedResult {
  std::vector<double> vector;
  bool embeddable = false;
};

/// Mean of the in-vocabulary token vectors of `name`, renormalized. Zero
/// vector and embeddable=false when no token is known or the mean cancels.
inline EmbedResult avg_word_embed(std::string_view name, const EmbeddingTable& words) {
  if (words.empty()) throw FatalError("word vector table is empty");
  EmbedResult out{std::vector<double>(words.dim(), 0.0), false};
  std::size_t hits = 0;
  for (const auto& token : tokenize_words(normalize_text(name))) {
    if (const auto* vec = words.find(token)) {
      for (std::size_t i = 0; i < vec->size(); ++i) out.vector[i] += (*vec)[i];
      ++hits;
    }
  }
  if (hits == 0) return out;
  double norm = 0;
  for (double& v : out.vector) {
    v /= static_cast<double>(hits);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  if (norm < 1e-12) {
    std::fill(out.vector.begin(), out.vector.end(), 0.0);
    return out;
  }
  for (double& v : out.vector) v /= norm;
  out.embeddable = true;
  return out;
}

enum class ProviderKind { EditDistance, AveragedWordVectors, PrecomputedEmbeddings };

/// Text -> similarity strategy. The embedding providers share their table.
class SimilarityProvider {
 public:
  static SimilarityProvider edit_distance() { return SimilarityProvider(ProviderKind::EditDistance, nullptr); }
  static SimilarityProvider word_vectors(std::shared_ptr<const EmbeddingTable> table) {
    return SimilarityProvider(ProviderKind::AveragedWordVectors, std::move(table));
  }
  static SimilarityProvider precomputed(std::shared_ptr<const EmbeddingTable> table) {
    return SimilarityProvider(ProviderKind::PrecomputedEmbeddings, std::move(table));
  }

  ProviderKind kind() const { return kind_; }
  const EmbeddingTable* table() const { return table_.get(); }
  std::size_t dim() const { return table_ ? table_->dim() : 0; }

  /// Unit vector for normalized text, or nullopt when it cannot be embedded.
  std::optional<std::vector<double>> embed(const std::string& normalized) const {
    switch (kind_) {
      case ProviderKind::AveragedWordVectors: {
        auto r = avg_word_embed(normalized, *table_);
        if (!r.embeddable) return std::nullopt;
        return std::move(r.vector);
      }
      case ProviderKind::PrecomputedEmbeddings: {
        const auto* v = table_->find(normalized);
        if (!v) return std::nullopt;
        return *v;
      }
      case ProviderKind::EditDistance:
        break;
    }
    return std::nullopt;
  }

 private:
  SimilarityProvider(ProviderKind kind, std::shared_ptr<const EmbeddingTable> table)
      : kind_(kind), table_(std::move(table)) {
    if (kind_ != ProviderKind::EditDistance && !table_) {
      throw FatalError("embedding provider requires a table");
    }
  }

  ProviderKind kind_;
  std::shared_ptr<const EmbeddingTable> table_;
};

struct Candidate {
  std::string food_id;
  double score = 0;

  bool operator==(const Candidate&) const = default;
};

/// Immutable search structure over a food database. Rows are in food id
/// order. Embedding rows are unit norm (zero for items the word-vector
/// provider could not embed).
struct MatchIndex {
  SimilarityProvider provider = SimilarityProvider::edit_distance();
  std::vector<std::string> food_ids;
  std::vector<std::string> names;  // normalized
  std::size_t dim = 0;
  std::vector<double> vectors;  // row-major, food_ids.size() x dim

  std::size_t rows() const { return food_ids.size(); }
  std::span<const double> row(std::size_t i) const { return {vectors.data() + i * dim, dim}; }
  bool operator==(const MatchIndex& o) const {
    return food_ids == o.food_ids && names == o.names && dim == o.dim && vectors == o.vectors;
  }
};

inline MatchIndex build_index(const FoodDatabase& db, SimilarityProvider provider) {
  MatchIndex index{provider, {}, {}, provider.dim(), {}};
  std::vector<std::string> missing;
  for (const auto& [id, item] : db.items) {
    std::string name = normalize_text(item.name);
    if (provider.kind() != ProviderKind::EditDistance) {
      auto vec = provider.embed(name);
      if (!vec) {
        if (provider.kind() == ProviderKind::PrecomputedEmbeddings) {
          missing.push_back(id);
          continue;
        }
        vec = std::vector<double>(index.dim, 0.0);
      }
      index.vectors.insert(index.vectors.end(), vec->begin(), vec->end());
    }
    index.food_ids.push_back(id);
    index.names.push_back(std::move(name));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw FatalError("no embedding for food items: " + list);
  }
  return index;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

namespace detail {

inline void sort_candidates(std::vector<Candidate>& out) {
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.food_id < b.food_id;
  });
}

}  // namespace detail

/// Exhaustive cosine scan of a unit query vector against an embedding index.
/// Keeps scores strictly above `threshold`, best first, ties by food id.
inline std::vector<Candidate> candidates_for_vector(const MatchIndex& index, std::span<const double> query,
                                                    double threshold) {
  if (query.size() != index.dim) {
    throw FatalError("query dimension " + std::to_string(query.size()) + " != index dimension " +
                     std::to_string(index.dim));
  }
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < index.rows(); ++i) {
    double score = std::clamp(dot(index.row(i), query), -1.0, 1.0);
    if (score > threshold) out.push_back({index.food_ids[i], score});
  }
  detail::sort_candidates(out);
  return out;
}

/// Food items scoring strictly above `threshold` for `name`, best first.
/// Empty when the provider cannot embed the name.
inline std::vector<Candidate> candidates(const MatchIndex& index, std::string_view name, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValidationError("threshold must be in [0, 1]");
  }
  const std::string query = normalize_text(name);
  if (index.provider.kind() == ProviderKind::EditDistance) {
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < index.rows(); ++i) {
      double score = edit_distance_score(query, index.names[i]);
      if (score > threshold) out.push_back({index.food_ids[i], score});
    }
    detail::sort_candidates(out);
    return out;
  }
  auto vec = index.provider.embed(query);
  if (!vec) return {};
  return candidates_for_vector(index, *vec, threshold);
}

}  // namespace nutriset
