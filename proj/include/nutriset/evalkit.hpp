#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nutriset/aggregator.hpp"
#include "nutriset/error.hpp"

namespace nutriset::eval {

inline constexpr std::size_t kRegressionOutputs = 4;  // kcal, fat, protein, carbs

using Label = std::vector<uint8_t>;  // multi-hot, one byte per vocab position

inline Label multi_hot(const std::vector<std::size_t>& indices, std::size_t n) {
  Label label(n, 0);
  for (std::size_t i : indices) {
    if (i >= n) throw ValidationError("label index " + std::to_string(i) + " out of range");
    label[i] = 1;
  }
  return label;
}

struct MultiTaskOutput {
  double kcal = 0;
  double fat_g = 0;
  double protein_g = 0;
  double carbs_g = 0;
  std::vector<double> ingredient_logits;
};

struct MultiTaskTarget {
  NutritionFacts facts;
  Label label;
};

struct LossBreakdown {
  double l1_kcal = 0;
  double l1_fat = 0;
  double l1_prot = 0;
  double l1_carb = 0;
  double bce = 0;
  double gamma = 0;
  double total = 0;

  double regression() const { return l1_kcal + l1_fat + l1_prot + l1_carb; }
};

struct MetricsTable {
  double kcal_rel = 0;
  double kcal_abs = 0;
  double protein_abs = 0;
  double fat_abs = 0;
  double carbs_abs = 0;
  std::size_t samples = 0;
  std::size_t rel_samples = 0;  // samples with truth kcal > 0
};

/// |pred - truth| / truth. nullopt when truth <= 0 (excluded from the
/// relative metric, still counted in absolute ones).
inline std::optional<double> rel_error(double pred, double truth) {
  if (!(truth > 0)) return std::nullopt;
  return std::abs(pred - truth) / truth;
}

inline double smooth_l1(double pred, double truth, double beta = 1.0) {
  if (!(beta > 0)) throw ValidationError("smooth L1 beta must be > 0");
  const double d = pred - truth;
  const double ad = std::abs(d);
  return ad < beta ? 0.5 * d * d / beta : ad - 0.5 * beta;
}

/// d smooth_l1 / d pred.
inline double smooth_l1_grad(double pred, double truth, double beta = 1.0) {
  const double d = pred - truth;
  if (std::abs(d) < beta) return d / beta;
  return d > 0 ? 1.0 : -1.0;
}

/// -[y log s(z) + (1-y) log(1 - s(z))] in the overflow-free form
/// max(z, 0) - z y + log1p(exp(-|z|)). Saturated logits (+-inf) give 0 when
/// they agree with the label and +inf otherwise.
inline double bce_term(double z, double y) {
  if (std::isinf(z)) {
    const double p = z > 0 ? 1.0 : 0.0;
    return p == y ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Mean BCE over the vocab positions.
inline double bce(std::span<const double> logits, const Label& label) {
  if (logits.size() != label.size()) throw ValidationError("logit/label length mismatch");
  if (logits.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += bce_term(logits[i], label[i]);
  return sum / static_cast<double>(logits.size());
}

inline LossBreakdown multitask_loss(const MultiTaskOutput& out, const MultiTaskTarget& tgt, double gamma,
                                    double beta = 1.0) {
  if (!(gamma >= 0)) throw ValidationError("gamma must be >= 0");
  LossBreakdown b;
  b.l1_kcal = smooth_l1(out.kcal, tgt.facts.kcal, beta);
  b.l1_fat = smooth_l1(out.fat_g, tgt.facts.fat_g, beta);
  b.l1_prot = smooth_l1(out.protein_g, tgt.facts.protein_g, beta);
  b.l1_carb = smooth_l1(out.carbs_g, tgt.facts.carbs_g, beta);
  b.bce = bce(out.ingredient_logits, tgt.label);
  b.gamma = gamma;
  b.total = b.l1_kcal + b.l1_fat + b.l1_prot + b.l1_carb + gamma * b.bce;
  return b;
}

/// Component-wise train means and prior log-odds per vocab position.
class MeanBaseline {
 public:
  explicit MeanBaseline(const std::vector<MultiTaskTarget>& train) {
    if (train.empty()) throw ValidationError("mean baseline needs training samples");
    const std::size_t n = train.front().label.size();
    std::vector<double> positives(n, 0.0);
    for (const auto& t : train) {
      if (t.label.size() != n) throw ValidationError("inconsistent label lengths");
      means_ += t.facts;
      for (std::size_t i = 0; i < n; ++i) positives[i] += t.label[i];
    }
    const auto count = static_cast<double>(train.size());
    means_ = means_.scaled(1.0 / count);
    logits_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = positives[i] / count;
      logits_[i] = std::log(p) - std::log1p(-p);  // +-inf at p in {0, 1}
    }
  }

  const NutritionFacts& means() const { return means_; }
  const std::vector<double>& prior_logits() const { return logits_; }

  MultiTaskOutput predict() const {
    return {means_.kcal, means_.fat_g, means_.protein_g, means_.carbs_g, logits_};
  }

 private:
  NutritionFacts means_;
  std::vector<double> logits_;
};

/// Predicts the targets of a uniformly drawn training recipe.
class RandomBaseline {
 public:
  RandomBaseline(std::vector<MultiTaskTarget> train_recipes, uint64_t seed)
      : recipes_(std::move(train_recipes)), rng_(seed) {
    if (recipes_.empty()) throw ValidationError("random baseline needs training recipes");
  }

  /// Index of the next drawn recipe; rejection sampling keeps draws uniform
  /// and identical across standard libraries.
  std::size_t draw() {
    const uint64_t n = recipes_.size();
    const uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % n;
    uint64_t r = 0;
    do {
      r = rng_();
    } while (r >= limit);
    return static_cast<std::size_t>(r % n);
  }

  MultiTaskOutput predict() {
    const MultiTaskTarget& t = recipes_[draw()];
    MultiTaskOutput out{t.facts.kcal, t.facts.fat_g, t.facts.protein_g, t.facts.carbs_g, {}};
    out.ingredient_logits.reserve(t.label.size());
    for (uint8_t y : t.label) {
      out.ingredient_logits.push_back(y ? std::numeric_limits<double>::infinity()
                                        : -std::numeric_limits<double>::infinity());
    }
    return out;
  }

 private:
  std::vector<MultiTaskTarget> recipes_;
  std::mt19937_64 rng_;
};

struct GammaCalibration {
  double gamma = 1.0;
  double regression_loss = 0;  // mean summed smooth-L1 of the mean baseline
  double bce_loss = 0;         // mean BCE of the prior-logit predictor
  bool degenerate = false;     // bce_loss == 0, gamma fell back to 1
};

/// gamma = regression / bce, or 1 (degenerate) when bce is zero.
inline GammaCalibration balance_gamma(double regression_loss, double bce_loss) {
  GammaCalibration g{1.0, regression_loss, bce_loss, false};
  if (!(bce_loss > 0) || !std::isfinite(bce_loss)) {
    g.degenerate = true;
    return g;
  }
  g.gamma = regression_loss / bce_loss;
  return g;
}

/// Balances the BCE term against the regression terms using the losses of
/// the mean-baseline predictor over the training targets.
inline GammaCalibration calibrate_gamma(const std::vector<MultiTaskTarget>& train, double beta = 1.0) {
  const MeanBaseline baseline(train);
  const MultiTaskOutput pred = baseline.predict();
  double regression = 0;
  double cross_entropy = 0;
  for (const auto& t : train) {
    const LossBreakdown b = multitask_loss(pred, t, 0.0, beta);
    regression += b.regression();
    cross_entropy += b.bce;
  }
  const auto n = static_cast<double>(train.size());
  return balance_gamma(regression / n, cross_entropy / n);
}

/// Mean relative kcal error (truth > 0 only) and mean absolute errors.
inline MetricsTable evaluate(const std::vector<MultiTaskOutput>& preds, const std::vector<MultiTaskTarget>& tgts) {
  if (preds.size() != tgts.size()) throw ValidationError("prediction/target count mismatch");
  MetricsTable m;
  m.samples = preds.size();
  if (preds.empty()) return m;
  double rel_sum = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    const auto& t = tgts[i].facts;
    if (auto r = rel_error(p.kcal, t.kcal)) {
      rel_sum += *r;
      ++m.rel_samples;
    }
    m.kcal_abs += std::abs(p.kcal - t.kcal);
    m.protein_abs += std::abs(p.protein_g - t.protein_g);
    m.fat_abs += std::abs(p.fat_g - t.fat_g);
    m.carbs_abs += std::abs(p.carbs_g - t.carbs_g);
  }
  const auto n = static_cast<double>(m.samples);
  m.kcal_rel = m.rel_samples ? rel_sum / static_cast<double>(m.rel_samples) : 0.0;
  m.kcal_abs /= n;
  m.protein_abs /= n;
  m.fat_abs /= n;
  m.carbs_abs /= n;
  return m;
}

// ---------------------------------------------------------------------------
// Reference model for checking the loss gradient without a deep-learning
// stack: an affine map from a feature vector to the 4 + n network outputs.

struct LinearModel {
  std::size_t features = 0;
  std::size_t vocab = 0;
  std::vector<double> params;  // weights (outputs x features, row-major), then biases

  LinearModel(std::size_t f, std::size_t n) : features(f), vocab(n), params(param_count(f, n), 0.0) {}

  static std::size_t param_count(std::size_t f, std::size_t n) { return (kRegressionOutputs + n) * (f + 1); }
  std::size_t outputs() const { return kRegressionOutputs + vocab; }
  std::size_t bias_offset() const { return outputs() * features; }

  MultiTaskOutput forward(std::span<const double> x) const { return forward_with(params, x); }

  MultiTaskOutput forward_with(std::span<const double> p, std::span<const double> x) const {
    if (x.size() != features) throw ValidationError("feature length mismatch");
    std::vector<double> y(outputs());
    for (std::size_t o = 0; o < outputs(); ++o) {
      double s = p[bias_offset() + o];
      for (std::size_t f = 0; f < features; ++f) s += p[o * features + f] * x[f];
      y[o] = s;
    }
    return {y[0], y[1], y[2], y[3], std::vector<double>(y.begin() + kRegressionOutputs, y.end())};
  }
};

struct Example {
  std::vector<double> features;
  MultiTaskTarget target;
};

/// Mean multi-task loss of the model with parameters `p` over the batch.
inline double batch_loss(const LinearModel& model, std::span<const double> p, const std::vector<Example>& batch,
                         double gamma, double beta = 1.0) {
  if (batch.empty()) return 0.0;
  double sum = 0;
  for (const auto& ex : batch) sum += multitask_loss(model.forward_with(p, ex.features), ex.target, gamma, beta).total;
  return sum / static_cast<double>(batch.size());
}

/// Analytic gradient of batch_loss with respect to every parameter.
inline std::vector<double> loss_gradient(const LinearModel& model, std::span<const double> p,
                                         const std::vector<Example>& batch, double gamma, double beta = 1.0) {
  std::vector<double> grad(p.size(), 0.0);
  if (batch.empty()) return grad;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const double inv_vocab = model.vocab ? 1.0 / static_cast<double>(model.vocab) : 0.0;
  std::vector<double> d_out(model.outputs());
  for (const auto& ex : batch) {
    const MultiTaskOutput y = model.forward_with(p, ex.features);
    const NutritionFacts& t = ex.target.facts;
    d_out[0] = smooth_l1_grad(y.kcal, t.kcal, beta);
    d_out[1] = smooth_l1_grad(y.fat_g, t.fat_g, beta);
    d_out[2] = smooth_l1_grad(y.protein_g, t.protein_g, beta);
    d_out[3] = smooth_l1_grad(y.carbs_g, t.carbs_g, beta);
    for (std::size_t i = 0; i < model.vocab; ++i) {
      d_out[kRegressionOutputs + i] = gamma * inv_vocab * (sigmoid(y.ingredient_logits[i]) - ex.target.label[i]);
    }
    for (std::size_t o = 0; o < model.outputs(); ++o) {
      const double g = d_out[o] * inv_batch;
      for (std::size_t f = 0; f < model.features; ++f) grad[o * model.features + f] += g * ex.features[f];
      grad[model.bias_offset() + o] += g;
    }
  }
  return grad;
}

/// Central differences of batch_loss with step h.
inline std::vector<double> finite_difference_gradient(const LinearModel& model, std::span<const double> p,
                                                      const std::vector<Example>& batch, double gamma,
                                                      double beta = 1.0, double h = 1e-5) {
  std::vector<double> shifted(p.begin(), p.end());
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = shifted[i];
    shifted[i] = orig + h;
    const double up = batch_loss(model, shifted, batch, gamma, beta);
    shifted[i] = orig - h;
    const double down = batch_loss(model, shifted, batch, gamma, beta);
    shifted[i] = orig;
    grad[i] = (up - down) / (2 * h);
  }
  return grad;
}

/// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double relative_gradient_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  if (scale == 0) return 0.0;
  return std::sqrt(diff) / scale;
}

struct GradientCheckReport {
  std::size_t points = 0;
  std::size_t failures = 0;
  double worst_error = 0;
};

/// Random-point gradient check of the reference model: random parameters,
/// features, targets and labels at every point.
inline GradientCheckReport run_gradient_check(std::size_t points, std::size_t features, std::size_t vocab,
                                              std::size_t batch_size, double gamma, uint64_t seed,
                                              double tolerance = 1e-4, double h = 1e-5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  GradientCheckReport report;
  LinearModel model(features, vocab);
  for (std::size_t point = 0; point < points; ++point) {
    for (double& w : model.params) w = 0.5 * normal(rng);
    std::vector<Example> batch(batch_size);
    for (auto& ex : batch) {
      ex.features.resize(features);
      for (double& x : ex.features) x = normal(rng);
      ex.target.facts = {3 * normal(rng), std::abs(normal(rng)), std::abs(normal(rng)), 2 * std::abs(normal(rng))};
      ex.target.label.resize(vocab);
      for (auto& y : ex.target.label) y = coin(rng) ? 1 : 0;
    }
    const auto analytic = loss_gradient(model, model.params, batch, gamma);
    const auto numeric = finite_difference_gradient(model, model.params, batch, gamma, 1.0, h);
    const double err = relative_gradient_error(analytic, numeric);
    report.worst_error = std::max(report.worst_error, err);
    if (!(err < tolerance)) ++report.failures;
    ++report.points;
  }
  return report;
}

}  // namespace nutriset::eval
