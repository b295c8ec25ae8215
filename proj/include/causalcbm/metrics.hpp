#pragma once
// Classification, calibration, explanation and graph-faithfulness metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "causalcbm/common.hpp"
#include "causalcbm/expert_matrix.hpp"
#include "causalcbm/noisy_or.hpp"

namespace causalcbm {

// Mann-Whitney AUROC with tied scores counted as half a correctly ordered pair.
inline double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw UsageError("auroc: scores/labels length mismatch");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
  });
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (labels[idx[t]]) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("auroc needs both classes");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// Binary F1; a label with no positives predicted or present scores 1.
inline double f1_score(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> labels) {
  if (predicted.size() != labels.size()) throw UsageError("f1: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    tp += predicted[i] && labels[i];
    fp += predicted[i] && !labels[i];
    fn += !predicted[i] && labels[i];
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

inline std::vector<std::uint8_t> threshold_scores(std::span<const double> scores, double threshold) {
  std::vector<std::uint8_t> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= threshold;
  return out;
}

// Scores and labels are samples x labels; F1 is averaged over label columns.
inline double macro_f1(const Grid<double>& scores, const Grid<std::uint8_t>& labels,
                       double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("F1 threshold must lie in (0,1)");
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols())
    throw UsageError("macro_f1: shape mismatch");
  if (scores.cols() == 0) throw UsageError("macro_f1: no label columns");
  double sum = 0.0;
  std::vector<double> col(scores.rows());
  std::vector<std::uint8_t> lab(scores.rows());
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    for (std::size_t r = 0; r < scores.rows(); ++r) {
      col[r] = scores(r, c);
      lab[r] = labels(r, c);
    }
    sum += f1_score(threshold_scores(col, threshold), lab);
  }
  return sum / static_cast<double>(scores.cols());
}

// Expected calibration error over equal-width bins on [0,1]; the last bin is
// closed on the right.
inline double ece(std::span<const double> scores, std::span<const std::uint8_t> labels,
                  std::size_t bins = 10) {
  if (scores.empty()) throw UsageError("ece on empty input");
  if (scores.size() != labels.size()) throw UsageError("ece: length mismatch");
  if (bins < 1) throw UsageError("ece needs at least one bin");
  std::vector<double> conf(bins, 0.0), hits(bins, 0.0), count(bins, 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    if (!(s >= 0.0 && s <= 1.0)) throw UsageError("ece: score outside [0,1]");
    auto b = static_cast<std::size_t>(s * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;
    conf[b] += s;
    hits[b] += labels[i] ? 1.0 : 0.0;
    count[b] += 1.0;
  }
  const double n = static_cast<double>(scores.size());
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0.0) continue;
    total += (count[b] / n) * std::abs(hits[b] / count[b] - conf[b] / count[b]);
  }
  return total;
}

struct OverlapResult {
  double mean = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // samples with an empty ground-truth set
};

// Mean of |top_k ∩ GT| / |GT| over samples; rankings list concept indices best first.
inline OverlapResult topk_overlap(const std::vector<std::vector<std::size_t>>& rankings,
                                  const std::vector<std::vector<std::size_t>>& ground_truth,
                                  std::size_t k, std::size_t num_concepts) {
  if (k < 1 || k > num_concepts)
    throw UsageError("topk_overlap: k must lie in [1, " + std::to_string(num_concepts) + "]");
  if (rankings.size() != ground_truth.size()) throw UsageError("topk_overlap: length mismatch");
  OverlapResult r;
  double sum = 0.0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto& gt = ground_truth[i];
    if (gt.empty()) {
      ++r.skipped;
      continue;
    }
    const std::set<std::size_t> truth(gt.begin(), gt.end());
    const std::size_t take = std::min(k, rankings[i].size());
    std::size_t hit = 0;
    for (std::size_t t = 0; t < take; ++t) hit += truth.count(rankings[i][t]);
    sum += static_cast<double>(hit) / static_cast<double>(truth.size());
    ++r.evaluated;
  }
  if (r.evaluated == 0) throw UndefinedMetric("topk_overlap: every ground-truth set is empty");
  r.mean = sum / static_cast<double>(r.evaluated);
  return r;
}

struct Faithfulness {
  std::optional<double> strong, weak, none;  // nullopt when the category is empty
};

inline Faithfulness edge_faithfulness(const NoisyOrModel& model, const ExpertMatrix& matrix) {
  if (!(model.vocab == matrix.vocab))
    throw UsageError("edge_faithfulness: model and matrix vocabularies differ");
  double sum[3] = {0, 0, 0};
  std::size_t n[3] = {0, 0, 0};
  for (std::size_t j = 0; j < model.num_causes(); ++j)
    for (std::size_t k = 0; k < model.num_concepts(); ++k) {
      const auto c = static_cast<std::size_t>(matrix.assoc(j, k));
      sum[c] += model.eta(j, k);
      ++n[c];
    }
  auto mean = [&](std::size_t c) -> std::optional<double> {
    if (n[c] == 0) return std::nullopt;
    return sum[c] / static_cast<double>(n[c]);
  };
  return {mean(2), mean(1), mean(0)};
}

struct LabelMetrics {
  std::string name;
  std::optional<double> auroc;  // nullopt when only one class is present
  double f1 = 0.0;
  double ece = 0.0;
};

struct EvalReport {
  std::string model;
  std::size_t num_samples = 0;
  double f1_threshold = 0.5;
  std::size_t ece_bins = 10;
  std::vector<LabelMetrics> labels;
  std::optional<double> macro_auroc;
  double macro_f1 = 0.0;
  double macro_ece = 0.0;
  std::vector<double> topk_overlap;  // index K-1
  std::size_t topk_skipped = 0;
  std::optional<Faithfulness> faithfulness;
};

struct EvalOptions {
  double f1_threshold = 0.5;
  std::size_t ece_bins = 10;
  std::size_t max_k = 5;
};

// predictions/labels: samples x labels. rankings: concept indices best-first per
// sample; ground_truth: present concept indices per sample.
inline EvalReport evaluate_predictions(const std::string& model_name,
                                       const std::vector<std::string>& label_names,
                                       const Grid<double>& predictions,
                                       const Grid<std::uint8_t>& labels,
                                       const std::vector<std::vector<std::size_t>>& rankings,
                                       const std::vector<std::vector<std::size_t>>& ground_truth,
                                       std::size_t num_concepts, const EvalOptions& opt = {}) {
  if (predictions.rows() == 0) throw UsageError("evaluate: no samples");
  if (predictions.cols() != label_names.size() || labels.cols() != label_names.size() ||
      labels.rows() != predictions.rows())
    throw UsageError("evaluate: prediction/label shape mismatch");
  EvalReport rep;
  rep.model = model_name;
  rep.num_samples = predictions.rows();
  rep.f1_threshold = opt.f1_threshold;
  rep.ece_bins = opt.ece_bins;

  double auc_sum = 0.0, ece_sum = 0.0;
  std::size_t auc_n = 0;
  std::vector<double> col(predictions.rows());
  std::vector<std::uint8_t> lab(predictions.rows());
  for (std::size_t c = 0; c < label_names.size(); ++c) {
    for (std::size_t r = 0; r < predictions.rows(); ++r) {
      col[r] = predictions(r, c);
      lab[r] = labels(r, c);
    }
    LabelMetrics m;
    m.name = label_names[c];
    try {
      m.auroc = auroc(col, lab);
      auc_sum += *m.auroc;
      ++auc_n;
    } catch (const UndefinedMetric&) {
    }
    m.f1 = f1_score(threshold_scores(col, opt.f1_threshold), lab);
    m.ece = ece(col, lab, opt.ece_bins);
    ece_sum += m.ece;
    rep.labels.push_back(m);
  }
  if (auc_n) rep.macro_auroc = auc_sum / static_cast<double>(auc_n);
  rep.macro_f1 = macro_f1(predictions, labels, opt.f1_threshold);
  rep.macro_ece = ece_sum / static_cast<double>(label_names.size());

  const std::size_t max_k = std::min(opt.max_k, num_concepts);
  for (std::size_t k = 1; k <= max_k; ++k) {
    try {
      const auto o = topk_overlap(rankings, ground_truth, k, num_concepts);
      rep.topk_overlap.push_back(o.mean);
      rep.topk_skipped = o.skipped;
    } catch (const UndefinedMetric&) {
      break;
    }
  }
  return rep;
}

}  // namespace causalcbm
