#pragma once
// End-to-end evaluation of the causal model and the tree baseline on a
// dataset, and plain-text report tables.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "causalcbm/baseline.hpp"
#include "causalcbm/explain.hpp"
#include "causalcbm/metrics.hpp"
#include "causalcbm/noisy_or.hpp"

namespace causalcbm {

inline Grid<std::uint8_t> label_matrix(const Dataset& d) {
  Grid<std::uint8_t> y(d.size(), d.vocab.num_labels());
  for (std::size_t i = 0; i < d.size(); ++i)
    std::copy(d.cases[i].labels.begin(), d.cases[i].labels.end(), y.row(i).begin());
  return y;
}

inline std::vector<std::vector<std::size_t>> ground_truth_concepts(const Dataset& d) {
  std::vector<std::vector<std::size_t>> gt(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t k = 0; k < d.cases[i].concept_true.size(); ++k)
      if (d.cases[i].concept_true[k]) gt[i].push_back(k);
  return gt;
}

inline void require_same_vocabulary(const Vocabulary& a, const Vocabulary& b) {
  auto first_diff = [](const std::vector<std::string>& x, const std::vector<std::string>& y,
                       const char* what) {
    for (std::size_t i = 0; i < std::max(x.size(), y.size()); ++i)
      if (i >= x.size() || i >= y.size() || x[i] != y[i])
        throw DataError(std::string("vocabulary mismatch in ") + what + ": '" +
                        (i < x.size() ? x[i] : "<none>") + "' vs '" +
                        (i < y.size() ? y[i] : "<none>") + "'");
  };
  first_diff(a.cause_names(), b.cause_names(), "pathologies");
  first_diff(a.concepts, b.concepts, "concepts");
}

struct CausalPredictions {
  Grid<double> marginals;  // samples x labels
  std::vector<PosteriorResult> posteriors;
  std::vector<std::vector<std::size_t>> rankings;  // full LLR ranking per sample
};

inline CausalPredictions predict_causal(const NoisyOrModel& model, const Dataset& d,
                                        Hypothesis h = Hypothesis::posterior) {
  require_same_vocabulary(model.vocab, d.vocab);
  const PosteriorEngine engine(model);
  CausalPredictions out{Grid<double>(d.size(), model.vocab.num_labels()), {}, {}};
  out.posteriors.reserve(d.size());
  out.rankings.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& p = d.cases[i].concept_prob;
    auto post = engine.posterior(p);
    std::copy(post.marginals.begin(), post.marginals.end(), out.marginals.row(i).begin());
    out.rankings.push_back(rank_descending(hypothesis_contributions(model, p, post, h)));
    out.posteriors.push_back(std::move(post));
  }
  return out;
}

inline EvalReport evaluate_causal(const NoisyOrModel& model, const Dataset& d,
                                  const ExpertMatrix* matrix = nullptr,
                                  const EvalOptions& opt = {}, std::string name = {},
                                  Hypothesis h = Hypothesis::posterior) {
  const auto pred = predict_causal(model, d, h);
  if (name.empty()) name = "causal-" + model.meta.mode;
  auto rep = evaluate_predictions(name, d.vocab.label_names(), pred.marginals, label_matrix(d),
                                  pred.rankings, ground_truth_concepts(d),
                                  d.vocab.num_concepts(), opt);
  if (matrix) rep.faithfulness = edge_faithfulness(model, *matrix);
  return rep;
}

inline EvalReport evaluate_baseline(const TreeBaseline& b, const Dataset& d,
                                    const EvalOptions& opt = {}, std::string name = "tree-baseline") {
  require_same_vocabulary(b.vocab, d.vocab);
  Grid<double> pred(d.size(), d.vocab.num_labels());
  std::vector<std::vector<std::size_t>> rankings;
  rankings.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& p = d.cases[i].concept_prob;
    const auto out = tree_predict(b, p);
    std::copy(out.begin(), out.end(), pred.row(i).begin());
    rankings.push_back(baseline_explanation(p, p.size()));
  }
  return evaluate_predictions(name, d.vocab.label_names(), pred, label_matrix(d), rankings,
                              ground_truth_concepts(d), d.vocab.num_concepts(), opt);
}

namespace detail {

inline std::string fmt4(const std::optional<double>& v) {
  if (!v) return "    n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%7.4f", *v);
  return buf;
}

inline std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

}  // namespace detail

// Model | AUROC | F1 | ECE, plus a per-label breakdown and the top-K curve.
inline std::string format_report(const EvalReport& r) {
  std::string out;
  out += detail::pad("Model", 22) + "  AUROC      F1     ECE\n";
  out += detail::pad(r.model, 22) + detail::fmt4(r.macro_auroc) + " " + detail::fmt4(r.macro_f1) +
         " " + detail::fmt4(r.macro_ece) + "\n\n";
  out += detail::pad("Label", 30) + "  AUROC      F1     ECE\n";
  for (const auto& l : r.labels)
    out += detail::pad(l.name, 30) + detail::fmt4(l.auroc) + " " + detail::fmt4(l.f1) + " " +
           detail::fmt4(l.ece) + "\n";
  if (!r.topk_overlap.empty()) {
    out += "\nTop-K concept overlap:";
    for (std::size_t k = 0; k < r.topk_overlap.size(); ++k)
      out += "  K=" + std::to_string(k + 1) + " " + detail::fmt4(r.topk_overlap[k]);
    out += "\n";
  }
  if (r.faithfulness) {
    out += "\n" + detail::pad("Edge weights", 22) + " Strong    Weak    None\n";
    out += detail::pad(r.model, 22) + detail::fmt4(r.faithfulness->strong) + " " +
           detail::fmt4(r.faithfulness->weak) + " " + detail::fmt4(r.faithfulness->none) + "\n";
  }
  return out;
}

inline std::string format_faithfulness(const std::string& name, const Faithfulness& f) {
  return detail::pad("Model", 22) + " Strong    Weak    None\n" + detail::pad(name, 22) +
         detail::fmt4(f.strong) + " " + detail::fmt4(f.weak) + " " + detail::fmt4(f.none) + "\n";
}

}  // namespace causalcbm
