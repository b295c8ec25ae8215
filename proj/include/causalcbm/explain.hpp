#pragma once
// Log-likelihood-ratio concept attributions for a predicted configuration.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "causalcbm/noisy_or.hpp"

namespace causalcbm {

struct Explanation {
  std::vector<double> contributions;  // one per concept
  std::vector<std::size_t> top_k;     // concept indices, best first
  std::vector<std::string> top_k_names;
  std::size_t k = 0;
};

// log L(p_k, q_k(config)) - log L(p_k, q_k(no cause)) for every concept.
inline std::vector<double> concept_contributions(const NoisyOrModel& model,
                                                 std::span<const double> p, const Config& config) {
  check_evidence(model, p);
  std::vector<double> out(model.num_concepts());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double q = concept_activation_prob(model, config, k);
    const double q0 = leak_only_activation_prob(model, k);
    out[k] = q == q0 ? 0.0 : std::log(evidence_likelihood(p[k], q)) -
                                 std::log(evidence_likelihood(p[k], q0));
  }
  return out;
}

// Indices sorted by score descending; equal scores keep index order.
inline std::vector<std::size_t> rank_descending(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

inline Explanation top_k_explanation(std::vector<double> contributions, std::size_t k,
                                     const std::vector<std::string>* concept_names = nullptr) {
  if (k < 1) throw UsageError("top-k explanation needs k >= 1");
  Explanation e;
  e.k = k;
  auto order = rank_descending(contributions);
  order.resize(std::min(k, order.size()));
  e.top_k = std::move(order);
  if (concept_names)
    for (auto i : e.top_k) e.top_k_names.push_back(concept_names->at(i));
  e.contributions = std::move(contributions);
  return e;
}

// Which configuration hypothesis an explanation attributes evidence to.
enum class Hypothesis {
  posterior,  // per-config contributions averaged under the posterior
  map,        // contributions for the single MAP configuration
};

inline Hypothesis hypothesis_from_string(const std::string& s) {
  if (s == "posterior") return Hypothesis::posterior;
  if (s == "map") return Hypothesis::map;
  throw UsageError("unknown explanation hypothesis '" + s + "' (expected posterior or map)");
}

// sum_y P(y | p) * concept_contributions(model, p, y)
inline std::vector<double> expected_contributions(const NoisyOrModel& model,
                                                  std::span<const double> p,
                                                  const PosteriorResult& post) {
  std::vector<double> out(model.num_concepts(), 0.0);
  for (const auto& cfg : enumerate_configs(model.num_pathologies())) {
    const double w = post.config_probs[cfg.index()];
    const auto c = concept_contributions(model, p, cfg);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * c[k];
  }
  return out;
}

inline std::vector<double> hypothesis_contributions(const NoisyOrModel& model,
                                                    std::span<const double> p,
                                                    const PosteriorResult& post, Hypothesis h) {
  if (h == Hypothesis::map)
    return concept_contributions(model, p, Config(post.map_index, model.num_pathologies()));
  return expected_contributions(model, p, post);
}

inline Explanation explain(const PosteriorEngine& engine, std::span<const double> p, std::size_t k,
                           Hypothesis h = Hypothesis::posterior) {
  const auto& model = engine.model();
  const auto post = engine.posterior(p);
  return top_k_explanation(hypothesis_contributions(model, p, post, h), k, &model.vocab.concepts);
}

}  // namespace causalcbm
