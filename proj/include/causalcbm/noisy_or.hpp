#pragma once
// Noisy-OR generative model of pathology -> concept activation and its exact
// Bayesian inversion by enumeration of every pathology configuration.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "causalcbm/common.hpp"
#include "causalcbm/vocabulary.hpp"

namespace causalcbm {

// Provenance for a fitted model; serialized under "meta".
struct ModelMeta {
  std::string mode = "unfitted";
  std::uint64_t seed = 0;
  double learning_rate = 0.0;
  int max_epochs = 0;
  double tol = 0.0;
  double prior_alpha = 0.0;
  int final_epoch = 0;
  std::string stop_reason;

  friend bool operator==(const ModelMeta&, const ModelMeta&) = default;
};

struct NoisyOrModel {
  Vocabulary vocab;
  Grid<double> eta;          // cause strength, causes x concepts (NRF is the last row)
  std::vector<double> leak;  // per-concept leak probability
  std::vector<double> prior; // P(config), indexed by config index
  Grid<std::uint8_t> mask;   // allowed edges
  ModelMeta meta;

  NoisyOrModel() = default;
  explicit NoisyOrModel(Vocabulary v)
      : vocab(std::move(v)),
        eta(vocab.num_causes(), vocab.num_concepts(), 0.0),
        leak(vocab.num_concepts(), 0.0),
        prior(vocab.num_configs(), 1.0 / static_cast<double>(vocab.num_configs())),
        mask(vocab.num_causes(), vocab.num_concepts(), 1) {}

  std::size_t num_pathologies() const noexcept { return vocab.num_pathologies(); }
  std::size_t num_causes() const noexcept { return vocab.num_causes(); }
  std::size_t num_concepts() const noexcept { return vocab.num_concepts(); }
  std::size_t num_configs() const noexcept { return vocab.num_configs(); }

  std::size_t unmasked_edges() const {
    std::size_t n = 0;
    for (auto m : mask.flat()) n += (m != 0);
    return n;
  }

  // Throws DataError when any model invariant is violated.
  void validate() const {
    vocab.validate();
    const std::size_t C = num_causes(), K = num_concepts();
    if (eta.rows() != C || eta.cols() != K || mask.rows() != C || mask.cols() != K)
      throw DataError("eta/mask must be " + std::to_string(C) + "x" + std::to_string(K));
    if (leak.size() != K) throw DataError("lambda must have " + std::to_string(K) + " entries");
    if (prior.size() != num_configs())
      throw DataError("prior must have " + std::to_string(num_configs()) + " entries");
    const double hi = 1.0 - kProbEpsilon;
    for (std::size_t j = 0; j < C; ++j)
      for (std::size_t k = 0; k < K; ++k) {
        const double e = eta(j, k);
        if (!(e >= 0.0 && e <= hi))
          throw DataError("eta[" + std::to_string(j) + "][" + std::to_string(k) +
                          "] outside [0, 1-eps]");
        if (mask(j, k) > 1) throw DataError("mask entries must be 0 or 1");
        if (!mask(j, k) && e != 0.0)
          throw DataError("eta[" + std::to_string(j) + "][" + std::to_string(k) +
                          "] nonzero on a masked edge");
      }
    for (std::size_t k = 0; k < K; ++k)
      if (!(leak[k] >= 0.0 && leak[k] <= hi))
        throw DataError("lambda[" + std::to_string(k) + "] outside [0, 1-eps]");
    double s = 0.0;
    for (double p : prior) {
      if (!(p > 0.0) || !std::isfinite(p)) throw DataError("prior entries must be positive");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-12) throw DataError("prior does not sum to 1");
  }
};

// q_k(y) = 1 - (1 - lambda_k) * prod_{active j} (1 - eta_jk), clamped to [eps, 1-eps].
inline double concept_activation_prob(const NoisyOrModel& model, const Config& config,
                                      std::size_t k) {
  if (k >= model.num_concepts())
    throw UsageError("concept index " + std::to_string(k) + " out of range");
  if (config.num_pathologies() != model.num_pathologies())
    throw UsageError("config has " + std::to_string(config.num_pathologies()) +
                     " pathologies, model has " + std::to_string(model.num_pathologies()));
  double fail = 1.0 - model.leak[k];
  for (std::size_t j = 0; j < model.num_causes(); ++j)
    if (config.cause_active(j)) fail *= 1.0 - model.eta(j, k);
  return clamp_prob(1.0 - fail);
}

// Activation with every cause off, computed on the same arithmetic path as
// concept_activation_prob so an edge-free concept matches it bit-for-bit.
inline double leak_only_activation_prob(const NoisyOrModel& model, std::size_t k) {
  if (k >= model.num_concepts())
    throw UsageError("concept index " + std::to_string(k) + " out of range");
  const double fail = 1.0 - model.leak[k];
  return clamp_prob(1.0 - fail);
}

// Soft (virtual) evidence: P(observation | q) = p*q + (1-p)*(1-q).
inline double evidence_likelihood(double p, double q) noexcept {
  return p * q + (1.0 - p) * (1.0 - q);
}

inline void check_evidence(const NoisyOrModel& model, std::span<const double> p) {
  if (p.size() != model.num_concepts())
    throw UsageError("evidence has " + std::to_string(p.size()) + " entries, model has " +
                     std::to_string(model.num_concepts()) + " concepts");
  for (std::size_t k = 0; k < p.size(); ++k)
    if (!(p[k] >= 0.0 && p[k] <= 1.0))
      throw UsageError("concept probability " + std::to_string(k) + " outside [0,1]");
}

inline double joint_evidence_loglik(const NoisyOrModel& model, std::span<const double> p,
                                    const Config& config) {
  check_evidence(model, p);
  double ll = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    ll += std::log(evidence_likelihood(p[k], concept_activation_prob(model, config, k)));
  return ll;
}

struct PosteriorResult {
  std::vector<double> config_probs;  // indexed by config index
  std::vector<double> marginals;     // pathologies then NRF
  std::uint32_t map_index = 0;
};

// Caches q_k(y) for every configuration so repeated inference is a table lookup.
class PosteriorEngine {
 public:
  explicit PosteriorEngine(const NoisyOrModel& model)
      : model_(&model),
        activation_(model.num_configs(), model.num_concepts()),
        log_prior_(model.num_configs()) {
    for (const auto& cfg : enumerate_configs(model.num_pathologies())) {
      for (std::size_t k = 0; k < model.num_concepts(); ++k)
        activation_(cfg.index(), k) = concept_activation_prob(model, cfg, k);
      log_prior_[cfg.index()] = std::log(model.prior[cfg.index()]);
    }
  }

  const NoisyOrModel& model() const noexcept { return *model_; }
  double activation(std::uint32_t config, std::size_t k) const { return activation_(config, k); }

  PosteriorResult posterior(std::span<const double> p) const {
    check_evidence(*model_, p);
    const std::size_t n = model_->num_configs();
    const std::size_t K = model_->num_concepts();
    std::vector<double> logw(n);
    for (std::size_t i = 0; i < n; ++i) {
      double ll = log_prior_[i];
      for (std::size_t k = 0; k < K; ++k)
        ll += std::log(evidence_likelihood(p[k], activation_(i, k)));
      logw[i] = ll;
    }
    const double z = log_sum_exp(logw);

    PosteriorResult r;
    r.config_probs.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.config_probs[i] = std::exp(logw[i] - z);

    const std::size_t P = model_->num_pathologies();
    r.marginals.assign(P + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < P; ++j)
        if ((i >> j) & 1u) r.marginals[j] += r.config_probs[i];
    r.marginals[P] = r.config_probs[0];

    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (r.config_probs[i] > r.config_probs[best]) best = i;
    r.map_index = static_cast<std::uint32_t>(best);
    return r;
  }

 private:
  const NoisyOrModel* model_;
  Grid<double> activation_;
  std::vector<double> log_prior_;
};

inline PosteriorResult posterior(const NoisyOrModel& model, std::span<const double> p) {
  return PosteriorEngine(model).posterior(p);
}

}  // namespace causalcbm
