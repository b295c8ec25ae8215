#pragma once
// Prior estimation and masked maximum-likelihood fitting of the noisy-OR
// parameters by full-batch gradient descent on binary cross-entropy.
//
// Unmasked strengths and leaks are stored as logits (eta = sigmoid(theta),
// lambda = sigmoid(phi)); masked strengths are held at exactly zero.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "causalcbm/common.hpp"
#include "causalcbm/dataset.hpp"
#include "causalcbm/expert_matrix.hpp"
#include "causalcbm/noisy_or.hpp"

namespace causalcbm {

enum class FitMode { constrained, learned };

inline const char* to_string(FitMode m) {
  return m == FitMode::constrained ? "constrained" : "learned";
}

inline FitMode fit_mode_from_string(const std::string& s) {
  if (s == "constrained") return FitMode::constrained;
  if (s == "learned") return FitMode::learned;
  throw UsageError("unknown fit mode '" + s + "' (expected constrained or learned)");
}

struct FitConfig {
  FitMode mode = FitMode::constrained;
  double learning_rate = 20.0;
  int max_epochs = 20000;
  double tol = 1e-10;
  double prior_alpha = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw UsageError("learning_rate must be > 0");
    if (max_epochs < 1) throw UsageError("max_epochs must be >= 1");
    if (!(tol >= 0.0)) throw UsageError("tol must be >= 0");
    if (!(prior_alpha >= 0.0) || !std::isfinite(prior_alpha))
      throw UsageError("prior_alpha must be >= 0");
  }
};

enum class StopReason { converged, max_epochs };

inline const char* to_string(StopReason r) {
  return r == StopReason::converged ? "converged" : "max_epochs";
}

struct FitTrace {
  double initial_loss = 0.0;  // loss at the initial parameters
  std::vector<double> loss;   // loss after each epoch's update
  int final_epoch = 0;
  StopReason stop_reason = StopReason::max_epochs;
};

// prior[i] = (count_i + alpha) / (N + 2^P * alpha). With alpha = 0 unobserved
// configs get probability 0.
inline std::vector<double> estimate_prior(std::span<const std::uint32_t> config_indices,
                                          std::size_t num_pathologies, double alpha) {
  if (config_indices.empty()) throw UsageError("cannot estimate a prior from zero samples");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw UsageError("prior alpha must be >= 0");
  const std::size_t n_cfg = std::size_t{1} << num_pathologies;
  std::vector<double> counts(n_cfg, 0.0);
  for (auto idx : config_indices) {
    if (idx >= n_cfg) throw UsageError("config index out of range in prior estimation");
    counts[idx] += 1.0;
  }
  const double denom = static_cast<double>(config_indices.size()) + static_cast<double>(n_cfg) * alpha;
  std::vector<double> prior(n_cfg);
  for (std::size_t i = 0; i < n_cfg; ++i) prior[i] = (counts[i] + alpha) / denom;
  return prior;
}

inline std::vector<double> estimate_prior(const Dataset& d, double alpha) {
  std::vector<std::uint32_t> idx;
  idx.reserve(d.size());
  for (const auto& c : d.cases) idx.push_back(c.config().index());
  return estimate_prior(idx, d.vocab.num_pathologies(), alpha);
}

struct InitialParams {
  Grid<double> eta;
  std::vector<double> leak;
  Grid<std::uint8_t> mask;
};

inline constexpr double kInitStrong = 0.6;
inline constexpr double kInitWeak = 0.3;
inline constexpr double kInitUniform = 0.3;
inline constexpr double kInitLeak = 0.05;

inline InitialParams init_params(const ExpertMatrix& matrix, FitMode mode) {
  matrix.validate();
  const std::size_t C = matrix.vocab.num_causes(), K = matrix.vocab.num_concepts();
  InitialParams p{Grid<double>(C, K, 0.0), std::vector<double>(K, kInitLeak),
                  Grid<std::uint8_t>(C, K, 0)};
  for (std::size_t j = 0; j < C; ++j)
    for (std::size_t k = 0; k < K; ++k) {
      if (mode == FitMode::learned) {
        p.mask(j, k) = 1;
        p.eta(j, k) = kInitUniform;
        continue;
      }
      switch (matrix.assoc(j, k)) {
        case Association::Strong: p.mask(j, k) = 1; p.eta(j, k) = kInitStrong; break;
        case Association::Weak: p.mask(j, k) = 1; p.eta(j, k) = kInitWeak; break;
        case Association::None: break;
      }
    }
  return p;
}

// Per-(config, concept) counts; the BCE loss over a dataset depends on the
// data only through these.
struct ConceptStatistics {
  std::size_t num_samples = 0;
  std::size_t num_concepts = 0;
  std::vector<double> config_count;  // n_y
  Grid<double> positive_count;       // s_yk: concept k present among samples in config y

  static ConceptStatistics from(const Dataset& d) {
    ConceptStatistics s;
    s.num_samples = d.size();
    s.num_concepts = d.vocab.num_concepts();
    s.config_count.assign(d.vocab.num_configs(), 0.0);
    s.positive_count = Grid<double>(d.vocab.num_configs(), d.vocab.num_concepts(), 0.0);
    for (const auto& c : d.cases) {
      const auto y = c.config().index();
      s.config_count[y] += 1.0;
      for (std::size_t k = 0; k < s.num_concepts; ++k) s.positive_count(y, k) += c.concept_true[k];
    }
    return s;
  }
};

// Mean over samples and concepts of -[c log q + (1-c) log(1-q)].
inline double bce_loss(const NoisyOrModel& model, const ConceptStatistics& stats) {
  if (stats.num_samples == 0) throw UsageError("bce_loss on an empty dataset");
  double total = 0.0;
  for (const auto& cfg : enumerate_configs(model.num_pathologies())) {
    const double n = stats.config_count[cfg.index()];
    if (n == 0.0) continue;
    for (std::size_t k = 0; k < model.num_concepts(); ++k) {
      const double q = concept_activation_prob(model, cfg, k);
      const double s = stats.positive_count(cfg.index(), k);
      total -= s * std::log(q) + (n - s) * std::log1p(-q);
    }
  }
  return total / (static_cast<double>(stats.num_samples) * static_cast<double>(stats.num_concepts));
}

inline double bce_loss(const NoisyOrModel& model, const Dataset& d) {
  return bce_loss(model, ConceptStatistics::from(d));
}

// d loss / d theta (edge logits) and d loss / d phi (leak logits).
struct Gradients {
  Grid<double> eta_logit;
  std::vector<double> leak_logit;
};

inline Gradients loss_gradients(const NoisyOrModel& model, const ConceptStatistics& stats) {
  if (stats.num_samples == 0) throw UsageError("loss_gradients on an empty dataset");
  const std::size_t C = model.num_causes(), K = model.num_concepts();
  Gradients g{Grid<double>(C, K, 0.0), std::vector<double>(K, 0.0)};
  const double scale =
      1.0 / (static_cast<double>(stats.num_samples) * static_cast<double>(stats.num_concepts));

  for (const auto& cfg : enumerate_configs(model.num_pathologies())) {
    const double n = stats.config_count[cfg.index()];
    if (n == 0.0) continue;
    for (std::size_t k = 0; k < K; ++k) {
      double fail_causes = 1.0;
      for (std::size_t j = 0; j < C; ++j)
        if (cfg.cause_active(j)) fail_causes *= 1.0 - model.eta(j, k);
      const double raw_q = 1.0 - (1.0 - model.leak[k]) * fail_causes;
      // The clamp is flat outside [eps, 1-eps].
      if (raw_q < kProbEpsilon || raw_q > 1.0 - kProbEpsilon) continue;
      const double q = raw_q;
      const double s = stats.positive_count(cfg.index(), k);
      const double dloss_dq = scale * (-s / q + (n - s) / (1.0 - q));

      const double lam = model.leak[k];
      g.leak_logit[k] += dloss_dq * fail_causes * lam * (1.0 - lam);

      for (std::size_t j = 0; j < C; ++j) {
        if (!cfg.cause_active(j) || !model.mask(j, k)) continue;
        double others = 1.0 - lam;
        for (std::size_t i = 0; i < C; ++i)
          if (i != j && cfg.cause_active(i)) others *= 1.0 - model.eta(i, k);
        const double e = model.eta(j, k);
        g.eta_logit(j, k) += dloss_dq * others * e * (1.0 - e);
      }
    }
  }
  return g;
}

inline Gradients loss_gradients(const NoisyOrModel& model, const Dataset& d) {
  return loss_gradients(model, ConceptStatistics::from(d));
}

// Logit-space parameter vector mapped onto a model.
struct LogitParams {
  Grid<double> theta;
  std::vector<double> phi;

  void apply(NoisyOrModel& model) const {
    const double hi = 1.0 - kProbEpsilon;
    for (std::size_t j = 0; j < model.num_causes(); ++j)
      for (std::size_t k = 0; k < model.num_concepts(); ++k)
        model.eta(j, k) = model.mask(j, k) ? std::min(sigmoid(theta(j, k)), hi) : 0.0;
    for (std::size_t k = 0; k < model.num_concepts(); ++k)
      model.leak[k] = std::min(sigmoid(phi[k]), hi);
  }

  static LogitParams from(const NoisyOrModel& model) {
    LogitParams p{Grid<double>(model.num_causes(), model.num_concepts(), 0.0),
                  std::vector<double>(model.num_concepts())};
    for (std::size_t j = 0; j < model.num_causes(); ++j)
      for (std::size_t k = 0; k < model.num_concepts(); ++k)
        if (model.mask(j, k)) p.theta(j, k) = logit(clamp_prob(model.eta(j, k)));
    for (std::size_t k = 0; k < model.num_concepts(); ++k) p.phi[k] = logit(clamp_prob(model.leak[k]));
    return p;
  }
};

struct FitResult {
  NoisyOrModel model;
  FitTrace trace;
};

inline FitResult fit(const Dataset& data, const ExpertMatrix& matrix, const FitConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw UsageError("cannot fit on an empty dataset");
  if (!(data.vocab == matrix.vocab))
    throw UsageError("dataset and expert matrix use different vocabularies");

  auto init = init_params(matrix, cfg.mode);
  NoisyOrModel model(matrix.vocab);
  model.eta = init.eta;
  model.leak = init.leak;
  model.mask = init.mask;
  model.prior = estimate_prior(data, cfg.prior_alpha);
  for (double p : model.prior)
    if (p == 0.0) throw UsageError("prior_alpha = 0 leaves an unobserved config with zero prior");

  const auto stats = ConceptStatistics::from(data);
  auto params = LogitParams::from(model);
  params.apply(model);

  FitTrace trace;
  trace.initial_loss = bce_loss(model, stats);
  if (!std::isfinite(trace.initial_loss)) throw FitError("non-finite initial loss", 0);
  double prev = trace.initial_loss;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto g = loss_gradients(model, stats);
    for (std::size_t j = 0; j < model.num_causes(); ++j)
      for (std::size_t k = 0; k < model.num_concepts(); ++k)
        if (model.mask(j, k)) params.theta(j, k) -= cfg.learning_rate * g.eta_logit(j, k);
    for (std::size_t k = 0; k < model.num_concepts(); ++k)
      params.phi[k] -= cfg.learning_rate * g.leak_logit[k];
    for (double t : params.theta.flat())
      if (!std::isfinite(t)) throw FitError("non-finite edge parameter", epoch);
    for (double t : params.phi)
      if (!std::isfinite(t)) throw FitError("non-finite leak parameter", epoch);
    params.apply(model);

    const double loss = bce_loss(model, stats);
    if (!std::isfinite(loss)) throw FitError("non-finite loss", epoch);
    trace.loss.push_back(loss);
    trace.final_epoch = epoch;
    if (std::abs(prev - loss) < cfg.tol) {
      trace.stop_reason = StopReason::converged;
      break;
    }
    prev = loss;
  }

  model.meta.mode = to_string(cfg.mode);
  model.meta.seed = cfg.seed;
  model.meta.learning_rate = cfg.learning_rate;
  model.meta.max_epochs = cfg.max_epochs;
  model.meta.tol = cfg.tol;
  model.meta.prior_alpha = cfg.prior_alpha;
  model.meta.final_epoch = trace.final_epoch;
  model.meta.stop_reason = to_string(trace.stop_reason);
  return {std::move(model), std::move(trace)};
}

}  // namespace causalcbm
