#pragma once
// Seeded synthetic data drawn from a noisy-OR "truth" model, with predicted
// concept probabilities simulated by a mirrored Beta corruption.

#include <array>
#include <cstdint>
#include <random>
#include <string>

#include "causalcbm/dataset.hpp"
#include "causalcbm/expert_matrix.hpp"
#include "causalcbm/noisy_or.hpp"
#include "causalcbm/random.hpp"

namespace causalcbm {

// concept_prob ~ Beta(a, b) when the concept is present and Beta(b, a) when
// absent. With a - b = 1 the likelihood ratio of an observed probability p is
// exactly p / (1 - p). The defaults give a per-concept AUROC of about 0.804.
struct NoiseSpec {
  double a = 2.3;
  double b = 1.3;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
      throw UsageError("noise shape parameters must be > 0");
  }
};

inline constexpr double kTruthStrong = 0.75;
inline constexpr double kTruthWeak = 0.35;
inline constexpr double kTruthLeak = 0.05;

// Per-pathology prevalence of the bundled truth model, in vocabulary order.
inline constexpr std::array<double, 5> kTruthPrevalence{0.15, 0.20, 0.20, 0.15, 0.08};

// Factorized prior from independent per-pathology prevalences.
inline std::vector<double> prior_from_prevalence(std::span<const double> prevalence) {
  const std::size_t P = prevalence.size();
  std::vector<double> prior(std::size_t{1} << P);
  for (std::size_t i = 0; i < prior.size(); ++i) {
    double p = 1.0;
    for (std::size_t j = 0; j < P; ++j) p *= ((i >> j) & 1u) ? prevalence[j] : 1.0 - prevalence[j];
    prior[i] = p;
  }
  return prior;
}

inline NoisyOrModel bundled_truth_model() {
  const auto matrix = ExpertMatrix::standard();
  NoisyOrModel m(matrix.vocab);
  for (std::size_t j = 0; j < m.num_causes(); ++j)
    for (std::size_t k = 0; k < m.num_concepts(); ++k) {
      const auto a = matrix.assoc(j, k);
      m.mask(j, k) = a != Association::None;
      m.eta(j, k) = a == Association::Strong ? kTruthStrong
                    : a == Association::Weak ? kTruthWeak
                                             : 0.0;
    }
  m.leak.assign(m.num_concepts(), kTruthLeak);
  m.prior = prior_from_prevalence(kTruthPrevalence);
  m.meta.mode = "truth";
  return m;
}

namespace detail {

inline double draw_beta(std::mt19937_64& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  const double s = x + y;
  return s > 0.0 ? x / s : 0.5;
}

}  // namespace detail

// Row i depends only on (noise.seed, i).
inline DiagnosticCase generate_case(const NoisyOrModel& truth, const PosteriorEngine& engine,
                                    std::size_t row, const NoiseSpec& noise) {
  auto rng = derive_stream(noise.seed, row);
  const std::size_t P = truth.num_pathologies(), K = truth.num_concepts();

  const double u = uniform01(rng);
  std::uint32_t cfg = static_cast<std::uint32_t>(truth.num_configs() - 1);
  double acc = 0.0;
  for (std::uint32_t i = 0; i < truth.num_configs(); ++i) {
    acc += truth.prior[i];
    if (u < acc) {
      cfg = i;
      break;
    }
  }

  DiagnosticCase c;
  c.sample_id = "syn" + std::to_string(row);
  c.labels.resize(P + 1);
  for (std::size_t j = 0; j < P; ++j) c.labels[j] = (cfg >> j) & 1u;
  c.labels[P] = cfg == 0;
  c.concept_true.resize(K);
  c.concept_prob.resize(K);
  for (std::size_t k = 0; k < K; ++k) c.concept_true[k] = uniform01(rng) < engine.activation(cfg, k);
  for (std::size_t k = 0; k < K; ++k)
    c.concept_prob[k] = c.concept_true[k] ? detail::draw_beta(rng, noise.a, noise.b)
                                          : detail::draw_beta(rng, noise.b, noise.a);
  return c;
}

inline Dataset generate_synthetic(const NoisyOrModel& truth, std::size_t n, const NoiseSpec& noise) {
  if (n < 1) throw UsageError("generate_synthetic needs n >= 1");
  noise.validate();
  truth.validate();
  const PosteriorEngine engine(truth);
  Dataset d;
  d.vocab = truth.vocab;
  d.cases.reserve(n);
  for (std::size_t i = 0; i < n; ++i) d.cases.push_back(generate_case(truth, engine, i, noise));
  return d;
}

}  // namespace causalcbm
