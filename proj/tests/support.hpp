#pragma once
// Shared fixtures for the test suites: random small models and an
// independently written brute-force posterior.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "causalcbm/causalcbm.hpp"

namespace testing_support {

using namespace causalcbm;

inline Vocabulary small_vocab(std::size_t pathologies, std::size_t concepts) {
  Vocabulary v;
  for (std::size_t j = 0; j < pathologies; ++j) v.pathologies.push_back("P" + std::to_string(j));
  v.nrf_name = "NRF";
  for (std::size_t k = 0; k < concepts; ++k) v.concepts.push_back("C" + std::to_string(k));
  return v;
}

// Random model with roughly half the edges masked, eta/lambda kept away from
// the clamp, and a Dirichlet-like random prior.
inline NoisyOrModel random_model(std::mt19937_64& rng, std::size_t pathologies,
                                 std::size_t concepts, bool full_mask = false) {
  NoisyOrModel m(small_vocab(pathologies, concepts));
  std::uniform_real_distribution<double> u(0.02, 0.95), lam(0.01, 0.3), w(0.05, 1.0);
  std::bernoulli_distribution coin(0.6);
  for (std::size_t j = 0; j < m.num_causes(); ++j)
    for (std::size_t k = 0; k < m.num_concepts(); ++k) {
      m.mask(j, k) = full_mask || coin(rng);
      m.eta(j, k) = m.mask(j, k) ? u(rng) : 0.0;
    }
  for (auto& l : m.leak) l = lam(rng);
  double s = 0.0;
  for (auto& p : m.prior) s += (p = w(rng));
  for (auto& p : m.prior) p /= s;
  return m;
}

inline std::vector<double> random_evidence(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(k);
  for (auto& x : p) x = u(rng);
  return p;
}

// Product-form enumeration: no logs, no shared helpers beyond the model data.
inline std::vector<double> naive_posterior(const NoisyOrModel& m, const std::vector<double>& p) {
  const std::size_t P = m.vocab.pathologies.size(), K = m.vocab.concepts.size();
  const std::size_t n = std::size_t{1} << P;
  std::vector<double> joint(n);
  double z = 0.0;
  for (std::size_t y = 0; y < n; ++y) {
    double lik = m.prior[y];
    for (std::size_t k = 0; k < K; ++k) {
      double off = 1.0 - m.leak[k];
      for (std::size_t j = 0; j < P; ++j)
        if (y & (std::size_t{1} << j)) off *= 1.0 - m.eta(j, k);
      if (y == 0) off *= 1.0 - m.eta(P, k);
      double q = 1.0 - off;
      q = std::min(std::max(q, 1e-7), 1.0 - 1e-7);
      lik *= p[k] * q + (1.0 - p[k]) * (1.0 - q);
    }
    joint[y] = lik;
    z += lik;
  }
  for (auto& v : joint) v /= z;
  return joint;
}

// Dataset drawn directly from a model with hard concept bits.
inline Dataset sample_dataset(const NoisyOrModel& m, std::size_t n, std::uint64_t seed) {
  return generate_synthetic(m, n, NoiseSpec{2.3, 1.3, seed});
}

}  // namespace testing_support
