#pragma once
// Pathology/concept names and the joint pathology configuration space.
//
// Cause indices 0..P-1 are pathologies in vocabulary order; cause P is the
// "No Relevant Finding" state, active exactly when no pathology is present.
// A configuration's index packs pathology j into bit j.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "causalcbm/common.hpp"

namespace causalcbm {

inline constexpr std::size_t kMaxPathologies = 16;

struct Vocabulary {
  std::vector<std::string> pathologies;
  std::string nrf_name;
  std::vector<std::string> concepts;

  static Vocabulary standard() {
    return {
        {"Suspicious Malignancy", "Pneumonia", "Pleural Effusion", "Cardiac Failure",
         "Pneumothorax"},
        "No Relevant Finding",
        {"Unremarkable", "Mass", "Nodular Disease", "Irregular Hilum/Mediastinum",
         "Pneumonitis", "Consolidation", "Opacities", "Infection", "Pleural Disease",
         "Enlarged Heart", "Absent Lung Markings"},
    };
  }

  std::size_t num_pathologies() const noexcept { return pathologies.size(); }
  std::size_t num_causes() const noexcept { return pathologies.size() + 1; }
  std::size_t num_labels() const noexcept { return pathologies.size() + 1; }
  std::size_t num_concepts() const noexcept { return concepts.size(); }
  std::size_t num_configs() const noexcept { return std::size_t{1} << pathologies.size(); }
  std::size_t nrf_index() const noexcept { return pathologies.size(); }

  // Row names of the cause grid: pathologies followed by NRF.
  std::vector<std::string> cause_names() const {
    auto names = pathologies;
    names.push_back(nrf_name);
    return names;
  }
  std::vector<std::string> label_names() const { return cause_names(); }

  std::optional<std::size_t> concept_index(const std::string& name) const {
    for (std::size_t k = 0; k < concepts.size(); ++k)
      if (concepts[k] == name) return k;
    return std::nullopt;
  }

  void validate() const {
    if (pathologies.empty() || pathologies.size() > kMaxPathologies)
      throw UsageError("vocabulary needs 1.." + std::to_string(kMaxPathologies) +
                       " pathologies, got " + std::to_string(pathologies.size()));
    if (concepts.empty()) throw UsageError("vocabulary has no concepts");
    std::set<std::string> seen;
    for (const auto& n : cause_names()) {
      if (n.empty()) throw UsageError("empty name in vocabulary");
      if (!seen.insert(n).second) throw UsageError("duplicate vocabulary name: " + n);
    }
    seen.clear();
    for (const auto& n : concepts) {
      if (n.empty()) throw UsageError("empty concept name in vocabulary");
      if (!seen.insert(n).second) throw UsageError("duplicate concept name: " + n);
    }
  }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

// One joint assignment of presence/absence to every pathology.
class Config {
 public:
  Config(std::uint32_t index, std::size_t num_pathologies)
      : index_(index), num_pathologies_(num_pathologies) {
    if (num_pathologies == 0 || num_pathologies > kMaxPathologies ||
        index >= (std::uint32_t{1} << num_pathologies))
      throw UsageError("config index " + std::to_string(index) + " out of range for " +
                       std::to_string(num_pathologies) + " pathologies");
  }

  static Config from_bits(std::span<const std::uint8_t> bits) {
    std::uint32_t idx = 0;
    for (std::size_t j = 0; j < bits.size() && j < kMaxPathologies; ++j)
      if (bits[j]) idx |= std::uint32_t{1} << j;
    return Config(idx, bits.size());
  }

  std::uint32_t index() const noexcept { return index_; }
  std::size_t num_pathologies() const noexcept { return num_pathologies_; }
  bool nrf_active() const noexcept { return index_ == 0; }
  bool has(std::size_t pathology) const noexcept {
    return pathology < num_pathologies_ && ((index_ >> pathology) & 1u);
  }

  // Whether cause j (pathology index, or num_pathologies for NRF) is active.
  bool cause_active(std::size_t cause) const noexcept {
    return cause == num_pathologies_ ? nrf_active() : has(cause);
  }

  std::vector<std::uint8_t> bits() const {
    std::vector<std::uint8_t> b(num_pathologies_);
    for (std::size_t j = 0; j < num_pathologies_; ++j) b[j] = has(j) ? 1 : 0;
    return b;
  }

  friend bool operator==(const Config&, const Config&) = default;

 private:
  std::uint32_t index_;
  std::size_t num_pathologies_;
};

inline std::vector<Config> enumerate_configs(std::size_t num_pathologies = 5) {
  if (num_pathologies == 0 || num_pathologies > kMaxPathologies)
    throw UsageError("cannot enumerate configs over " + std::to_string(num_pathologies) +
                     " pathologies");
  std::vector<Config> out;
  const std::uint32_t n = std::uint32_t{1} << num_pathologies;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) out.emplace_back(i, num_pathologies);
  return out;
}

}  // namespace causalcbm
