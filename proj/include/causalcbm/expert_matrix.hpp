#pragma once
// Radiologist-defined cause x concept association grid.

#include <cstdint>
#include <string>

#include "causalcbm/common.hpp"
#include "causalcbm/vocabulary.hpp"

namespace causalcbm {

enum class Association : std::uint8_t { None = 0, Weak = 1, Strong = 2 };

inline const char* to_string(Association a) {
  switch (a) {
    case Association::None: return "none";
    case Association::Weak: return "weak";
    case Association::Strong: return "strong";
  }
  return "?";
}

inline Association association_from_int(int v) {
  if (v < 0 || v > 2)
    throw DataError("association value " + std::to_string(v) + " outside {0,1,2}");
  return static_cast<Association>(v);
}

struct ExpertMatrix {
  Vocabulary vocab;
  Grid<Association> assoc;  // causes (pathologies then NRF) x concepts

  ExpertMatrix() = default;
  explicit ExpertMatrix(Vocabulary v)
      : vocab(std::move(v)), assoc(vocab.num_causes(), vocab.num_concepts(), Association::None) {}

  // The bundled default: strong/weak pathology-concept links for chest X-ray findings.
  static ExpertMatrix standard() {
    ExpertMatrix m(Vocabulary::standard());
    const auto& v = m.vocab;
    auto set = [&](const std::string& cause, const std::string& concept_name, Association a) {
      std::size_t row = v.nrf_index();
      for (std::size_t j = 0; j < v.num_pathologies(); ++j)
        if (v.pathologies[j] == cause) row = j;
      m.assoc(row, *v.concept_index(concept_name)) = a;
    };
    using A = Association;
    set("No Relevant Finding", "Unremarkable", A::Strong);

    set("Suspicious Malignancy", "Mass", A::Strong);
    set("Suspicious Malignancy", "Nodular Disease", A::Strong);
    set("Suspicious Malignancy", "Irregular Hilum/Mediastinum", A::Strong);
    set("Suspicious Malignancy", "Opacities", A::Weak);
    set("Suspicious Malignancy", "Pleural Disease", A::Weak);

    set("Pneumonia", "Nodular Disease", A::Weak);
    set("Pneumonia", "Pneumonitis", A::Strong);
    set("Pneumonia", "Consolidation", A::Strong);
    set("Pneumonia", "Opacities", A::Weak);
    set("Pneumonia", "Infection", A::Strong);
    set("Pneumonia", "Pleural Disease", A::Weak);

    set("Pleural Effusion", "Mass", A::Weak);
    set("Pleural Effusion", "Pleural Disease", A::Strong);
    set("Pleural Effusion", "Absent Lung Markings", A::Weak);

    set("Cardiac Failure", "Irregular Hilum/Mediastinum", A::Weak);
    set("Cardiac Failure", "Opacities", A::Weak);
    set("Cardiac Failure", "Pleural Disease", A::Weak);
    set("Cardiac Failure", "Enlarged Heart", A::Strong);

    set("Pneumothorax", "Pleural Disease", A::Weak);
    set("Pneumothorax", "Absent Lung Markings", A::Strong);
    return m;
  }

  std::size_t count(Association a) const {
    std::size_t n = 0;
    for (auto x : assoc.flat()) n += (x == a);
    return n;
  }

  void validate() const {
    vocab.validate();
    if (assoc.rows() != vocab.num_causes() || assoc.cols() != vocab.num_concepts())
      throw DataError("association grid is " + std::to_string(assoc.rows()) + "x" +
                      std::to_string(assoc.cols()) + ", expected " +
                      std::to_string(vocab.num_causes()) + "x" +
                      std::to_string(vocab.num_concepts()));
    for (auto x : assoc.flat())
      if (static_cast<int>(x) > 2) throw DataError("association value outside {0,1,2}");
  }

  friend bool operator==(const ExpertMatrix&, const ExpertMatrix&) = default;
};

}  // namespace causalcbm
