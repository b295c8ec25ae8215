#pragma once
// JSON persistence for expert matrices, models, tree baselines and reports.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "causalcbm/baseline.hpp"
#include "causalcbm/expert_matrix.hpp"
#include "causalcbm/learning.hpp"
#include "causalcbm/metrics.hpp"
#include "causalcbm/noisy_or.hpp"

namespace causalcbm {

using json = nlohmann::ordered_json;

namespace detail {

template <typename T>
json grid_to_json(const Grid<T>& g) {
  json rows = json::array();
  for (std::size_t r = 0; r < g.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < g.cols(); ++c) {
      if constexpr (std::is_same_v<T, std::uint8_t>)
        row.push_back(static_cast<int>(g(r, c)));
      else
        row.push_back(g(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
Grid<T> grid_from_json(const json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows)
    throw DataError(std::string(what) + ": expected " + std::to_string(rows) + " rows");
  Grid<T> g(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw DataError(std::string(what) + ": row " + std::to_string(r) + " must have " +
                      std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw DataError(std::string(what) + ": non-numeric entry at [" + std::to_string(r) + "][" +
                        std::to_string(c) + "]");
      g(r, c) = j[r][c].get<T>();
    }
  }
  return g;
}

inline std::vector<std::string> string_list(const json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw DataError(std::string(what) + " must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw DataError(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

inline void require_names(const std::vector<std::string>& got,
                          const std::vector<std::string>& want, const char* what) {
  for (std::size_t i = 0; i < std::max(got.size(), want.size()); ++i) {
    if (i >= got.size() || i >= want.size() || got[i] != want[i])
      throw DataError(std::string(what) + " mismatch at position " + std::to_string(i) + ": got '" +
                      (i < got.size() ? got[i] : "<none>") + "', expected '" +
                      (i < want.size() ? want[i] : "<none>") + "'");
  }
}

}  // namespace detail

inline json read_json_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path + "'");
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  os << j.dump(2) << '\n';
  if (!os) throw DataError("write failed for '" + path + "'");
}

// ---- vocabulary ---------------------------------------------------------

inline json to_json(const Vocabulary& v) {
  return {{"pathologies", v.pathologies}, {"nrf", v.nrf_name}, {"concepts", v.concepts}};
}

inline Vocabulary vocabulary_from_json(const json& j) {
  Vocabulary v;
  v.pathologies = detail::string_list(detail::field(j, "pathologies"), "pathologies");
  const auto& nrf = detail::field(j, "nrf");
  if (!nrf.is_string()) throw DataError("nrf must be a string");
  v.nrf_name = nrf.get<std::string>();
  v.concepts = detail::string_list(detail::field(j, "concepts"), "concepts");
  try {
    v.validate();
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
  return v;
}

// ---- expert matrix ------------------------------------------------------
// {"pathologies": [row names, NRF last], "concepts": [...], "associations": rows x concepts}

inline json to_json(const ExpertMatrix& m) {
  Grid<std::uint8_t> g(m.assoc.rows(), m.assoc.cols());
  for (std::size_t i = 0; i < g.size(); ++i) g.flat()[i] = static_cast<std::uint8_t>(m.assoc.flat()[i]);
  return {{"pathologies", m.vocab.cause_names()},
          {"concepts", m.vocab.concepts},
          {"associations", detail::grid_to_json(g)}};
}

inline ExpertMatrix expert_matrix_from_json(const json& j,
                                            const Vocabulary& expected = Vocabulary::standard()) {
  detail::require_names(detail::string_list(detail::field(j, "pathologies"), "pathologies"),
                        expected.cause_names(), "expert matrix pathology");
  detail::require_names(detail::string_list(detail::field(j, "concepts"), "concepts"),
                        expected.concepts, "expert matrix concept");
  const auto& a = detail::field(j, "associations");
  const auto raw = detail::grid_from_json<double>(a, expected.num_causes(), expected.num_concepts(),
                                                  "associations");
  ExpertMatrix m(expected);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = raw.flat()[i];
    if (v != 0.0 && v != 1.0 && v != 2.0)
      throw DataError("association value " + detail::format_double(v) + " outside {0,1,2}");
    m.assoc.flat()[i] = static_cast<Association>(static_cast<int>(v));
  }
  return m;
}

inline ExpertMatrix load_expert_matrix(const std::string& path,
                                       const Vocabulary& expected = Vocabulary::standard()) {
  try {
    return expert_matrix_from_json(read_json_file(path), expected);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---- model --------------------------------------------------------------

inline json to_json(const NoisyOrModel& m) {
  return {{"vocabulary", to_json(m.vocab)},
          {"eta", detail::grid_to_json(m.eta)},
          {"lambda", m.leak},
          {"prior", m.prior},
          {"mask", detail::grid_to_json(m.mask)},
          {"meta",
           {{"mode", m.meta.mode},
            {"seed", m.meta.seed},
            {"learning_rate", m.meta.learning_rate},
            {"max_epochs", m.meta.max_epochs},
            {"tol", m.meta.tol},
            {"prior_alpha", m.meta.prior_alpha},
            {"final_epoch", m.meta.final_epoch},
            {"stop_reason", m.meta.stop_reason}}}};
}

inline NoisyOrModel model_from_json(const json& j) {
  NoisyOrModel m(vocabulary_from_json(detail::field(j, "vocabulary")));
  const std::size_t C = m.num_causes(), K = m.num_concepts();
  m.eta = detail::grid_from_json<double>(detail::field(j, "eta"), C, K, "eta");
  m.mask = detail::grid_from_json<std::uint8_t>(detail::field(j, "mask"), C, K, "mask");
  const auto& lam = detail::field(j, "lambda");
  const auto& pri = detail::field(j, "prior");
  if (!lam.is_array() || !pri.is_array()) throw DataError("lambda and prior must be arrays");
  m.leak = lam.get<std::vector<double>>();
  m.prior = pri.get<std::vector<double>>();
  if (j.contains("meta")) {
    const auto& mt = j.at("meta");
    m.meta.mode = mt.value("mode", std::string("unfitted"));
    m.meta.seed = mt.value("seed", std::uint64_t{0});
    m.meta.learning_rate = mt.value("learning_rate", 0.0);
    m.meta.max_epochs = mt.value("max_epochs", 0);
    m.meta.tol = mt.value("tol", 0.0);
    m.meta.prior_alpha = mt.value("prior_alpha", 0.0);
    m.meta.final_epoch = mt.value("final_epoch", 0);
    m.meta.stop_reason = mt.value("stop_reason", std::string());
  }
  m.validate();
  return m;
}

inline NoisyOrModel load_model(const std::string& path) {
  try {
    return model_from_json(read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---- trees --------------------------------------------------------------

namespace detail {

inline json node_to_json(const DecisionTree& t, std::size_t i) {
  const auto& n = t.nodes[i];
  if (n.is_leaf())
    return {{"positive_fraction", n.positive_fraction}, {"sample_count", n.sample_count}};
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"positive_fraction", n.positive_fraction},
          {"sample_count", n.sample_count},
          {"left", node_to_json(t, static_cast<std::size_t>(n.left))},
          {"right", node_to_json(t, static_cast<std::size_t>(n.right))}};
}

// Appends the subtree rooted at j in preorder; returns its sample count.
inline std::size_t node_from_json(const json& j, DecisionTree& t, std::size_t num_features) {
  const auto id = t.nodes.size();
  t.nodes.emplace_back();
  const double frac = field(j, "positive_fraction").get<double>();
  const auto count = field(j, "sample_count").get<std::size_t>();
  if (!(frac >= 0.0 && frac <= 1.0)) throw DataError("tree positive_fraction outside [0,1]");
  t.nodes[id].positive_fraction = frac;
  t.nodes[id].sample_count = count;
  if (j.contains("feature")) {
    const int f = j.at("feature").get<int>();
    if (f < 0 || static_cast<std::size_t>(f) >= num_features)
      throw DataError("tree feature index out of range");
    t.nodes[id].feature = f;
    t.nodes[id].threshold = j.at("threshold").get<double>();
    t.nodes[id].left = static_cast<int>(t.nodes.size());
    const auto nl = node_from_json(field(j, "left"), t, num_features);
    t.nodes[id].right = static_cast<int>(t.nodes.size());
    const auto nr = node_from_json(field(j, "right"), t, num_features);
    if (nl + nr != count) throw DataError("tree node sample_count differs from its children");
  }
  return count;
}

}  // namespace detail

inline json to_json(const TreeBaseline& b) {
  json trees = json::array();
  const auto names = b.vocab.label_names();
  for (std::size_t i = 0; i < b.trees.size(); ++i)
    trees.push_back({{"label", names.at(i)}, {"root", detail::node_to_json(b.trees[i], 0)}});
  return {{"vocabulary", to_json(b.vocab)},
          {"hyper", {{"max_depth", b.hyper.max_depth}, {"min_samples_leaf", b.hyper.min_samples_leaf}}},
          {"trees", trees}};
}

inline TreeBaseline tree_baseline_from_json(const json& j) {
  TreeBaseline b;
  b.vocab = vocabulary_from_json(detail::field(j, "vocabulary"));
  const auto& h = detail::field(j, "hyper");
  b.hyper.max_depth = h.value("max_depth", 6);
  b.hyper.min_samples_leaf = h.value("min_samples_leaf", std::size_t{20});
  const auto& trees = detail::field(j, "trees");
  if (!trees.is_array() || trees.size() != b.vocab.num_labels())
    throw DataError("expected one tree per label");
  const auto names = b.vocab.label_names();
  for (std::size_t i = 0; i < trees.size(); ++i) {
    if (detail::field(trees[i], "label").get<std::string>() != names[i])
      throw DataError("tree " + std::to_string(i) + " label mismatch, expected '" + names[i] + "'");
    DecisionTree t;
    detail::node_from_json(detail::field(trees[i], "root"), t, b.vocab.num_concepts());
    b.trees.push_back(std::move(t));
  }
  return b;
}

inline TreeBaseline load_tree_baseline(const std::string& path) {
  try {
    return tree_baseline_from_json(read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---- reports ------------------------------------------------------------

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const Faithfulness& f) {
  return {{"strong", optional_number(f.strong)},
          {"weak", optional_number(f.weak)},
          {"none", optional_number(f.none)}};
}

inline json to_json(const EvalReport& r) {
  json labels = json::array();
  for (const auto& l : r.labels)
    labels.push_back(
        {{"name", l.name}, {"auroc", optional_number(l.auroc)}, {"f1", l.f1}, {"ece", l.ece}});
  return {{"model", r.model},
          {"num_samples", r.num_samples},
          {"f1_threshold", r.f1_threshold},
          {"ece_bins", r.ece_bins},
          {"macro_auroc", optional_number(r.macro_auroc)},
          {"macro_f1", r.macro_f1},
          {"macro_ece", r.macro_ece},
          {"labels", labels},
          {"topk_overlap", r.topk_overlap},
          {"topk_skipped", r.topk_skipped},
          {"faithfulness", r.faithfulness ? to_json(*r.faithfulness) : json(nullptr)}};
}

}  // namespace causalcbm
