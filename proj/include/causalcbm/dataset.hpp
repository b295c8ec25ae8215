#pragma once
// Per-sample diagnostic records, CSV persistence and deterministic splitting.
//
// CSV layout (UTF-8, comma separated, dot decimal):
//   sample_id, concept_true_<concept>..., concept_prob_<concept>...,
//   label_<pathology>..., label_<NRF name>

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "causalcbm/common.hpp"
#include "causalcbm/random.hpp"
#include "causalcbm/vocabulary.hpp"

namespace causalcbm {

struct DiagnosticCase {
  std::string sample_id;
  std::vector<std::uint8_t> concept_true;
  std::vector<double> concept_prob;
  std::vector<std::uint8_t> labels;  // pathologies then NRF

  Config config() const {
    return Config::from_bits(std::span<const std::uint8_t>(labels.data(), labels.size() - 1));
  }

  friend bool operator==(const DiagnosticCase&, const DiagnosticCase&) = default;
};

struct Dataset {
  Vocabulary vocab = Vocabulary::standard();
  std::vector<DiagnosticCase> cases;

  std::size_t size() const noexcept { return cases.size(); }
  bool empty() const noexcept { return cases.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Throws DataError describing the first violated invariant.
inline void validate_case(const Vocabulary& v, const DiagnosticCase& c) {
  const std::string where = "sample '" + c.sample_id + "': ";
  if (c.concept_true.size() != v.num_concepts() || c.concept_prob.size() != v.num_concepts() ||
      c.labels.size() != v.num_labels())
    throw DataError(where + "field widths do not match the vocabulary");
  for (std::size_t k = 0; k < c.concept_true.size(); ++k)
    if (c.concept_true[k] > 1)
      throw DataError(where + "concept_true_" + v.concepts[k] + " is not 0/1");
  for (std::size_t k = 0; k < c.concept_prob.size(); ++k) {
    const double p = c.concept_prob[k];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      throw DataError(where + "concept_prob_" + v.concepts[k] + " outside [0,1]");
  }
  bool any = false;
  for (std::size_t j = 0; j < v.num_pathologies(); ++j) {
    if (c.labels[j] > 1) throw DataError(where + "label_" + v.pathologies[j] + " is not 0/1");
    any = any || c.labels[j];
  }
  const auto nrf = c.labels[v.nrf_index()];
  if (nrf > 1) throw DataError(where + "label_" + v.nrf_name + " is not 0/1");
  if ((nrf == 1) == any)
    throw DataError(where + "label_" + v.nrf_name +
                    " must be 1 exactly when no pathology is present (mutual exclusivity)");
}

inline void validate_dataset(const Dataset& d) {
  d.vocab.validate();
  for (const auto& c : d.cases) validate_case(d.vocab, c);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError(where + ": cannot parse '" + s + "' as a number");
  return v;
}

inline std::uint8_t parse_bit(const std::string& s, const std::string& where) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw DataError(where + ": expected 0 or 1, got '" + s + "'");
}

}  // namespace detail

inline std::vector<std::string> dataset_header(const Vocabulary& v) {
  std::vector<std::string> h{"sample_id"};
  for (const auto& c : v.concepts) h.push_back("concept_true_" + c);
  for (const auto& c : v.concepts) h.push_back("concept_prob_" + c);
  for (const auto& l : v.label_names()) h.push_back("label_" + l);
  return h;
}

inline void write_dataset(std::ostream& os, const Dataset& d) {
  const auto header = dataset_header(d.vocab);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& c : d.cases) {
    if (c.sample_id.find_first_of(",\n\r") != std::string::npos)
      throw DataError("sample_id '" + c.sample_id + "' contains a separator");
    os << c.sample_id;
    for (auto b : c.concept_true) os << ',' << int(b);
    for (double p : c.concept_prob) os << ',' << detail::format_double(p);
    for (auto b : c.labels) os << ',' << int(b);
    os << '\n';
  }
}

inline void write_dataset(const std::string& path, const Dataset& d) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  write_dataset(os, d);
  if (!os) throw DataError("write failed for '" + path + "'");
}

inline Dataset read_dataset(std::istream& is, const Vocabulary& vocab,
                            const std::string& source = "<stream>") {
  Dataset d;
  d.vocab = vocab;
  std::string line;
  if (!std::getline(is, line)) throw DataError(source + ": empty file, missing header");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto expected = dataset_header(vocab);
  std::map<std::string, std::size_t> wanted;
  for (std::size_t i = 0; i < expected.size(); ++i) wanted[expected[i]] = i;

  const auto cols = detail::split_csv_line(line);
  std::vector<std::size_t> slot(cols.size());
  std::vector<bool> seen(expected.size(), false);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    auto it = wanted.find(cols[i]);
    if (it == wanted.end())
      throw DataError(source + ": unknown column '" + cols[i] + "' (vocabulary mismatch)");
    if (seen[it->second]) throw DataError(source + ": duplicate column '" + cols[i] + "'");
    seen[it->second] = true;
    slot[i] = it->second;
  }
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (!seen[i]) throw DataError(source + ": missing column '" + expected[i] + "'");

  const std::size_t K = vocab.num_concepts();
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != cols.size())
      throw DataError(source + " row " + std::to_string(row) + ": expected " +
                      std::to_string(cols.size()) + " fields, got " +
                      std::to_string(fields.size()));
    DiagnosticCase c;
    c.concept_true.resize(K);
    c.concept_prob.resize(K);
    c.labels.resize(vocab.num_labels());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::size_t s = slot[i];
      const std::string where = source + " row " + std::to_string(row) + " column '" + cols[i] + "'";
      if (s == 0) {
        c.sample_id = fields[i];
      } else if (s <= K) {
        c.concept_true[s - 1] = detail::parse_bit(fields[i], where);
      } else if (s <= 2 * K) {
        const double p = detail::parse_double(fields[i], where);
        if (!std::isfinite(p) || p < 0.0 || p > 1.0)
          throw DataError(where + ": probability " + fields[i] + " outside [0,1]");
        c.concept_prob[s - 1 - K] = p;
      } else {
        c.labels[s - 1 - 2 * K] = detail::parse_bit(fields[i], where);
      }
    }
    try {
      validate_case(vocab, c);
    } catch (const DataError& e) {
      throw DataError(source + " row " + std::to_string(row) + ": " + e.what());
    }
    d.cases.push_back(std::move(c));
  }
  return d;
}

inline Dataset load_dataset(const std::string& path,
                            const Vocabulary& vocab = Vocabulary::standard()) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open dataset '" + path + "'");
  return read_dataset(is, vocab, path);
}

struct DatasetSplit {
  Dataset train, val, test;
};

// Seeded shuffle followed by a contiguous partition; part sizes are the
// rounded proportions with the remainder going to the last part.
inline DatasetSplit split(const Dataset& d, std::array<double, 3> ratios, std::uint64_t seed) {
  if (d.size() < 3) throw UsageError("split needs at least 3 samples");
  double total = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw UsageError("split ratios must be positive");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw UsageError("split ratios must sum to 1");

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = derive_stream(seed, 0);
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[uniform_below(rng, i + 1)]);

  const double n = static_cast<double>(d.size());
  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * n));
  const auto n_val = static_cast<std::size_t>(std::llround(ratios[1] * n));

  DatasetSplit out;
  out.train.vocab = out.val.vocab = out.test.vocab = d.vocab;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& part = i < n_train ? out.train : (i < n_train + n_val ? out.val : out.test);
    part.cases.push_back(d.cases[order[i]]);
  }
  return out;
}

}  // namespace causalcbm
