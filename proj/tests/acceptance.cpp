// Acceptance checks: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "support.hpp"

using namespace causalcbm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Shared synthetic experiment: train on 50k, evaluate on 20k.
constexpr std::uint64_t kTrainSeed = 1;
constexpr std::uint64_t kTestSeed = 2;

struct Experiment {
  NoisyOrModel truth = bundled_truth_model();
  Dataset train, test;
  FitResult constrained, learned;
  TreeBaseline tree;
  double gen_seconds = 0.0, constrained_seconds = 0.0, learned_seconds = 0.0, tree_seconds = 0.0;

  static Experiment& get() {
    static Experiment e = [] {
      Experiment x;
      auto t0 = Clock::now();
      x.train = generate_synthetic(x.truth, 50000, NoiseSpec{2.3, 1.3, kTrainSeed});
      x.test = generate_synthetic(x.truth, 20000, NoiseSpec{2.3, 1.3, kTestSeed});
      x.gen_seconds = seconds_since(t0);
      const auto matrix = ExpertMatrix::standard();
      FitConfig cfg;
      t0 = Clock::now();
      x.constrained = fit(x.train, matrix, cfg);
      x.constrained_seconds = seconds_since(t0);
      cfg.mode = FitMode::learned;
      t0 = Clock::now();
      x.learned = fit(x.train, matrix, cfg);
      x.learned_seconds = seconds_since(t0);
      t0 = Clock::now();
      x.tree = tree_fit(x.train, {});
      x.tree_seconds = seconds_since(t0);
      return x;
    }();
    return e;
  }
};

Outcome exact_inference_oracle() {
  std::mt19937_64 rng(1001);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto m = testing_support::random_model(rng, 3, 4);
    const auto p = testing_support::random_evidence(rng, 4);
    const auto got = posterior(m, p).config_probs;
    const auto want = testing_support::naive_posterior(m, p);
    for (std::size_t y = 0; y < want.size(); ++y) worst = std::max(worst, std::abs(got[y] - want[y]));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-10 && secs < 5.0,
          "max |diff| " + fmt("%.2e", worst) + " over 200 instances, " + fmt("%.3f", secs) + " s"};
}

Outcome normalization_identity() {
  std::mt19937_64 rng(1002);
  double worst_sum = 0.0, worst_prior = 0.0;
  const std::vector<double> half(11, 0.5);
  for (int t = 0; t < 1000; ++t) {
    const auto m = testing_support::random_model(rng, 5, 11);
    const auto post = posterior(m, testing_support::random_evidence(rng, 11));
    double s = 0.0;
    for (double x : post.config_probs) s += x;
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    const auto flat = posterior(m, half);
    for (std::size_t y = 0; y < 32; ++y)
      worst_prior = std::max(worst_prior, std::abs(flat.config_probs[y] - m.prior[y]));
  }
  return {worst_sum <= 1e-9 && worst_prior <= 1e-12,
          "max |sum-1| " + fmt("%.2e", worst_sum) + ", max |post-prior| at p=0.5 " +
              fmt("%.2e", worst_prior)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(1003);
  double worst = 0.0;
  const double h = 1e-5;
  for (int t = 0; t < 100; ++t) {
    const auto m = testing_support::random_model(rng, 2 + t % 2, 3, t % 3 == 0);
    const auto st =
        ConceptStatistics::from(testing_support::sample_dataset(m, 200, static_cast<std::uint64_t>(t)));
    const auto g = loss_gradients(m, st);
    const auto base = LogitParams::from(m);
    auto loss_at = [&](const LogitParams& lp) {
      NoisyOrModel mm = m;
      lp.apply(mm);
      return bce_loss(mm, st);
    };
    double num2 = 0.0, diff2 = 0.0, ana2 = 0.0;
    auto accumulate = [&](double a, double n) {
      diff2 += (a - n) * (a - n);
      ana2 += a * a;
      num2 += n * n;
    };
    for (std::size_t j = 0; j < m.num_causes(); ++j)
      for (std::size_t k = 0; k < m.num_concepts(); ++k) {
        if (!m.mask(j, k)) continue;
        auto hi = base, lo = base;
        hi.theta(j, k) += h;
        lo.theta(j, k) -= h;
        accumulate(g.eta_logit(j, k), (loss_at(hi) - loss_at(lo)) / (2.0 * h));
      }
    for (std::size_t k = 0; k < m.num_concepts(); ++k) {
      auto hi = base, lo = base;
      hi.phi[k] += h;
      lo.phi[k] -= h;
      accumulate(g.leak_logit[k], (loss_at(hi) - loss_at(lo)) / (2.0 * h));
    }
    worst = std::max(worst, std::sqrt(diff2) / std::max(std::sqrt(ana2), std::sqrt(num2)));
  }
  return {worst < 1e-5, "max relative error " + fmt("%.2e", worst) + " over 100 instances"};
}

Outcome parameter_recovery() {
  auto& e = Experiment::get();
  const auto& fitted = e.constrained.model;
  std::vector<std::size_t> active(e.truth.num_causes(), 0);
  for (const auto& c : e.train.cases) {
    const auto cfg = c.config();
    for (std::size_t j = 0; j < active.size(); ++j) active[j] += cfg.cause_active(j);
  }
  double worst = 0.0;
  std::size_t checked = 0;
  bool masked_zero = true;
  for (std::size_t j = 0; j < fitted.num_causes(); ++j)
    for (std::size_t k = 0; k < fitted.num_concepts(); ++k) {
      if (!fitted.mask(j, k)) {
        masked_zero = masked_zero && fitted.eta(j, k) == 0.0;
        continue;
      }
      if (active[j] < 500) continue;
      ++checked;
      worst = std::max(worst, std::abs(fitted.eta(j, k) - e.truth.eta(j, k)));
    }
  const double secs = e.gen_seconds + e.constrained_seconds;
  return {worst <= 0.05 && masked_zero && checked == 21 && secs < 120.0,
          "max |eta-truth| " + fmt("%.4f", worst) + " on " + std::to_string(checked) +
              " edges, masked edges exactly 0: " + (masked_zero ? "yes" : "no") + ", " +
              fmt("%.2f", secs) + " s"};
}

Outcome faithfulness_pattern() {
  auto& e = Experiment::get();
  const auto matrix = ExpertMatrix::standard();
  const auto c = edge_faithfulness(e.constrained.model, matrix);
  const auto l = edge_faithfulness(e.learned.model, matrix);
  const bool ok_c = *c.strong > *c.weak && *c.weak > *c.none && *c.none == 0.0;
  const bool ok_l = *l.strong > *l.weak && *l.weak > *l.none && *l.none > 0.0;
  return {ok_c && ok_l, "constrained S/W/N " + fmt("%.4f", *c.strong) + "/" + fmt("%.4f", *c.weak) +
                            "/" + fmt("%.4f", *c.none) + ", learned " + fmt("%.4f", *l.strong) + "/" +
                            fmt("%.4f", *l.weak) + "/" + fmt("%.4f", *l.none)};
}

Outcome performance_ordering() {
  auto& e = Experiment::get();
  const auto t0 = Clock::now();
  const auto rc = evaluate_causal(e.constrained.model, e.test);
  const auto rl = evaluate_causal(e.learned.model, e.test);
  const auto rt = evaluate_baseline(e.tree, e.test);
  const double secs = e.gen_seconds + e.constrained_seconds + e.learned_seconds + e.tree_seconds +
                      seconds_since(t0);
  const double ac = *rc.macro_auroc, al = *rl.macro_auroc, at = *rt.macro_auroc;
  const bool ok = ac >= al && al >= at && rc.macro_ece <= rt.macro_ece && secs < 300.0;
  return {ok, "macro AUROC constrained " + fmt("%.6f", ac) + " learned " + fmt("%.6f", al) +
                  " tree " + fmt("%.6f", at) + "; ECE constrained " + fmt("%.4f", rc.macro_ece) +
                  " tree " + fmt("%.4f", rt.macro_ece) + "; " + fmt("%.1f", secs) + " s"};
}

Outcome noise_calibration() {
  const auto& d = Experiment::get().test;  // 20k samples, default noise
  double sum = 0.0;
  for (std::size_t k = 0; k < d.vocab.num_concepts(); ++k) {
    std::vector<double> s;
    std::vector<std::uint8_t> y;
    for (const auto& c : d.cases) {
      s.push_back(c.concept_prob[k]);
      y.push_back(c.concept_true[k]);
    }
    sum += auroc(s, y);
  }
  const double macro = sum / static_cast<double>(d.vocab.num_concepts());
  return {std::abs(macro - 0.8012) <= 0.03, "concept macro AUROC " + fmt("%.4f", macro)};
}

Outcome metric_oracle() {
  using B = std::vector<std::uint8_t>;
  using D = std::vector<double>;
  const double a = auroc(D{0.9, 0.8, 0.3}, B{1, 0, 1});
  const double e = ece(D{0.8, 0.8}, B{1, 0});
  const double f = f1_score(B{1, 0, 1}, B{1, 1, 1});
  const double o = topk_overlap({{1, 8}}, {{1, 6}}, 2, 11).mean;
  // Exact up to the rounding of the decimal literals themselves.
  const bool ok = a == 0.5 && std::abs(e - 0.3) <= 1e-15 && std::abs(f - 0.8) <= 1e-15 && o == 0.5;
  return {ok, "auroc " + fmt("%.17g", a) + ", ece " + fmt("%.17g", e) + ", f1 " + fmt("%.17g", f) +
                  ", overlap " + fmt("%.17g", o)};
}

Outcome explanation_trend() {
  auto& e = Experiment::get();
  const auto rc = evaluate_causal(e.constrained.model, e.test, nullptr, {0.5, 10, 11});
  const auto rt = evaluate_baseline(e.tree, e.test, {0.5, 10, 11});
  const auto& llr = rc.topk_overlap;
  const auto& prob = rt.topk_overlap;
  const bool ok = llr.size() == 11 && prob.size() == 11 && llr[0] > prob[0] && llr[1] > prob[1] &&
                  llr[10] == 1.0 && prob[10] == 1.0;
  std::string d = "LLR vs probability ranking:";
  for (std::size_t k : {1, 2, 5, 11})
    d += " K=" + std::to_string(k) + " " + fmt("%.4f", llr[k - 1]) + "/" + fmt("%.4f", prob[k - 1]);
  return {ok, d};
}

// ---- CLI determinism --------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

int run_in(const fs::path& dir, const std::string& args) {
  const std::string cmd =
      "cd '" + dir.string() + "' && '" CAUSALCBM_CLI "' " + args + " > stdout.txt 2> stderr.txt";
  return std::system(cmd.c_str());
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / ("causalcbm_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::string> commands = {
      "export-defaults --out-dir defaults",
      "generate --truth defaults/truth_model.json --n 3000 --seed 7 --out train.csv",
      "generate --truth defaults/truth_model.json --n 1000 --seed 8 --out test.csv",
      "fit --data train.csv --matrix defaults/expert_matrix.json --mode constrained --out c.json",
      "fit --data train.csv --mode learned --epochs 3000 --out l.json",
      "infer --model c.json --data test.csv --out post.csv",
      "explain --model c.json --data test.csv --k 3 --out ex.csv",
      "explain --model c.json --data test.csv --hypothesis map --out exmap.csv",
      "evaluate --model c.json --data test.csv --out eval.json",
      "evaluate --predictions post.csv --data test.csv --out evalp.json",
      "faithfulness --model l.json --out faith.json",
      "baseline-fit --data train.csv --out trees.json",
      "baseline-eval --trees trees.json --data test.csv --out beval.json",
  };
  for (const char* run : {"a", "b"}) {
    fs::create_directories(root / run);
    for (const auto& c : commands)
      if (run_in(root / run, c) != 0) return {false, std::string("command failed: ") + c};
  }
  std::size_t files = 0, manifests = 0;
  std::string mismatch;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root / "a");
    const auto other = root / "b" / rel;
    if (!fs::exists(other)) {
      mismatch = rel.string() + " missing in second run";
      break;
    }
    const std::string name = rel.filename().string();
    if (name.size() > 14 && name.ends_with(".manifest.json")) {
      auto ja = json::parse(slurp(entry.path())), jb = json::parse(slurp(other));
      ja.erase("timestamp");
      jb.erase("timestamp");
      ++manifests;
      if (ja != jb) {
        mismatch = rel.string();
        break;
      }
    } else if (slurp(entry.path()) != slurp(other)) {
      mismatch = rel.string();
      break;
    }
    ++files;
  }
  fs::remove_all(root);
  if (!mismatch.empty()) return {false, "differs between runs: " + mismatch};
  return {manifests >= commands.size(),
          std::to_string(files) + " files identical across 2 runs of " +
              std::to_string(commands.size()) + " commands (" + std::to_string(manifests) +
              " manifests compared without their timestamp)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exact-inference oracle", exact_inference_oracle},
      {"normalization and identity", normalization_identity},
      {"gradient check", gradient_check},
      {"parameter recovery", parameter_recovery},
      {"edge-weight pattern", faithfulness_pattern},
      {"performance ordering", performance_ordering},
      {"noise calibration", noise_calibration},
      {"metric unit oracle", metric_oracle},
      {"explanation quality trend", explanation_trend},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed;
}
