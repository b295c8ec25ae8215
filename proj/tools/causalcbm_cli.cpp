// causalcbm: command-line driver for synthetic generation, fitting, inference,
// explanation, evaluation and the tree baseline.
//
// Exit codes: 0 success, 2 usage error, 1 runtime/data error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "causalcbm/causalcbm.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace causalcbm;
using causalcbm::cli::RunManifest;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  return os;
}

std::string sibling_path(const std::string& out, const std::string& suffix) {
  fs::path p(out);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

ExpertMatrix matrix_or_default(const std::string& path, const Vocabulary& vocab) {
  if (path.empty()) {
    auto m = ExpertMatrix::standard();
    require_same_vocabulary(m.vocab, vocab);
    return m;
  }
  return load_expert_matrix(path, vocab);
}

// ---- generate -------------------------------------------------------------

struct GenerateArgs {
  std::string truth, out;
  std::size_t n = 1000;
  NoiseSpec noise;
};

int run_generate(const GenerateArgs& a) {
  const auto truth = load_model(a.truth);
  const auto d = generate_synthetic(truth, a.n, a.noise);
  write_dataset(a.out, d);

  RunManifest m("generate");
  m.flag("truth", a.truth);
  m.flag("n", a.n);
  m.flag("noise_a", a.noise.a);
  m.flag("noise_b", a.noise.b);
  m.flag("out", a.out);
  m.seed("seed", a.noise.seed);
  m.input(a.truth);
  m.output(a.out);
  m.write(a.out);
  std::cout << "wrote " << d.size() << " samples to " << a.out << "\n";
  return 0;
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
  std::string data, matrix, mode = "constrained", out, trace;
  FitConfig cfg;
};

int run_fit(FitArgs a) {
  a.cfg.mode = fit_mode_from_string(a.mode);
  a.cfg.validate();
  const auto data = load_dataset(a.data);
  const auto matrix = matrix_or_default(a.matrix, data.vocab);
  const auto result = fit(data, matrix, a.cfg);
  write_json_file(a.out, to_json(result.model));

  const std::string trace_path = a.trace.empty() ? sibling_path(a.out, ".trace.csv") : a.trace;
  {
    auto os = open_out(trace_path);
    os << "epoch,loss\n";
    os << "0," << detail::format_double(result.trace.initial_loss) << "\n";
    for (std::size_t e = 0; e < result.trace.loss.size(); ++e)
      os << e + 1 << ',' << detail::format_double(result.trace.loss[e]) << "\n";
  }

  RunManifest m("fit");
  m.flag("data", a.data);
  m.flag("matrix", a.matrix.empty() ? std::string("<bundled>") : a.matrix);
  m.flag("mode", a.mode);
  m.flag("lr", a.cfg.learning_rate);
  m.flag("epochs", a.cfg.max_epochs);
  m.flag("tol", a.cfg.tol);
  m.flag("alpha", a.cfg.prior_alpha);
  m.flag("out", a.out);
  m.flag("trace", trace_path);
  m.seed("seed", a.cfg.seed);
  m.input(a.data);
  if (!a.matrix.empty()) m.input(a.matrix);
  m.output(a.out);
  m.output(trace_path);
  m.write(a.out);

  std::cout << "fit " << a.mode << ": " << result.trace.final_epoch << " epochs ("
            << to_string(result.trace.stop_reason) << "), loss "
            << result.trace.initial_loss << " -> " << result.trace.loss.back() << ", "
            << result.model.unmasked_edges() << " free edges\n";
  return 0;
}

// ---- infer ----------------------------------------------------------------

struct InferArgs {
  std::string model, data, out;
};

int run_infer(const InferArgs& a) {
  const auto model = load_model(a.model);
  const auto data = load_dataset(a.data, model.vocab);
  const PosteriorEngine engine(model);
  auto os = open_out(a.out);
  os << "sample_id";
  for (std::size_t i = 0; i < model.num_configs(); ++i) os << ",config_" << i;
  for (const auto& l : model.vocab.label_names()) os << ",marginal_" << l;
  os << ",map_index\n";
  for (const auto& c : data.cases) {
    const auto post = engine.posterior(c.concept_prob);
    os << c.sample_id;
    for (double p : post.config_probs) os << ',' << detail::format_double(p);
    for (double p : post.marginals) os << ',' << detail::format_double(p);
    os << ',' << post.map_index << '\n';
  }
  os.close();

  RunManifest m("infer");
  m.flag("model", a.model);
  m.flag("data", a.data);
  m.flag("out", a.out);
  m.input(a.model);
  m.input(a.data);
  m.output(a.out);
  m.write(a.out);
  std::cout << "wrote posteriors for " << data.size() << " samples to " << a.out << "\n";
  return 0;
}

// Reads the marginal_<label> columns of an infer output, in dataset order.
Grid<double> read_predictions(const std::string& path, const Dataset& data) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open predictions '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw DataError(path + ": empty predictions file");
  const auto header = detail::split_csv_line(line);
  const auto labels = data.vocab.label_names();
  std::vector<std::size_t> col(labels.size(), SIZE_MAX);
  for (std::size_t i = 0; i < header.size(); ++i)
    for (std::size_t l = 0; l < labels.size(); ++l)
      if (header[i] == "marginal_" + labels[l]) col[l] = i;
  for (std::size_t l = 0; l < labels.size(); ++l)
    if (col[l] == SIZE_MAX) throw DataError(path + ": missing column 'marginal_" + labels[l] + "'");

  Grid<double> pred(data.size(), labels.size());
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (row >= data.size()) throw DataError(path + ": more rows than the dataset");
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) throw DataError(path + ": ragged row " + std::to_string(row + 2));
    if (f[0] != data.cases[row].sample_id)
      throw DataError(path + ": sample_id '" + f[0] + "' does not match dataset row '" +
                      data.cases[row].sample_id + "'");
    for (std::size_t l = 0; l < labels.size(); ++l) {
      const double v = detail::parse_double(f[col[l]], path + " row " + std::to_string(row + 2));
      if (!(v >= 0.0 && v <= 1.0)) throw DataError(path + ": prediction outside [0,1]");
      pred(row, l) = v;
    }
    ++row;
  }
  if (row != data.size()) throw DataError(path + ": fewer rows than the dataset");
  return pred;
}

// ---- explain --------------------------------------------------------------

struct ExplainArgs {
  std::string model, data, out, hypothesis = "posterior";
  std::size_t k = 2;
};

int run_explain(const ExplainArgs& a) {
  if (a.k < 1) throw UsageError("--k must be >= 1");
  const auto h = hypothesis_from_string(a.hypothesis);
  const auto model = load_model(a.model);
  const auto data = load_dataset(a.data, model.vocab);
  const PosteriorEngine engine(model);
  auto os = open_out(a.out);
  os << "sample_id,rank,concept_name,contribution\n";
  for (const auto& c : data.cases) {
    const auto e = explain(engine, c.concept_prob, a.k, h);
    for (std::size_t r = 0; r < e.top_k.size(); ++r)
      os << c.sample_id << ',' << r + 1 << ',' << e.top_k_names[r] << ','
         << detail::format_double(e.contributions[e.top_k[r]]) << '\n';
  }
  os.close();

  RunManifest m("explain");
  m.flag("model", a.model);
  m.flag("data", a.data);
  m.flag("k", a.k);
  m.flag("hypothesis", a.hypothesis);
  m.flag("out", a.out);
  m.input(a.model);
  m.input(a.data);
  m.output(a.out);
  m.write(a.out);
  std::cout << "wrote top-" << a.k << " explanations for " << data.size() << " samples to " << a.out
            << "\n";
  return 0;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::string model, predictions, data, matrix, out, hypothesis = "posterior";
  EvalOptions opt;
};

int run_evaluate(const EvaluateArgs& a) {
  if (a.model.empty() == a.predictions.empty())
    throw UsageError("evaluate needs exactly one of --model or --predictions");
  if (a.opt.ece_bins < 1) throw UsageError("--bins must be >= 1");
  if (!(a.opt.f1_threshold > 0.0 && a.opt.f1_threshold < 1.0))
    throw UsageError("--threshold must lie in (0,1)");
  const auto h = hypothesis_from_string(a.hypothesis);

  RunManifest m("evaluate");
  EvalReport rep;
  if (!a.model.empty()) {
    const auto model = load_model(a.model);
    const auto data = load_dataset(a.data, model.vocab);
    const auto matrix = matrix_or_default(a.matrix, model.vocab);
    rep = evaluate_causal(model, data, &matrix, a.opt, {}, h);
    m.input(a.model);
  } else {
    const auto data = load_dataset(a.data);
    const auto pred = read_predictions(a.predictions, data);
    rep = evaluate_predictions("predictions", data.vocab.label_names(), pred, label_matrix(data),
                               {}, {}, data.vocab.num_concepts(), a.opt);
    m.input(a.predictions);
  }
  write_json_file(a.out, to_json(rep));

  m.flag("model", a.model);
  m.flag("predictions", a.predictions);
  m.flag("data", a.data);
  m.flag("matrix", a.matrix.empty() ? std::string("<bundled>") : a.matrix);
  m.flag("threshold", a.opt.f1_threshold);
  m.flag("bins", a.opt.ece_bins);
  m.flag("hypothesis", a.hypothesis);
  m.flag("out", a.out);
  m.input(a.data);
  if (!a.matrix.empty()) m.input(a.matrix);
  m.output(a.out);
  m.write(a.out);
  std::cout << format_report(rep);
  return 0;
}

// ---- faithfulness ---------------------------------------------------------

struct FaithArgs {
  std::string model, matrix, out;
};

int run_faithfulness(const FaithArgs& a) {
  const auto model = load_model(a.model);
  const auto matrix = matrix_or_default(a.matrix, model.vocab);
  const auto f = edge_faithfulness(model, matrix);
  write_json_file(a.out, {{"model", model.meta.mode}, {"groups", to_json(f)}});

  RunManifest m("faithfulness");
  m.flag("model", a.model);
  m.flag("matrix", a.matrix.empty() ? std::string("<bundled>") : a.matrix);
  m.flag("out", a.out);
  m.input(a.model);
  if (!a.matrix.empty()) m.input(a.matrix);
  m.output(a.out);
  m.write(a.out);
  std::cout << format_faithfulness("causal-" + model.meta.mode, f);
  return 0;
}

// ---- baseline -------------------------------------------------------------

struct BaselineFitArgs {
  std::string data, out;
  TreeHyper hyper;
};

int run_baseline_fit(const BaselineFitArgs& a) {
  a.hyper.validate();
  const auto data = load_dataset(a.data);
  const auto b = tree_fit(data, a.hyper);
  write_json_file(a.out, to_json(b));

  RunManifest m("baseline-fit");
  m.flag("data", a.data);
  m.flag("max_depth", a.hyper.max_depth);
  m.flag("min_leaf", a.hyper.min_samples_leaf);
  m.flag("out", a.out);
  m.input(a.data);
  m.output(a.out);
  m.write(a.out);
  std::cout << "fitted " << b.trees.size() << " trees on " << data.size() << " samples\n";
  return 0;
}

struct BaselineEvalArgs {
  std::string trees, data, out;
  EvalOptions opt;
};

int run_baseline_eval(const BaselineEvalArgs& a) {
  if (a.opt.ece_bins < 1) throw UsageError("--bins must be >= 1");
  if (!(a.opt.f1_threshold > 0.0 && a.opt.f1_threshold < 1.0))
    throw UsageError("--threshold must lie in (0,1)");
  const auto b = load_tree_baseline(a.trees);
  const auto data = load_dataset(a.data, b.vocab);
  const auto rep = evaluate_baseline(b, data, a.opt);
  write_json_file(a.out, to_json(rep));

  RunManifest m("baseline-eval");
  m.flag("trees", a.trees);
  m.flag("data", a.data);
  m.flag("threshold", a.opt.f1_threshold);
  m.flag("bins", a.opt.ece_bins);
  m.flag("out", a.out);
  m.input(a.trees);
  m.input(a.data);
  m.output(a.out);
  m.write(a.out);
  std::cout << format_report(rep);
  return 0;
}

// ---- export-defaults ------------------------------------------------------

int run_export_defaults(const std::string& dir) {
  fs::create_directories(dir);
  const std::string matrix_path = (fs::path(dir) / "expert_matrix.json").string();
  const std::string truth_path = (fs::path(dir) / "truth_model.json").string();
  write_json_file(matrix_path, to_json(ExpertMatrix::standard()));
  write_json_file(truth_path, to_json(bundled_truth_model()));

  RunManifest m("export-defaults");
  m.flag("out_dir", dir);
  m.output(matrix_path);
  m.output(truth_path);
  m.write((fs::path(dir) / "defaults").string());
  std::cout << "wrote " << matrix_path << " and " << truth_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal concept-bottleneck pipeline: noisy-OR pathology model, exact inference, "
               "explanations and evaluation"};
  app.require_subcommand(1);

  std::function<int()> action;

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Draw a synthetic dataset from a truth model");
  g->add_option("--truth", gen.truth, "Truth model JSON")->required();
  g->add_option("--n", gen.n, "Number of samples")->capture_default_str();
  g->add_option("--noise-a", gen.noise.a, "Corruption shape a")->capture_default_str();
  g->add_option("--noise-b", gen.noise.b, "Corruption shape b")->capture_default_str();
  g->add_option("--seed", gen.noise.seed, "Random seed")->capture_default_str();
  g->add_option("--out", gen.out, "Output dataset CSV")->required();
  g->callback([&] { action = [&] { return run_generate(gen); }; });

  FitArgs fa;
  auto* f = app.add_subcommand("fit", "Fit noisy-OR parameters by gradient descent on BCE");
  f->add_option("--data", fa.data, "Training dataset CSV")->required();
  f->add_option("--matrix", fa.matrix, "Expert matrix JSON (default: bundled)");
  f->add_option("--mode", fa.mode, "constrained | learned")->capture_default_str();
  f->add_option("--lr", fa.cfg.learning_rate, "Learning rate")->capture_default_str();
  f->add_option("--epochs", fa.cfg.max_epochs, "Maximum epochs")->capture_default_str();
  f->add_option("--tol", fa.cfg.tol, "Loss-change stopping tolerance")->capture_default_str();
  f->add_option("--alpha", fa.cfg.prior_alpha, "Prior smoothing")->capture_default_str();
  f->add_option("--seed", fa.cfg.seed, "Seed recorded with the model")->capture_default_str();
  f->add_option("--out", fa.out, "Output model JSON")->required();
  f->add_option("--trace", fa.trace, "Fit trace CSV (default: <out stem>.trace.csv)");
  f->callback([&] { action = [&] { return run_fit(fa); }; });

  InferArgs ia;
  auto* in = app.add_subcommand("infer", "Posterior over pathology configurations per sample");
  in->add_option("--model", ia.model, "Model JSON")->required();
  in->add_option("--data", ia.data, "Dataset CSV")->required();
  in->add_option("--out", ia.out, "Output CSV")->required();
  in->callback([&] { action = [&] { return run_infer(ia); }; });

  ExplainArgs ea;
  auto* ex = app.add_subcommand("explain", "Top-K log-likelihood-ratio concept explanations");
  ex->add_option("--model", ea.model, "Model JSON")->required();
  ex->add_option("--data", ea.data, "Dataset CSV")->required();
  ex->add_option("--k", ea.k, "Concepts per explanation")->capture_default_str();
  ex->add_option("--hypothesis", ea.hypothesis, "posterior | map")->capture_default_str();
  ex->add_option("--out", ea.out, "Output CSV")->required();
  ex->callback([&] { action = [&] { return run_explain(ea); }; });

  EvaluateArgs va;
  auto* ev = app.add_subcommand("evaluate", "AUROC / F1 / ECE / top-K overlap / faithfulness report");
  ev->add_option("--model", va.model, "Model JSON");
  ev->add_option("--predictions", va.predictions, "Infer output CSV (instead of --model)");
  ev->add_option("--data", va.data, "Dataset CSV")->required();
  ev->add_option("--matrix", va.matrix, "Expert matrix JSON (default: bundled)");
  ev->add_option("--threshold", va.opt.f1_threshold, "F1 threshold")->capture_default_str();
  ev->add_option("--bins", va.opt.ece_bins, "ECE bins")->capture_default_str();
  ev->add_option("--hypothesis", va.hypothesis, "posterior | map")->capture_default_str();
  ev->add_option("--out", va.out, "Output report JSON")->required();
  ev->callback([&] { action = [&] { return run_evaluate(va); }; });

  FaithArgs fta;
  auto* ft = app.add_subcommand("faithfulness", "Mean edge weight per expert category");
  ft->add_option("--model", fta.model, "Model JSON")->required();
  ft->add_option("--matrix", fta.matrix, "Expert matrix JSON (default: bundled)");
  ft->add_option("--out", fta.out, "Output JSON")->required();
  ft->callback([&] { action = [&] { return run_faithfulness(fta); }; });

  BaselineFitArgs bfa;
  auto* bf = app.add_subcommand("baseline-fit", "Fit one CART tree per label on concept probabilities");
  bf->add_option("--data", bfa.data, "Training dataset CSV")->required();
  bf->add_option("--max-depth", bfa.hyper.max_depth, "Maximum depth")->capture_default_str();
  bf->add_option("--min-leaf", bfa.hyper.min_samples_leaf, "Minimum samples per leaf")
      ->capture_default_str();
  bf->add_option("--out", bfa.out, "Output trees JSON")->required();
  bf->callback([&] { action = [&] { return run_baseline_fit(bfa); }; });

  BaselineEvalArgs bea;
  auto* be = app.add_subcommand("baseline-eval", "Evaluate fitted trees with the report schema");
  be->add_option("--trees", bea.trees, "Trees JSON")->required();
  be->add_option("--data", bea.data, "Dataset CSV")->required();
  be->add_option("--threshold", bea.opt.f1_threshold, "F1 threshold")->capture_default_str();
  be->add_option("--bins", bea.opt.ece_bins, "ECE bins")->capture_default_str();
  be->add_option("--out", bea.out, "Output report JSON")->required();
  be->callback([&] { action = [&] { return run_baseline_eval(bea); }; });

  std::string defaults_dir;
  auto* ed = app.add_subcommand("export-defaults", "Write the bundled expert matrix and truth model");
  ed->add_option("--out-dir", defaults_dir, "Output directory")->required();
  ed->callback([&] { action = [&] { return run_export_defaults(defaults_dir); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return 2;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
