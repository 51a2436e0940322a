// turtle: mixture-of-mixtures mutual-information clustering CLI.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <vector>

#include <CLI11.hpp>

#include "turtle/data.hpp"
#include "turtle/fit.hpp"
#include "turtle/gmm.hpp"
#include "turtle/metrics.hpp"
#include "turtle/rng.hpp"

namespace fs = std::filesystem;
using namespace turtle;

namespace {

InitScheme parse_scheme(const std::string& s) {
  if (s == "graph") return InitScheme::kGraph;
  if (s == "lhs") return InitScheme::kLhs;
  if (s == "kmeans") return InitScheme::kKmeans;
  throw CLI::ValidationError("--scheme", "expected graph|lhs|kmeans");
}

std::vector<int> last_column_labels(const std::string& path) {
  LabeledDataset ds = load_csv(path, csv_has_header(path),
                               std::nullopt, /*standardize=*/false);
  std::vector<int> labels(ds.X.rows());
  int last = static_cast<int>(ds.X.cols()) - 1;
  for (int i = 0; i < ds.X.rows(); ++i)
    labels[i] = static_cast<int>(std::llround(ds.X(i, last)));
  return labels;
}

int count_distinct(const std::vector<int>& labels) {
  std::map<int, int> seen;
  for (int l : labels) seen[l]++;
  return static_cast<int>(seen.size());
}

struct FitFlags {
  std::string input, out_dir;
  int label_col = -1;
  int knn = 25;
  std::string scheme = "graph";
  std::vector<double> lambda1{0.0, 0.01, 0.1, 1.0};
  std::vector<double> lambda2{0.0, 0.1, 1.0, 10.0};
  double threshold = -1.0;
  int nstarts = 10;
  uint64_t seed = 0;
  bool no_standardize = false;
};

int run_fit(const FitFlags& f) {
  std::optional<int> label_col;
  if (f.label_col >= 0) label_col = f.label_col;
  LabeledDataset ds =
      load_csv(f.input, csv_has_header(f.input), label_col, !f.no_standardize);

  FitConfig cfg;
  cfg.init.scheme = parse_scheme(f.scheme);
  cfg.init.k = f.knn;
  cfg.init.n_starts = f.nstarts;
  cfg.lambda1_grid = f.lambda1;
  cfg.lambda2_grid = f.lambda2;
  cfg.removal_threshold = f.threshold;
  cfg.seed = f.seed;

  FitResult res = fit(ds.X, cfg);

  fs::create_directories(f.out_dir);
  write_labels_csv((fs::path(f.out_dir) / "labels.csv").string(), res.labels);
  write_posteriors_csv((fs::path(f.out_dir) / "posteriors.csv").string(),
                       res.responsibilities);
  write_model_json((fs::path(f.out_dir) / "model.json").string(), res,
                   ds.standardizer);
  write_trace_csv((fs::path(f.out_dir) / "trace.csv").string(), res.objective_trace);
  std::cout << "k=" << res.model.order() << " asw=" << res.asw
            << " lambda1=" << res.lambda1 << " lambda2=" << res.lambda2 << "\n";
  return 0;
}

FitResult fit_with_defaults(const Mat& X, int knn, uint64_t seed) {
  FitConfig cfg;
  cfg.init.k = knn;
  cfg.seed = seed;
  return fit(X, cfg);
}

// Best-ASW fit over several kNN values, the recommended usage.
FitResult fit_best_knn(const Mat& X, const std::vector<int>& ks, uint64_t seed) {
  FitResult best;
  bool have = false;
  for (int k : ks) {
    if (k >= static_cast<int>(X.rows()) / 2) continue;
    FitResult r = fit_with_defaults(X, k, seed);
    if (!have || r.asw > best.asw) {
      best = std::move(r);
      have = true;
    }
  }
  if (!have) throw std::runtime_error("no usable kNN value for this dataset");
  return best;
}

int run_benchmark_sims(int replicates, uint64_t seed, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::vector<std::string> families{"cross", "mixg", "outlier"};
  const std::vector<int> krange{2, 3, 4, 5, 6, 7, 8, 9};

  for (const std::string& family : families) {
    struct Row { int turtle_k, bic_k, icl_k; double turtle_ari; };
    std::vector<Row> rows(replicates);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < replicates; ++r) {
      uint64_t rep_seed = splitmix64(seed) ^ splitmix64(1000 + r);
      LabeledDataset ds = generate(family, rep_seed);
      Standardizer st = fit_standardizer(ds.X);
      Mat X = st.apply(ds.X);
      FitResult res = fit_with_defaults(X, 25, rep_seed);
      auto [bk, bfit] = select_k(X, krange, Criterion::kBic, 10, rep_seed);
      auto [ik, ifit] = select_k(X, krange, Criterion::kIcl, 10, rep_seed);
      rows[r] = {res.model.order(), bk, ik, ari(res.labels, ds.labels)};
    }

    std::ofstream freq(fs::path(out_dir) / (family + "_frequencies.csv"));
    freq << "method";
    for (int k = 2; k <= 9; ++k) freq << "," << k;
    freq << "\n";
    auto table_row = [&](const std::string& name, auto get) {
      freq << name;
      for (int k = 2; k <= 9; ++k) {
        int count = 0;
        for (const Row& row : rows) count += get(row) == k;
        freq << "," << count;
      }
      freq << "\n";
    };
    table_row("turtle_full", [](const Row& r) { return r.turtle_k; });
    table_row("gmm_em_bic", [](const Row& r) { return r.bic_k; });
    table_row("gmm_em_icl", [](const Row& r) { return r.icl_k; });

    std::ofstream det(fs::path(out_dir) / (family + "_replicates.csv"));
    det << "replicate,turtle_k,turtle_ari,gmm_bic_k,gmm_icl_k\n";
    for (int r = 0; r < replicates; ++r)
      det << r << "," << rows[r].turtle_k << "," << rows[r].turtle_ari << ","
          << rows[r].bic_k << "," << rows[r].icl_k << "\n";
    std::cout << "wrote " << family << " tables\n";
  }
  return 0;
}

int run_benchmark_datasets(uint64_t seed, const std::string& data_dir,
                           const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "datasets_ari.csv");
  out << "dataset,method,ari,k\n";
  const std::vector<std::string> names{"bankruptcy", "wine", "seeds", "thyroid",
                                       "wholesale"};
  const std::vector<int> krange{2, 3, 4, 5, 6, 7, 8, 9};
  for (const std::string& name : names) {
    fs::path file = fs::path(data_dir) / (name + ".csv");
    if (!fs::exists(file)) {
      std::cerr << "skipping " << name << ": " << file << " not found\n";
      continue;
    }
    LabeledDataset ds = load_csv(file.string(), csv_has_header(file.string()),
                                 std::nullopt, false);
    int last = static_cast<int>(ds.X.cols()) - 1;
    std::vector<int> truth(ds.X.rows());
    for (int i = 0; i < ds.X.rows(); ++i)
      truth[i] = static_cast<int>(std::llround(ds.X(i, last)));
    Mat features = ds.X.leftCols(last);
    Standardizer st = fit_standardizer(features);
    Mat X = st.apply(features);

    FitResult res = fit_best_knn(X, {15, 25, 45}, seed);
    out << name << ",turtle_full," << ari(res.labels, truth) << ","
        << res.model.order() << "\n";
    for (Criterion crit : {Criterion::kBic, Criterion::kIcl}) {
      auto [k, gfit] = select_k(X, krange, crit, 10, seed);
      std::vector<int> glabels = map_labels(gmm_posterior(X, gfit));
      out << name << "," << (crit == Criterion::kBic ? "gmm_em_bic" : "gmm_em_icl")
          << "," << ari(glabels, truth) << "," << k << "\n";
    }
    std::cout << name << " done\n";
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"turtle shell clustering"};
  app.require_subcommand(1);

  FitFlags ff;
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit the model to a CSV dataset");
  fit_cmd->add_option("--input", ff.input, "input CSV")->required();
  fit_cmd->add_option("--label-col", ff.label_col, "0-based label column to exclude");
  fit_cmd->add_option("--knn", ff.knn, "kNN neighbours / initial cluster count")
      ->required();
  fit_cmd->add_option("--scheme", ff.scheme, "graph|lhs|kmeans");
  fit_cmd->add_option("--lambda1", ff.lambda1, "lambda1 grid")->delimiter(',');
  fit_cmd->add_option("--lambda2", ff.lambda2, "lambda2 grid")->delimiter(',');
  fit_cmd->add_option("--threshold", ff.threshold, "small-cluster removal share");
  fit_cmd->add_option("--nstarts", ff.nstarts, "initialization starts");
  fit_cmd->add_option("--seed", ff.seed, "RNG seed");
  fit_cmd->add_flag("--no-standardize", ff.no_standardize, "skip z-standardization");
  fit_cmd->add_option("--out", ff.out_dir, "output directory")->required();

  std::string sim_family, sim_out;
  uint64_t sim_seed = 0;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "write a simulated dataset");
  sim_cmd->add_option("--family", sim_family, "gu6|cross|mixg|outlier")->required();
  sim_cmd->add_option("--seed", sim_seed, "RNG seed");
  sim_cmd->add_option("--out", sim_out, "output CSV")->required();

  std::string eval_pred, eval_truth;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "ARI between two labelings");
  eval_cmd->add_option("--pred", eval_pred, "predicted labels CSV")->required();
  eval_cmd->add_option("--truth", eval_truth, "reference labels CSV")->required();

  std::string bench_suite, bench_out = "benchmark_out", bench_data = "data";
  int bench_reps = 25;
  uint64_t bench_seed = 0;
  CLI::App* bench_cmd = app.add_subcommand("benchmark", "reproduce the study tables");
  bench_cmd->add_option("--suite", bench_suite, "sims|datasets")->required();
  bench_cmd->add_option("--replicates", bench_reps, "replicates per family");
  bench_cmd->add_option("--seed", bench_seed, "RNG seed");
  bench_cmd->add_option("--out", bench_out, "output directory");
  bench_cmd->add_option("--data-dir", bench_data, "directory with dataset CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit_cmd->parsed()) return run_fit(ff);
    if (sim_cmd->parsed()) {
      write_dataset_csv(sim_out, generate(sim_family, sim_seed));
      return 0;
    }
    if (eval_cmd->parsed()) {
      std::vector<int> pred = last_column_labels(eval_pred);
      std::vector<int> truth = last_column_labels(eval_truth);
      std::cout << "ari=" << ari(pred, truth) << " k=" << count_distinct(pred)
                << "\n";
      return 0;
    }
    if (bench_cmd->parsed()) {
      if (bench_suite == "sims")
        return run_benchmark_sims(bench_reps, bench_seed, bench_out);
      if (bench_suite == "datasets")
        return run_benchmark_datasets(bench_seed, bench_data, bench_out);
      std::cerr << "unknown suite: " << bench_suite << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
