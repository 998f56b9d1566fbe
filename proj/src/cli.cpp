#include "oed/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "oed/dataset.hpp"
#include "oed/evaluation.hpp"
#include "oed/format.hpp"
#include "oed/regression.hpp"
#include "oed/sampling.hpp"

namespace oed::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultSeed = 20160101;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SamplerFlags {
  std::string criterion = "D";
  std::size_t restarts = 10;
  std::size_t max_passes = 100;
  double delta = 1e-6;
  std::string distance = "mahalanobis";
  double shrinkage = 0.0;
  std::size_t kmeans_iters = 300;

  void add_to(CLI::App& app) {
    app.add_option("--criterion", criterion, "Design criterion: D, A or I")
        ->capture_default_str()
        ->check(CLI::IsMember({"D", "A", "I"}));
    app.add_option("--restarts", restarts, "Fedorov random restarts")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--max-passes", max_passes, "Fedorov exchange passes per restart")
        ->capture_default_str();
    app.add_option("--delta", delta, "Ridge added to the information matrix")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--distance", distance, "Kennard-Stone metric")
        ->capture_default_str()
        ->check(CLI::IsMember({"euclidean", "mahalanobis"}));
    app.add_option("--shrinkage", shrinkage, "Covariance shrinkage for Mahalanobis distance")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    app.add_option("--kmeans-iters", kmeans_iters, "Maximum Lloyd iterations")
        ->capture_default_str();
  }

  [[nodiscard]] SamplerConfig config(std::uint64_t seed) const {
    SamplerConfig c;
    c.criterion = parse_criterion(criterion);
    c.restarts = restarts;
    c.max_exchange_passes = max_passes;
    c.ridge_delta = delta;
    c.seed = seed;
    c.distance = parse_distance(distance);
    c.covariance_shrinkage = shrinkage;
    c.kmeans_max_iters = kmeans_iters;
    return c;
  }
};

std::vector<Algorithm> parse_algorithms(const std::vector<std::string>& names) {
  std::vector<Algorithm> out;
  for (const auto& name : names) {
    try {
      const auto a = parse_algorithm(name);
      if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    } catch (const ValidationError& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path path(dir);
  fs::create_directories(path);
  return path;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------------------

struct SelectFlags {
  std::string features, manifest, out_dir = ".", out, algorithm = "fedorov";
  std::size_t m = 0;
  std::uint64_t seed = kDefaultSeed;
  SamplerFlags sampler;
};

int cmd_select(const SelectFlags& f, std::ostream& out) {
  const auto data = load_dataset(f.features, f.manifest);
  const Algorithm algorithm = parse_algorithm(f.algorithm);
  const SamplerConfig config = f.sampler.config(f.seed);
  const Design design = select_design(data.features(), algorithm, f.m, config);

  const fs::path path = f.out.empty()
                            ? prepare_out_dir(f.out_dir) /
                                  ("design_" + to_string(algorithm) + "_m" + std::to_string(f.m) +
                                   ".txt")
                            : fs::path(f.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto file = open_output(path);
  write_design(file, design, data.features(), {to_string(algorithm), f.seed});

  out << "algorithm: " << to_string(algorithm) << "\nm: " << design.size() << "\ncriterion: "
      << (design.criterion_value ? format_real(*design.criterion_value) : std::string("none"))
      << "\ndesign: " << path.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct FitFlags {
  std::string features, manifest, design, out_dir = ".", test_features, test_manifest;
  double lambda = 1.0;
  std::vector<double> cv_grid;
  std::size_t folds = 5;
  bool no_standardize = false;
  std::uint64_t seed = kDefaultSeed;
};

int cmd_fit(const FitFlags& f, std::ostream& out) {
  auto data = load_dataset(f.features, f.manifest);
  if (!f.design.empty()) {
    std::ifstream in(f.design);
    if (!in) throw Error("cannot open design " + f.design);
    const Design design = read_design(in, data.features());
    data = data.subset(design.indices);
  }
  if (f.test_features.empty() != f.test_manifest.empty()) {
    throw UsageError("--test-features and --test-manifest must be given together");
  }
  RidgeOptions options;
  options.standardize = !f.no_standardize;

  double lambda = f.lambda;
  if (!f.cv_grid.empty()) {
    lambda = select_lambda_cv(data.features().values(), data.scores(), f.cv_grid, f.folds, f.seed,
                              options);
    out << "cv lambda: " << format_real(lambda) << '\n';
  }
  const auto model = fit_ridge(data.features().values(), data.scores(), lambda,
                               data.manifest().score_range, options);
  const fs::path dir = prepare_out_dir(f.out_dir);
  {
    auto file = open_output(dir / "model.json");
    write_model(file, model);
  }
  out << "rows: " << data.size() << "\nlambda: " << format_real(lambda)
      << "\nmodel: " << (dir / "model.json").string() << '\n';

  if (!f.test_features.empty()) {
    const auto test = load_dataset(f.test_features, f.test_manifest);
    if (test.features().cols() != data.features().cols()) {
      throw ShapeError("test set has a different feature count");
    }
    const Eigen::VectorXd raw = predict_raw(model, test.features().values());
    auto file = open_output(dir / "predictions.csv");
    file << "id,score,predicted_raw,predicted\n";
    std::vector<double> predicted;
    predicted.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      const double y = raw(static_cast<Eigen::Index>(i));
      const int rounded = round_score(y, model.score_range);
      predicted.push_back(rounded);
      file << test.features().row_ids()[i] << ',' << test.scores()[i] << ',' << format_real(y)
           << ',' << rounded << '\n';
    }
    const std::vector<double> truth(test.scores().begin(), test.scores().end());
    try {
      out << "test pearson r: " << format_fixed(pearson(predicted, truth), 5) << '\n';
    } catch (const DegenerateError&) {
      out << "test pearson r: undefined (constant predictions)\n";
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateFlags {
  std::string features, manifest, test_features, test_manifest, out_dir = ".";
  std::vector<std::size_t> m_grid{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::size_t iterations = 300;
  std::vector<std::string> algorithms{"fedorov", "kennard_stone", "kmeans", "random"};
  double lambda = 1.0;
  std::uint64_t master_seed = kDefaultSeed;
  std::size_t workers = 1;
  SamplerFlags sampler;
};

int cmd_simulate(const SimulateFlags& f, std::ostream& out) {
  const auto train = load_dataset(f.features, f.manifest);
  const auto test = load_dataset(f.test_features, f.test_manifest);
  SimulationPlan plan;
  plan.m_grid = f.m_grid;
  plan.iterations = f.iterations;
  plan.algorithms = parse_algorithms(f.algorithms);
  plan.sampler_config = f.sampler.config(f.master_seed);
  plan.lambda = f.lambda;
  plan.master_seed = f.master_seed;

  const auto trials = run_simulation(train, test, plan, f.workers);
  const fs::path dir = prepare_out_dir(f.out_dir);
  {
    auto file = open_output(dir / "trials.csv");
    write_trials_csv(file, trials);
  }
  const std::size_t skipped = count_skipped(trials);
  {
    auto file = open_output(dir / "diagnostics.txt");
    file << "trials: " << trials.size() << "\nskipped: " << skipped << '\n';
  }
  out << "trials: " << trials.size() << "\nskipped: " << skipped
      << "\noutput: " << (dir / "trials.csv").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ReportFlags {
  std::string trials, out_dir = ".", features, manifest;
  std::vector<std::string> algorithms;
  std::vector<std::string> persistence_algorithms{"fedorov", "kennard_stone", "kmeans"};
  std::size_t persistence_min = 2;
  std::size_t persistence_max = 100;
  std::size_t persistence_step = 1;
  std::uint64_t seed = kDefaultSeed;
  SamplerFlags sampler;
};

std::string file_safe(const std::string& text) {
  std::string s = text;
  for (auto& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

int cmd_report(const ReportFlags& f, std::ostream& out) {
  std::ifstream in(f.trials);
  if (!in) throw Error("cannot open " + f.trials);
  const auto trials = read_trials_csv(in);
  if (trials.empty()) throw StructureError("trial file has no trials");

  std::set<Algorithm> present;
  std::vector<std::string> sets;
  for (const auto& t : trials) {
    present.insert(t.algorithm);
    if (std::find(sets.begin(), sets.end(), t.set_id) == sets.end()) sets.push_back(t.set_id);
  }
  if (!present.contains(Algorithm::random)) {
    throw StructureError("trials must include the random baseline algorithm");
  }
  for (const auto a : parse_algorithms(f.algorithms)) {
    if (!present.contains(a)) {
      throw StructureError("requested algorithm " + to_string(a) + " has no trials");
    }
  }

  const auto rows = summarize(trials);
  const fs::path dir = prepare_out_dir(f.out_dir);
  {
    auto file = open_output(dir / "summary.csv");
    write_summary_csv(file, rows);
  }
  std::ostringstream table;
  write_percent_table(table, rows);
  {
    auto file = open_output(dir / "table.txt");
    file << table.str();
  }
  for (const auto& set_id : sets) {
    for (const auto a : present) {
      auto curve = open_output(dir / ("curve_" + file_safe(set_id) + "_" + to_string(a) + ".csv"));
      write_curve_csv(curve, rows, set_id, a);
      auto sd = open_output(dir / ("sd_" + file_safe(set_id) + "_" + to_string(a) + ".csv"));
      write_sd_csv(sd, rows, set_id, a);
    }
    auto ref = open_output(dir / ("reference_" + file_safe(set_id) + ".csv"));
    write_reference_csv(ref, rows, set_id);
  }

  if (!f.features.empty()) {
    if (f.manifest.empty()) throw UsageError("--features requires --manifest");
    if (f.persistence_min < 1 || f.persistence_min > f.persistence_max) {
      throw UsageError("persistence range requires 1 <= --persistence-m-min <= --persistence-m-max");
    }
    const auto pool = load_dataset(f.features, f.manifest);
    std::vector<std::size_t> m_values;
    for (std::size_t m = f.persistence_min; m <= f.persistence_max; ++m) m_values.push_back(m);
    const SamplerConfig config = f.sampler.config(f.seed);
    for (const auto a : parse_algorithms(f.persistence_algorithms)) {
      const auto curve =
          persistence_curve(pool.features(), a, m_values, f.persistence_step, config);
      auto file = open_output(dir / ("persistence_" + to_string(a) + ".csv"));
      write_persistence_csv(file, curve);
    }
  }

  out << table.str() << "summary rows: " << rows.size() << "\nskipped trials: "
      << count_skipped(trials) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthFlags {
  std::size_t n_train = 200;
  std::size_t n_test = 100;
  std::size_t p = 1;
  std::vector<double> beta;
  double noise_sd = 1.0;
  int min_score = 0;
  int max_score = 10;
  std::uint64_t seed = kDefaultSeed;
  std::string set_id = "synthetic";
  std::string out_dir = ".";
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  if (f.min_score >= f.max_score) throw UsageError("--min-score must be below --max-score");
  if (f.set_id.empty() || f.set_id.find_first_of(",\n") != std::string::npos) {
    throw UsageError("--set-id must be nonempty and contain no commas");
  }
  std::vector<double> beta = f.beta;
  if (beta.empty()) beta.assign(f.p, 1.5);
  if (beta.size() != f.p) {
    throw UsageError("--beta needs exactly --p values (" + std::to_string(f.p) + ")");
  }
  SyntheticOptions options;
  options.n = f.n_train + f.n_test;
  options.p = f.p;
  options.beta = beta;
  options.noise_sd = f.noise_sd;
  options.score_range = ScoreRange(f.min_score, f.max_score);
  options.seed = f.seed;
  options.set_id = f.set_id;
  const auto synthetic = generate_synthetic(options);
  const auto [train, test] = split_rows(synthetic.data, f.n_train);

  const fs::path dir = prepare_out_dir(f.out_dir);
  write_dataset(train, dir / "train.csv", dir / "train.json");
  write_dataset(test, dir / "test.csv", dir / "test.json");
  out << "train: " << (dir / "train.csv").string() << " (" << train.size() << " rows)\n"
      << "test: " << (dir / "test.csv").string() << " (" << test.size() << " rows)\n";
  if (synthetic.data.manifest().degenerate) out << "warning: all raw targets equal\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal experimental design for selecting training samples"};
  app.name("oed");
  app.require_subcommand(1);

  SelectFlags select;
  auto* sel = app.add_subcommand("select", "Choose a design from a candidate pool");
  sel->add_option("--features", select.features, "Feature CSV")->required()->check(CLI::ExistingFile);
  sel->add_option("--manifest", select.manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  sel->add_option("--algorithm", select.algorithm, "fedorov, kennard_stone, kmeans or random")
      ->capture_default_str()
      ->check(CLI::IsMember({"fedorov", "kennard_stone", "kennard-stone", "kmeans", "k-means", "random"}));
  sel->add_option("--m", select.m, "Design size")->required()->check(CLI::PositiveNumber);
  sel->add_option("--seed", select.seed, "Random seed")->capture_default_str();
  sel->add_option("--out-dir", select.out_dir, "Output directory")->capture_default_str();
  sel->add_option("--out", select.out, "Design file (overrides --out-dir)");
  select.sampler.add_to(*sel);

  FitFlags fit;
  auto* fitc = app.add_subcommand("fit", "Fit a ridge scoring model");
  fitc->add_option("--features", fit.features, "Feature CSV")->required()->check(CLI::ExistingFile);
  fitc->add_option("--manifest", fit.manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  fitc->add_option("--design", fit.design, "Train only on the rows of this design file")
      ->check(CLI::ExistingFile);
  fitc->add_option("--lambda", fit.lambda, "Ridge penalty")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  fitc->add_option("--cv-grid", fit.cv_grid, "Select lambda from this grid by cross validation")
      ->delimiter(',')
      ->check(CLI::NonNegativeNumber);
  fitc->add_option("--folds", fit.folds, "Cross-validation folds")->capture_default_str()->check(CLI::Range(2, 1000000));
  fitc->add_flag("--no-standardize", fit.no_standardize, "Do not scale features");
  fitc->add_option("--seed", fit.seed, "Cross-validation seed")->capture_default_str();
  fitc->add_option("--test-features", fit.test_features, "Score this test set")->check(CLI::ExistingFile);
  fitc->add_option("--test-manifest", fit.test_manifest, "Manifest of the test set")->check(CLI::ExistingFile);
  fitc->add_option("--out-dir", fit.out_dir, "Output directory")->capture_default_str();

  SimulateFlags sim;
  auto* simc = app.add_subcommand("simulate", "Run the resampling comparison of selection algorithms");
  simc->add_option("--features", sim.features, "Training feature CSV")->required()->check(CLI::ExistingFile);
  simc->add_option("--manifest", sim.manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  simc->add_option("--test-features", sim.test_features, "Test feature CSV")->required()->check(CLI::ExistingFile);
  simc->add_option("--test-manifest", sim.test_manifest, "Test manifest")->required()->check(CLI::ExistingFile);
  simc->add_option("--m-grid", sim.m_grid, "Design sizes")->delimiter(',')->capture_default_str()->check(CLI::PositiveNumber);
  simc->add_option("--iterations", sim.iterations, "Half-samples per m")->capture_default_str()->check(CLI::PositiveNumber);
  simc->add_option("--algorithms", sim.algorithms, "Algorithms to compare")->delimiter(',')->capture_default_str();
  simc->add_option("--lambda", sim.lambda, "Ridge penalty")->capture_default_str()->check(CLI::NonNegativeNumber);
  simc->add_option("--master-seed,--seed", sim.master_seed, "Master seed")->capture_default_str();
  simc->add_option("--workers", sim.workers, "Worker threads (0 = hardware concurrency)")->capture_default_str();
  simc->add_option("--out-dir", sim.out_dir, "Output directory")->capture_default_str();
  sim.sampler.add_to(*simc);

  ReportFlags rep;
  auto* repc = app.add_subcommand("report", "Summarize a trial file");
  repc->add_option("--trials", rep.trials, "Trial CSV from simulate")->required()->check(CLI::ExistingFile);
  repc->add_option("--algorithms", rep.algorithms, "Algorithms that must be present")->delimiter(',');
  repc->add_option("--out-dir", rep.out_dir, "Output directory")->capture_default_str();
  repc->add_option("--features", rep.features, "Pool for persistence curves")->check(CLI::ExistingFile);
  repc->add_option("--manifest", rep.manifest, "Manifest of the persistence pool")->check(CLI::ExistingFile);
  repc->add_option("--persistence-algorithms", rep.persistence_algorithms, "Algorithms for persistence curves")
      ->delimiter(',')
      ->capture_default_str();
  repc->add_option("--persistence-m-min", rep.persistence_min, "Smallest m")->capture_default_str();
  repc->add_option("--persistence-m-max", rep.persistence_max, "Largest m")->capture_default_str();
  repc->add_option("--persistence-step", rep.persistence_step, "Compare design(m) with design(m + step)")
      ->capture_default_str();
  repc->add_option("--seed", rep.seed, "Seed for persistence designs")->capture_default_str();
  rep.sampler.add_to(*repc);

  SynthFlags syn;
  auto* sync = app.add_subcommand("synth", "Generate a synthetic linear dataset");
  sync->add_option("--n-train", syn.n_train, "Training rows")->capture_default_str()->check(CLI::PositiveNumber);
  sync->add_option("--n-test", syn.n_test, "Test rows")->capture_default_str()->check(CLI::PositiveNumber);
  sync->add_option("--p", syn.p, "Feature count")->capture_default_str()->check(CLI::PositiveNumber);
  sync->add_option("--beta", syn.beta, "Coefficients (default 1.5 each)")->delimiter(',');
  sync->add_option("--noise-sd", syn.noise_sd, "Noise standard deviation")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sync->add_option("--min-score", syn.min_score, "Lowest score")->capture_default_str();
  sync->add_option("--max-score", syn.max_score, "Highest score")->capture_default_str();
  sync->add_option("--seed", syn.seed, "Random seed")->capture_default_str();
  sync->add_option("--set-id", syn.set_id, "Set identifier")->capture_default_str();
  sync->add_option("--out-dir", syn.out_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*sel) return cmd_select(select, out);
    if (*fitc) return cmd_fit(fit, out);
    if (*simc) {
      if (sim.workers == 0) sim.workers = std::max(1u, std::thread::hardware_concurrency());
      return cmd_simulate(sim, out);
    }
    if (*repc) return cmd_report(rep, out);
    if (*sync) return cmd_synth(syn, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace oed::cli
