#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oed/cli.hpp"
#include "oed/dataset.hpp"
#include "oed/evaluation.hpp"
#include "oed/regression.hpp"
#include "test_support.hpp"

using oed::testing::read_text;
using oed::testing::TempDir;
using oed::testing::write_text;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "oed");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = oed::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// synth into `dir` and return its path as a string. `n_train` and `p` default
// to 80 and 2.
std::string synth(const TempDir& dir, const std::string& name, const std::string& n_train = "80",
                  const std::string& p = "2") {
  const std::string out = (dir / name).string();
  const std::vector<std::string> args{"synth", "--n-train", n_train, "--n-test", "40", "--p", p,
                                      "--seed", "5", "--out-dir", out};
  const auto res = run_cli(args);
  REQUIRE(res.code == oed::cli::kExitOk);
  return out;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli({}).code == oed::cli::kExitUsage);
  CHECK(run_cli({"frobnicate"}).code == oed::cli::kExitUsage);
  CHECK(run_cli({"synth", "--p", "0"}).code == oed::cli::kExitUsage);
  CHECK(run_cli({"synth", "--n-train", "-3"}).code == oed::cli::kExitUsage);
  CHECK(run_cli({"--help"}).code == oed::cli::kExitOk);
}

TEST_CASE("synth writes deterministic datasets") {
  TempDir dir;
  const auto a = synth(dir, "a");
  const auto b = synth(dir, "b");
  for (const char* file : {"train.csv", "train.json", "test.csv", "test.json"}) {
    CHECK(read_text(std::filesystem::path(a) / file) == read_text(std::filesystem::path(b) / file));
  }
  const auto train = oed::load_dataset(std::filesystem::path(a) / "train.csv",
                                       std::filesystem::path(a) / "train.json");
  CHECK(train.size() == 80);
  CHECK(train.features().cols() == 2);

  const std::string flat = (dir / "flat").string();
  REQUIRE(run_cli({"synth", "--noise-sd", "0", "--out-dir", flat}).code == 0);
  const auto data = oed::load_dataset(std::filesystem::path(flat) / "train.csv",
                                      std::filesystem::path(flat) / "train.json");
  // Scores are a non-decreasing function of the single feature.
  std::vector<std::pair<double, int>> pairs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    pairs.emplace_back(data.features().values()(static_cast<Eigen::Index>(i), 0), data.scores()[i]);
  }
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i].second >= pairs[i - 1].second);

  CHECK(run_cli({"synth", "--p", "2", "--beta", "1", "--out-dir", flat}).code ==
        oed::cli::kExitUsage);
}

TEST_CASE("select") {
  TempDir dir;
  const auto data = synth(dir, "data", "200");
  const std::string features = data + "/train.csv";
  const std::string manifest = data + "/train.json";
  auto select = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> args{"select", "--features", features, "--manifest", manifest,
                                  "--out", out};
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  };

  const std::string first = (dir / "d1.txt").string();
  const std::string second = (dir / "d2.txt").string();
  const std::vector<std::string> flags{"--algorithm", "fedorov", "--m", "30", "--criterion", "D",
                                       "--seed", "7"};
  REQUIRE(select(first, flags).code == 0);
  REQUIRE(select(second, flags).code == 0);
  const std::string text = read_text(first);
  CHECK(text == read_text(second));

  std::istringstream in(text);
  const auto pool = oed::load_dataset(features, manifest).features();
  const auto design = oed::read_design(in, pool);
  CHECK(design.size() == 30);
  CHECK(std::set<std::size_t>(design.indices.begin(), design.indices.end()).size() == 30);

  CHECK(select(first, {"--algorithm", "fedorov", "--m", "0"}).code == oed::cli::kExitUsage);
  CHECK(select(first, {"--algorithm", "greedy", "--m", "3"}).code == oed::cli::kExitUsage);
  CHECK(select(first, {"--algorithm", "random", "--m", "500"}).code == oed::cli::kExitDataError);
  CHECK(select(first, {"--algorithm", "kennard_stone", "--m", "1"}).code ==
        oed::cli::kExitDataError);

  const std::string out_dir = (dir / "designs").string();
  REQUIRE(run_cli({"select", "--features", features, "--manifest", manifest, "--algorithm",
                   "kmeans", "--m", "5", "--out-dir", out_dir})
              .code == 0);
  CHECK(std::filesystem::exists(std::filesystem::path(out_dir) / "design_kmeans_m5.txt"));
}

TEST_CASE("fit") {
  TempDir dir;
  const auto data = synth(dir, "data");
  const std::string out = (dir / "fit").string();
  const auto res = run_cli({"fit", "--features", data + "/train.csv", "--manifest",
                            data + "/train.json", "--test-features", data + "/test.csv",
                            "--test-manifest", data + "/test.json", "--out-dir", out});
  REQUIRE(res.code == 0);
  CHECK(res.out.find("test pearson r: ") != std::string::npos);
  const auto model = oed::load_model(std::filesystem::path(out) / "model.json");
  CHECK(model.coefficients.size() == 2);
  CHECK(count_lines(read_text(std::filesystem::path(out) / "predictions.csv")) == 41);

  CHECK(run_cli({"fit", "--features", data + "/train.csv", "--manifest", data + "/train.json",
                 "--cv-grid", "0.1,1,10", "--out-dir", out})
            .code == 0);
}

TEST_CASE("simulate and report") {
  TempDir dir;
  const auto data = synth(dir, "data");
  const std::string out = (dir / "sim").string();
  const std::vector<std::string> args{"simulate", "--features", data + "/train.csv", "--manifest",
                                      data + "/train.json", "--test-features", data + "/test.csv",
                                      "--test-manifest", data + "/test.json", "--iterations", "2",
                                      "--m-grid", "10,20", "--algorithms", "random,fedorov",
                                      "--out-dir", out};
  REQUIRE(run_cli(args).code == 0);
  const std::string trials = out + "/trials.csv";
  const std::string first = read_text(trials);
  CHECK(count_lines(first) == 1 + 8);
  CHECK(std::filesystem::exists(std::filesystem::path(out) / "diagnostics.txt"));

  REQUIRE(run_cli(args).code == 0);
  CHECK(read_text(trials) == first);

  auto threaded = args;
  threaded.insert(threaded.end(), {"--workers", "3"});
  REQUIRE(run_cli(threaded).code == 0);
  CHECK(read_text(trials) == first);

  SUBCASE("mismatched feature count") {
    const auto wide = synth(dir, "wide", "80", "3");
    auto bad = args;
    bad[6] = wide + "/test.csv";
    bad[8] = wide + "/test.json";
    CHECK(run_cli(bad).code == oed::cli::kExitDataError);
  }

  SUBCASE("report") {
    const std::string rep = (dir / "rep").string();
    REQUIRE(run_cli({"report", "--trials", trials, "--out-dir", rep}).code == 0);
    const std::filesystem::path r(rep);
    // One set, two algorithms, two m values.
    CHECK(count_lines(read_text(r / "summary.csv")) == 1 + 4);
    CHECK(std::filesystem::exists(r / "table.txt"));
    CHECK(std::filesystem::exists(r / "curve_synthetic_fedorov.csv"));
    CHECK(std::filesystem::exists(r / "sd_synthetic_random.csv"));
    CHECK(std::filesystem::exists(r / "reference_synthetic.csv"));

    CHECK(run_cli({"report", "--trials", trials, "--algorithms", "random,kmeans", "--out-dir", rep})
              .code == oed::cli::kExitDataError);

    REQUIRE(run_cli({"report", "--trials", trials, "--out-dir", rep, "--features",
                     data + "/train.csv", "--manifest", data + "/train.json",
                     "--persistence-algorithms", "kennard_stone", "--persistence-m-min", "2",
                     "--persistence-m-max", "10"})
                .code == 0);
    const std::string curve = read_text(r / "persistence_kennard_stone.csv");
    CHECK(count_lines(curve) == 1 + 9);
  }

  SUBCASE("report without the baseline") {
    std::vector<oed::TrialResult> only{{"s", oed::Algorithm::fedorov, 10, 0, 0.5, 0.7, false},
                                       {"s", oed::Algorithm::fedorov, 10, 1, 0.6, 0.7, false}};
    std::ostringstream csv;
    oed::write_trials_csv(csv, only);
    const auto path = dir / "only.csv";
    write_text(path, csv.str());
    const auto res = run_cli({"report", "--trials", path.string(), "--out-dir", (dir / "x").string()});
    CHECK(res.code == oed::cli::kExitDataError);
    CHECK(res.err.find("random") != std::string::npos);
  }

  SUBCASE("only the baseline, comparison requested") {
    std::vector<oed::TrialResult> only{{"s", oed::Algorithm::random, 10, 0, 0.5, 0.7, false},
                                       {"s", oed::Algorithm::random, 10, 1, 0.6, 0.7, false}};
    std::ostringstream csv;
    oed::write_trials_csv(csv, only);
    const auto path = dir / "base.csv";
    write_text(path, csv.str());
    CHECK(run_cli({"report", "--trials", path.string(), "--algorithms", "fedorov", "--out-dir",
                   (dir / "y").string()})
              .code == oed::cli::kExitDataError);
  }
}

TEST_CASE("installed binary runs") {
  const std::string cmd = std::string("\"") + OED_CLI_PATH + "\" --help > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
}
