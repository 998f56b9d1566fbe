#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "oed/dataset.hpp"
#include "oed/error.hpp"
#include "test_support.hpp"

using namespace oed;
using oed::testing::TempDir;
using oed::testing::write_text;

namespace {

std::string manifest_json(int lo, int hi, const std::string& extra = "") {
  return "{\"set_id\": 1, \"task\": \"persuasive\", \"min_score\": " + std::to_string(lo) +
         ", \"max_score\": " + std::to_string(hi) + extra + "}";
}

}  // namespace

TEST_CASE("load_dataset reads a set-1 sized file") {
  TempDir dir;
  std::string csv = "id,score,f1,f2\n";
  for (int i = 0; i < 1785; ++i) {
    csv += "e" + std::to_string(i) + "," + std::to_string(2 + i % 11) + "," +
           std::to_string(i * 0.5) + ",-1.25e-3\n";
  }
  write_text(dir / "set1.csv", csv);
  write_text(dir / "set1.json", manifest_json(2, 12, ", \"train_n\": 1785, \"test_n\": 589"));

  const auto data = load_dataset(dir / "set1.csv", dir / "set1.json");
  CHECK(data.size() == 1785);
  CHECK(data.features().cols() == 2);
  CHECK(data.manifest().set_id == "1");
  CHECK(data.manifest().task == Task::persuasive);
  CHECK(data.manifest().score_range == ScoreRange(2, 12));
  CHECK(data.features().values()(3, 0) == doctest::Approx(1.5));
  CHECK(data.features().values()(3, 1) == -1.25e-3);
}

TEST_CASE("load_dataset accepts a singleton") {
  TempDir dir;
  write_text(dir / "one.csv", "id,score,f1\nonly,2,0.5\n");
  write_text(dir / "one.json", manifest_json(2, 12));
  const auto data = load_dataset(dir / "one.csv", dir / "one.json");
  CHECK(data.size() == 1);
  CHECK(data.scores() == std::vector<int>{2});
}

TEST_CASE("load_dataset validation errors") {
  TempDir dir;
  write_text(dir / "m.json", manifest_json(2, 12));

  SUBCASE("score outside range names the row") {
    write_text(dir / "bad.csv", "id,score,f1\na,3,0\nessay-17,13,1\n");
    try {
      (void)load_dataset(dir / "bad.csv", dir / "m.json");
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("essay-17") != std::string::npos);
    }
  }
  SUBCASE("declared count mismatch") {
    write_text(dir / "c.json", manifest_json(2, 12, ", \"train_n\": 3"));
    write_text(dir / "two.csv", "id,score,f1\na,3,0\nb,4,1\n");
    CHECK_THROWS_AS((void)load_dataset(dir / "two.csv", dir / "c.json"), ValidationError);
  }
  SUBCASE("test split checks test_n") {
    write_text(dir / "t.json", manifest_json(2, 12, ", \"train_n\": 5, \"test_n\": 2, \"split\": \"test\""));
    write_text(dir / "two.csv", "id,score,f1\na,3,0\nb,4,1\n");
    CHECK(load_dataset(dir / "two.csv", dir / "t.json").size() == 2);
  }
  SUBCASE("duplicate ids") {
    write_text(dir / "dup.csv", "id,score,f1\na,3,0\na,4,1\n");
    CHECK_THROWS_AS((void)load_dataset(dir / "dup.csv", dir / "m.json"), ValidationError);
  }
}

TEST_CASE("feature CSV schema errors name the location") {
  auto message_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      (void)parse_feature_csv(in);
    } catch (const SchemaError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message_of("id,score,x1\n").find("line 1") != std::string::npos);
  CHECK(message_of("score,id,f1\n").find("header") != std::string::npos);
  const auto bad_value = message_of("id,score,f1,f2\na,1,0.5,abc\n");
  CHECK(bad_value.find("line 2") != std::string::npos);
  CHECK(bad_value.find("f2") != std::string::npos);
  CHECK(message_of("id,score,f1\na,1.5,0\n").find("score") != std::string::npos);
  CHECK(message_of("id,score,f1\na,1\n").find("columns") != std::string::npos);
  CHECK(message_of("id,score,f1\na,1,nan\n").find("f1") != std::string::npos);
}

TEST_CASE("manifest parsing") {
  std::istringstream bad_task(R"({"set_id":"2a","task":"poetry","min_score":1,"max_score":6})");
  CHECK_THROWS_AS((void)parse_manifest(bad_task), SchemaError);
  std::istringstream missing(R"({"set_id":"2a","task":"source","min_score":1})");
  CHECK_THROWS_AS((void)parse_manifest(missing), SchemaError);
  std::istringstream inverted(R"({"set_id":"2a","task":"source","min_score":4,"max_score":1})");
  CHECK_THROWS_AS((void)parse_manifest(inverted), ValidationError);
  std::istringstream ok(R"({"set_id":"2a","task":"source","min_score":1,"max_score":6})");
  const auto m = parse_manifest(ok);
  CHECK(m.set_id == "2a");
  CHECK(m.task == Task::source);
  CHECK_FALSE(m.declared_train_n.has_value());
}

TEST_CASE("generate_synthetic follows the linear generative form") {
  SyntheticOptions options;
  options.n = 200;
  options.beta = {1.5};
  options.noise_sd = 0.5;
  options.seed = 11;
  const auto synth = generate_synthetic(options);
  const Eigen::VectorXd x = synth.data.features().values().col(0);
  const Eigen::VectorXd& y = synth.raw_targets;
  // Least-squares slope through the data.
  const double xm = x.mean();
  const double ym = y.mean();
  const double slope = ((x.array() - xm) * (y.array() - ym)).sum() / (x.array() - xm).square().sum();
  CHECK(slope == doctest::Approx(1.5).epsilon(0.1));
  const Eigen::VectorXd residual = y - 1.5 * x;
  const double sd = std::sqrt((residual.array() - residual.mean()).square().sum() / 199.0);
  CHECK(sd == doctest::Approx(0.5).epsilon(0.2));
  for (int s : synth.data.scores()) CHECK(options.score_range.contains(s));
  CHECK(*std::min_element(synth.data.scores().begin(), synth.data.scores().end()) ==
        options.score_range.min_score);
  CHECK(*std::max_element(synth.data.scores().begin(), synth.data.scores().end()) ==
        options.score_range.max_score);
}

TEST_CASE("generate_synthetic without noise") {
  SyntheticOptions options;
  options.n = 50;
  options.beta = {2.0};
  options.noise_sd = 0.0;
  const auto synth = generate_synthetic(options);
  const Eigen::VectorXd x = synth.data.features().values().col(0);
  CHECK(synth.raw_targets == 2.0 * x);

  SUBCASE("scores are monotone in the feature") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      options.seed = seed;
      options.score_range = ScoreRange(static_cast<int>(seed % 3), 4 + static_cast<int>(seed % 7));
      const auto s = generate_synthetic(options);
      std::vector<std::size_t> order(options.n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      const auto& v = s.data.features().values();
      std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        return v(static_cast<Eigen::Index>(a), 0) < v(static_cast<Eigen::Index>(b), 0);
      });
      for (std::size_t k = 1; k < order.size(); ++k) {
        CHECK(s.data.scores()[order[k - 1]] <= s.data.scores()[order[k]]);
      }
    }
  }
}

TEST_CASE("generate_synthetic is deterministic and flags degenerate targets") {
  SyntheticOptions options;
  options.n = 30;
  options.p = 3;
  options.beta = {1.0, -2.0, 0.5};
  options.seed = 99;
  const auto a = generate_synthetic(options);
  const auto b = generate_synthetic(options);
  CHECK(a.data == b.data);
  CHECK(a.raw_targets == b.raw_targets);
  CHECK_FALSE(a.data.manifest().degenerate);

  options.beta = {0.0, 0.0, 0.0};
  options.noise_sd = 0.0;
  const auto flat = generate_synthetic(options);
  CHECK(flat.data.manifest().degenerate);
  for (int s : flat.data.scores()) CHECK(s == options.score_range.min_score);

  options.beta = {1.0};
  CHECK_THROWS_AS((void)generate_synthetic(options), ShapeError);
}

TEST_CASE("half_sample") {
  auto dataset_of = [](std::size_t n) {
    SyntheticOptions options;
    options.n = n;
    return generate_synthetic(options).data;
  };

  SUBCASE("even and odd sizes") {
    CHECK(half_sample(dataset_of(100), 3).size() == 50);
    CHECK(half_sample(dataset_of(917), 3).size() == 458);
    CHECK(half_sample(dataset_of(2), 3).size() == 1);
  }
  SUBCASE("rows are a duplicate-free subset of the parent") {
    const auto parent = dataset_of(101);
    const std::set<std::string> parent_ids(parent.features().row_ids().begin(),
                                           parent.features().row_ids().end());
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto half = half_sample(parent, seed);
      const std::set<std::string> ids(half.features().row_ids().begin(),
                                      half.features().row_ids().end());
      CHECK(ids.size() == 50);
      CHECK(std::includes(parent_ids.begin(), parent_ids.end(), ids.begin(), ids.end()));
      for (std::size_t i = 0; i < half.size(); ++i) {
        const auto j = *parent.features().find(half.features().row_ids()[i]);
        CHECK(half.scores()[i] == parent.scores()[j]);
      }
    }
  }
  SUBCASE("deterministic per seed") {
    const auto parent = dataset_of(60);
    CHECK(half_sample(parent, 5) == half_sample(parent, 5));
    CHECK_FALSE(half_sample(parent, 5) == half_sample(parent, 6));
  }
  SUBCASE("too small") {
    CHECK_THROWS_AS((void)half_sample(dataset_of(1), 1), SizeError);
  }
}

TEST_CASE("write_dataset round-trips") {
  TempDir dir;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SyntheticOptions options;
    options.n = 5 + seed * 7;
    options.p = 1 + seed % 4;
    options.beta.assign(options.p, 0.3 * static_cast<double>(seed));
    options.seed = seed;
    options.noise_sd = 0.1 * static_cast<double>(seed);
    options.set_id = "set" + std::to_string(seed);
    const auto [train, test] = split_rows(generate_synthetic(options).data, options.n - 3);
    write_dataset(train, dir / "f.csv", dir / "f.json");
    CHECK(load_dataset(dir / "f.csv", dir / "f.json") == train);
    write_dataset(test, dir / "g.csv", dir / "g.json");
    CHECK(load_dataset(dir / "g.csv", dir / "g.json") == test);
  }
}

TEST_CASE("FeatureMatrix invariants") {
  CHECK_THROWS_AS(FeatureMatrix({"a"}, Eigen::MatrixXd(1, 0)), ValidationError);
  CHECK_THROWS_AS(FeatureMatrix({"a", "b"}, Eigen::MatrixXd::Zero(1, 1)), ValidationError);
  Eigen::MatrixXd inf = Eigen::MatrixXd::Zero(2, 1);
  inf(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(FeatureMatrix({"a", "b"}, inf), ValidationError);
  const FeatureMatrix a({"a", "b"}, Eigen::MatrixXd::Ones(2, 2));
  const FeatureMatrix b({"a", "c"}, Eigen::MatrixXd::Ones(2, 2));
  CHECK(a.fingerprint() != b.fingerprint());
  CHECK(a.fingerprint() == FeatureMatrix({"a", "b"}, Eigen::MatrixXd::Ones(2, 2)).fingerprint());
}
