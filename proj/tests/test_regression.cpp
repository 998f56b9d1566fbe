#include <doctest.h>

#include <sstream>
#include <vector>

#include "oed/error.hpp"
#include "oed/regression.hpp"
#include "ridge_oracle.hpp"
#include "test_support.hpp"

using namespace oed;
using oed::testing::oracle_ridge;
using oed::testing::oracle_round;
using oed::testing::random_normal;

namespace {

const ScoreRange kRange{0, 100};
constexpr RidgeOptions kPlain{false, false};

double relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

}  // namespace

TEST_CASE("fit_ridge examples") {
  Eigen::MatrixXd x(2, 1);
  x << 1, 2;
  const std::vector<int> y{2, 4};
  CHECK(fit_ridge(x, y, 0.0, kRange, kPlain).coefficients(0) == doctest::Approx(2.0));
  CHECK(fit_ridge(x, y, 5.0, kRange, kPlain).coefficients(0) == doctest::Approx(1.0));

  const auto model = fit_ridge(x, y, 0.0, kRange, kPlain);
  Eigen::MatrixXd probe(1, 1);
  probe << 3;
  CHECK(predict_raw(model, probe)(0) == doctest::Approx(6.0));
  CHECK(predict_raw(model, Eigen::MatrixXd(0, 1)).size() == 0);
  CHECK_THROWS_AS((void)predict_raw(model, Eigen::MatrixXd::Zero(1, 2)), ShapeError);
}

TEST_CASE("huge lambda shrinks to the mean") {
  const Eigen::MatrixXd x = random_normal(40, 5, 3);
  std::vector<int> y;
  for (Eigen::Index i = 0; i < 40; ++i) y.push_back(static_cast<int>(5 + 3 * x(i, 0)));
  const auto model = fit_ridge(x, y, 1e8, kRange);
  CHECK(model.coefficients.cwiseAbs().maxCoeff() < 1e-4);
  double mean = 0.0;
  for (int v : y) mean += v;
  mean /= static_cast<double>(y.size());
  const Eigen::VectorXd pred = predict_raw(model, random_normal(10, 5, 4));
  for (Eigen::Index i = 0; i < pred.size(); ++i) CHECK(pred(i) == doctest::Approx(mean).epsilon(1e-3));
}

TEST_CASE("fit_ridge matches the normal-equation oracle") {
  std::mt19937_64 shapes(99);
  for (int trial = 0; trial < 60; ++trial) {
    const auto m = static_cast<Eigen::Index>(2 + shapes() % 199);
    const auto p = static_cast<Eigen::Index>(1 + shapes() % 50);
    const double lambda = std::array{0.01, 1.0, 100.0}[trial % 3];
    const Eigen::MatrixXd x = random_normal(m, p, 200 + static_cast<std::uint64_t>(trial));
    const Eigen::VectorXd y = (random_normal(m, 1, 300 + static_cast<std::uint64_t>(trial)).col(0) * 3)
                                  .array()
                                  .round() + 6;
    const auto model = fit_ridge(x, y, lambda, kRange);
    const auto oracle = oracle_ridge(x, y, lambda);
    CHECK(relative_error(model.coefficients, oracle.beta) < 1e-8);
    CHECK(model.intercept == doctest::Approx(oracle.intercept));
    const Eigen::MatrixXd probe = random_normal(20, p, 400 + static_cast<std::uint64_t>(trial));
    CHECK(relative_error(predict_raw(model, probe), oracle.predict(probe)) < 1e-8);
  }
}

TEST_CASE("exact interpolation at lambda 0 reproduces the targets") {
  const Eigen::MatrixXd x = random_normal(30, 4, 8);
  const Eigen::VectorXd beta = Eigen::Vector4d(1, -2, 0.5, 3);
  const Eigen::VectorXd y = (x * beta).array() + 2.0;
  const auto model = fit_ridge(x, y, 0.0, kRange);
  CHECK((predict_raw(model, x) - y).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("coefficient norm is non-increasing in lambda") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Eigen::MatrixXd x = random_normal(25, 8, seed);
    const Eigen::VectorXd y = random_normal(25, 1, seed + 50).col(0);
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 0.001, 0.1, 1.0, 3.0, 10.0, 100.0, 1e4, 1e8}) {
      const double norm = fit_ridge(x, y, lambda, kRange).coefficients.norm();
      CHECK(norm <= previous * (1 + 1e-12));
      previous = norm;
    }
  }
}

TEST_CASE("prediction at the training centroid equals mean y") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Eigen::MatrixXd x = random_normal(15, 6, seed);
    const Eigen::VectorXd y = random_normal(15, 1, seed + 10).col(0);
    const auto model = fit_ridge(x, y, 2.0, kRange);
    const Eigen::MatrixXd centroid = x.colwise().mean();
    CHECK(std::abs(predict_raw(model, centroid)(0) - y.mean()) < 1e-10);
  }
}

TEST_CASE("zero-variance columns get scale one") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 7, 2, 7, 3, 7, 4, 7;
  const std::vector<int> y{1, 2, 3, 4};
  const auto model = fit_ridge(x, y, 1.0, kRange);
  CHECK(model.standardizer.scales(1) == 1.0);
  CHECK(model.coefficients(1) == 0.0);
}

TEST_CASE("singular system at lambda 0") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 2, 2, 4, 3, 6;
  const std::vector<int> y{1, 2, 3};
  CHECK_THROWS_AS((void)fit_ridge(x, y, 0.0, kRange), NumericError);
  CHECK_THROWS_AS((void)fit_ridge(x, y, -1.0, kRange), ValidationError);
  CHECK_NOTHROW((void)fit_ridge(x, y, 0.1, kRange));
}

TEST_CASE("round_score spot values") {
  const ScoreRange range{2, 12};
  CHECK(round_score(2.4, range) == 2);
  CHECK(round_score(2.5, range) == 2);
  CHECK(round_score(2.6, range) == 3);
  CHECK(round_score(13.7, range) == 12);
  CHECK(round_score(-40.0, range) == 2);
  CHECK(round_score(11.5, range) == 11);
  CHECK(round_score(11.50001, range) == 12);
  for (int z = 2; z <= 12; ++z) CHECK(round_score(z, range) == z);
}

TEST_CASE("round_score matches the brute-force oracle") {
  const ScoreRange range{2, 12};
  const int points = 100000;
  const double lo = -3.0;
  const double hi = 17.0;
  for (int k = 0; k < points; ++k) {
    const double y = lo + (hi - lo) * k / (points - 1);
    const int got = round_score(y, range);
    REQUIRE(got == oracle_round(y, 2, 12));
  }
}

TEST_CASE("select_lambda_cv") {
  const Eigen::MatrixXd x = random_normal(40, 3, 6);
  std::vector<int> y;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    y.push_back(static_cast<int>(std::lround(10 * x(i, 0) - 5 * x(i, 1) + 2 * x(i, 2))));
  }
  const std::vector<double> single{3.5};
  CHECK(select_lambda_cv(x, y, single, 5, 1) == 3.5);
  const std::vector<double> grid{0.01, 1e6};
  CHECK(select_lambda_cv(x, y, grid, 5, 1) == 0.01);
  const std::vector<double> wide{0.0, 0.1, 1.0, 10.0, 100.0};
  CHECK(select_lambda_cv(x, y, wide, 4, 17) == select_lambda_cv(x, y, wide, 4, 17));

  const std::vector<int> few{1, 2, 3};
  CHECK_THROWS_AS((void)select_lambda_cv(x.topRows(3), few, grid, 5, 1), SizeError);
  CHECK_THROWS_AS((void)select_lambda_cv(x, y, std::vector<double>{}, 5, 1), ValidationError);
  CHECK_THROWS_AS((void)select_lambda_cv(x, y, grid, 1, 1), ValidationError);
}

TEST_CASE("select_lambda_cv breaks ties toward the larger lambda") {
  // Constant targets: every lambda predicts the fold mean exactly.
  const Eigen::MatrixXd x = random_normal(20, 2, 1);
  const std::vector<int> y(20, 4);
  const std::vector<double> grid{0.5, 2.0, 1.0};
  CHECK(select_lambda_cv(x, y, grid, 4, 3) == 2.0);
}

TEST_CASE("model JSON round-trip") {
  const Eigen::MatrixXd x = random_normal(30, 3, 2);
  const Eigen::VectorXd y = random_normal(30, 1, 5).col(0);
  const auto model = fit_ridge(x, y, 0.3, ScoreRange{1, 6});
  std::stringstream buffer;
  write_model(buffer, model);
  const auto back = read_model(buffer);
  CHECK(back.lambda == model.lambda);
  CHECK(back.intercept == model.intercept);
  CHECK(back.coefficients == model.coefficients);
  CHECK(back.standardizer.means == model.standardizer.means);
  CHECK(back.standardizer.scales == model.standardizer.scales);
  CHECK(back.score_range == model.score_range);
  CHECK(predict_scores(back, x) == predict_scores(model, x));

  oed::testing::TempDir dir;
  save_model(dir / "model.json", model);
  CHECK(load_model(dir / "model.json").coefficients == model.coefficients);

  std::istringstream broken(R"({"lambda": 1})");
  CHECK_THROWS_AS((void)read_model(broken), SchemaError);
}
