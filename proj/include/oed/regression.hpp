#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "oed/score_range.hpp"

namespace oed {

/// Per-feature centering and scaling learned from a training subset.
struct Standardizer {
  Eigen::VectorXd means;
  Eigen::VectorXd scales;  // strictly positive; zero-variance columns get 1

  [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  static Standardizer identity(Eigen::Index p);
};

struct RidgeOptions {
  bool standardize = true;
  bool fit_intercept = true;
};

/// Ridge fit in standardized coordinates. Prediction is
/// intercept + standardizer.apply(x) * coefficients; the intercept is the
/// training target mean and is never penalized.
struct RidgeModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
  Standardizer standardizer;
  ScoreRange score_range;
};

/// Solves (Xs'Xs + lambda I) beta = Xs'(y - mean y). Throws NumericError
/// when lambda == 0 and the system is singular.
RidgeModel fit_ridge(const Eigen::MatrixXd& x, std::span<const int> y, double lambda,
                     ScoreRange score_range, RidgeOptions options = {});
RidgeModel fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                     ScoreRange score_range, RidgeOptions options = {});

Eigen::VectorXd predict_raw(const RidgeModel& model, const Eigen::MatrixXd& x);

/// predict_raw followed by round_score on every element.
std::vector<int> predict_scores(const RidgeModel& model, const Eigen::MatrixXd& x);

/// Maps a real prediction onto the integer score range. Between adjacent
/// scores z1 < z2 the lower score wins when y_hat <= (z1 + z2) / 2.
/// Predictions outside the range clamp to its ends.
int round_score(double y_hat, ScoreRange range) noexcept;

/// Grid value with the lowest mean squared error over seeded k-fold splits.
/// Ties go to the larger lambda.
double select_lambda_cv(const Eigen::MatrixXd& x, std::span<const int> y,
                        std::span<const double> grid, std::size_t folds,
                        std::uint64_t seed, RidgeOptions options = {});

void write_model(std::ostream& out, const RidgeModel& model);
RidgeModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const RidgeModel& model);
RidgeModel load_model(const std::filesystem::path& path);

}  // namespace oed
