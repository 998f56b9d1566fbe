#include "oed/regression.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "oed/error.hpp"
#include "oed/seeding.hpp"

namespace oed {

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != means.size()) {
    throw ShapeError("expected " + std::to_string(means.size()) + " feature columns, got " +
                     std::to_string(x.cols()));
  }
  return (x.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
}

Standardizer Standardizer::identity(Eigen::Index p) {
  return {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Ones(p)};
}

RidgeModel fit_ridge(const Eigen::MatrixXd& x, std::span<const int> y, double lambda,
                     ScoreRange score_range, RidgeOptions options) {
  Eigen::VectorXd target(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) target(static_cast<Eigen::Index>(i)) = y[i];
  return fit_ridge(x, target, lambda, score_range, options);
}

RidgeModel fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                     ScoreRange score_range, RidgeOptions options) {
  const Eigen::Index m = x.rows();
  const Eigen::Index p = x.cols();
  if (m < 1) throw SizeError("ridge fit needs at least one row");
  if (y.size() != m) {
    throw ShapeError("ridge fit: " + std::to_string(m) + " rows but " +
                     std::to_string(y.size()) + " targets");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("lambda must be a finite nonnegative real");
  }

  Standardizer standardizer = Standardizer::identity(p);
  if (options.fit_intercept) standardizer.means = x.colwise().mean().transpose();
  if (options.standardize) {
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    for (Eigen::Index j = 0; j < p; ++j) {
      const double sd = std::sqrt(centered.col(j).squaredNorm() / static_cast<double>(m));
      // Near-constant columns are treated as constant.
      standardizer.scales(j) = sd > 1e-12 * (1.0 + std::abs(standardizer.means(j))) ? sd : 1.0;
    }
  }

  const Eigen::MatrixXd xs = standardizer.apply(x);
  const double y_mean = options.fit_intercept ? y.mean() : 0.0;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd gram = xs.transpose() * xs;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = xs.transpose() * yc;

  Eigen::VectorXd beta;
  if (lambda > 0.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericError("ridge system is not positive definite");
    beta = llt.solve(rhs);
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    qr.setThreshold(1e-12);
    if (qr.rank() < p) {
      throw NumericError("ridge system is singular at lambda = 0 (rank " +
                         std::to_string(qr.rank()) + " < " + std::to_string(p) +
                         "); use lambda > 0");
    }
    beta = qr.solve(rhs);
  }
  if (!beta.allFinite()) throw NumericError("ridge coefficients are not finite");

  return RidgeModel{std::move(beta), y_mean, lambda, std::move(standardizer), score_range};
}

Eigen::VectorXd predict_raw(const RidgeModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.coefficients.size()) {
    throw ShapeError("model expects " + std::to_string(model.coefficients.size()) +
                     " features, got " + std::to_string(x.cols()));
  }
  if (x.rows() == 0) return Eigen::VectorXd(0);
  return (model.standardizer.apply(x) * model.coefficients).array() + model.intercept;
}

std::vector<int> predict_scores(const RidgeModel& model, const Eigen::MatrixXd& x) {
  const Eigen::VectorXd raw = predict_raw(model, x);
  std::vector<int> out(static_cast<std::size_t>(raw.size()));
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    out[static_cast<std::size_t>(i)] = round_score(raw(i), model.score_range);
  }
  return out;
}

int round_score(double y_hat, ScoreRange range) noexcept {
  if (std::isnan(y_hat)) return range.min_score;
  if (y_hat <= range.min_score) return range.min_score;
  if (y_hat >= range.max_score) return range.max_score;
  const double lower = std::floor(y_hat);
  const double upper = lower + 1.0;
  const double z = y_hat <= (lower + upper) / 2.0 ? lower : upper;
  return std::clamp(static_cast<int>(z), range.min_score, range.max_score);
}

double select_lambda_cv(const Eigen::MatrixXd& x, std::span<const int> y,
                        std::span<const double> grid, std::size_t folds,
                        std::uint64_t seed, RidgeOptions options) {
  const auto m = static_cast<std::size_t>(x.rows());
  if (grid.empty()) throw ValidationError("lambda grid is empty");
  if (folds < 2) throw ValidationError("cross validation needs at least 2 folds");
  if (m < folds) {
    throw SizeError("cross validation with " + std::to_string(folds) + " folds needs at least " +
                    std::to_string(folds) + " rows, got " + std::to_string(m));
  }
  if (y.size() != m) throw ShapeError("cross validation: row count differs from target count");
  if (grid.size() == 1) return grid.front();

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  // Fold f holds shuffled positions [f*m/folds, (f+1)*m/folds).
  std::vector<std::size_t> fold_of(m);
  for (std::size_t f = 0; f < folds; ++f) {
    for (std::size_t k = f * m / folds; k < (f + 1) * m / folds; ++k) fold_of[order[k]] = f;
  }

  const ScoreRange unused_range{0, 1};
  double best_lambda = grid.front();
  double best_mse = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    double sse = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> train;
      std::vector<Eigen::Index> held;
      for (std::size_t i = 0; i < m; ++i) {
        (fold_of[i] == f ? held : train).push_back(static_cast<Eigen::Index>(i));
      }
      const Eigen::MatrixXd x_train = x(train, Eigen::all);
      Eigen::VectorXd y_train(static_cast<Eigen::Index>(train.size()));
      for (std::size_t k = 0; k < train.size(); ++k) {
        y_train(static_cast<Eigen::Index>(k)) = y[static_cast<std::size_t>(train[k])];
      }
      const auto model = fit_ridge(x_train, y_train, lambda, unused_range, options);
      const Eigen::VectorXd pred = predict_raw(model, x(held, Eigen::all));
      for (std::size_t k = 0; k < held.size(); ++k) {
        const double r = pred(static_cast<Eigen::Index>(k)) - y[static_cast<std::size_t>(held[k])];
        sse += r * r;
      }
    }
    const double mse = sse / static_cast<double>(m);
    if (mse < best_mse || (mse == best_mse && lambda > best_lambda)) {
      best_mse = mse;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd from_json_array(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw SchemaError(std::string("model missing array '") + key + "'");
  }
  const auto values = doc[key].get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

}  // namespace

void write_model(std::ostream& out, const RidgeModel& model) {
  nlohmann::ordered_json doc;
  doc["lambda"] = model.lambda;
  doc["means"] = to_vector(model.standardizer.means);
  doc["scales"] = to_vector(model.standardizer.scales);
  doc["coefficients"] = to_vector(model.coefficients);
  doc["intercept"] = model.intercept;
  doc["score_range"] = {{"min_score", model.score_range.min_score},
                        {"max_score", model.score_range.max_score}};
  out << doc.dump(2) << '\n';
}

RidgeModel read_model(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model is not valid JSON: ") + e.what());
  }
  try {
    RidgeModel model;
    model.lambda = doc.at("lambda").get<double>();
    model.standardizer.means = from_json_array(doc, "means");
    model.standardizer.scales = from_json_array(doc, "scales");
    model.coefficients = from_json_array(doc, "coefficients");
    model.intercept = doc.at("intercept").get<double>();
    const auto& range = doc.at("score_range");
    model.score_range = ScoreRange(range.at("min_score").get<int>(),
                                   range.at("max_score").get<int>());
    const auto p = model.coefficients.size();
    if (model.standardizer.means.size() != p || model.standardizer.scales.size() != p) {
      throw SchemaError("model arrays have inconsistent lengths");
    }
    if ((model.standardizer.scales.array() <= 0.0).any()) {
      throw SchemaError("model scales must be positive");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const RidgeModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model " + path.string());
  write_model(out, model);
}

RidgeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open model " + path.string());
  return read_model(in);
}

}  // namespace oed
