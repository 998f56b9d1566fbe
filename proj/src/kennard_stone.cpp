#include <cmath>
#include <limits>

#include "oed/sampling.hpp"
#include "oed/sampling_detail.hpp"

namespace oed {

namespace detail {

std::optional<Eigen::MatrixXd> whiten(const Eigen::MatrixXd& rows,
                                      const Eigen::MatrixXd& covariance) {
  // Factor the correlation form D^-1/2 C D^-1/2 so the singularity test
  // does not depend on feature units.
  const Eigen::VectorXd diag = covariance.diagonal();
  if (!diag.allFinite() || (diag.array() <= 0.0).any()) return std::nullopt;
  const Eigen::VectorXd inv_sd = diag.array().sqrt().inverse();
  const Eigen::MatrixXd corr = inv_sd.asDiagonal() * covariance * inv_sd.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd pivots = llt.matrixLLT().diagonal().array().square();
  if (pivots.minCoeff() <= 1e-12 * pivots.maxCoeff()) return std::nullopt;
  const Eigen::MatrixXd scaled = rows * inv_sd.asDiagonal();
  Eigen::MatrixXd z = llt.matrixL().solve(scaled.transpose()).transpose();
  return z;
}

}  // namespace detail

Eigen::MatrixXd pool_covariance(const FeatureMatrix& pool) {
  const auto& x = pool.values();
  const auto p = x.cols();
  if (x.rows() < 2) return Eigen::MatrixXd::Zero(p, p);
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

double mahalanobis_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                            const Eigen::MatrixXd& covariance, double shrinkage) {
  if (u.size() != v.size() || covariance.rows() != u.size() || covariance.cols() != u.size()) {
    throw ShapeError("Mahalanobis distance: vector and covariance sizes differ");
  }
  if (!(shrinkage >= 0.0)) throw ValidationError("shrinkage must be nonnegative");
  Eigen::MatrixXd reg = covariance;
  reg.diagonal().array() += shrinkage;
  const Eigen::MatrixXd diff = (u - v).transpose();
  const auto z = detail::whiten(diff, reg);
  if (!z) {
    throw NumericError("covariance plus shrinkage is singular; use a larger shrinkage");
  }
  return z->norm();
}

namespace {

Eigen::MatrixXd distance_space(const FeatureMatrix& pool, const SamplerConfig& config) {
  if (config.distance == Distance::euclidean) return pool.values();
  Eigen::MatrixXd cov = pool_covariance(pool);
  cov.diagonal().array() += config.covariance_shrinkage;
  if (auto z = detail::whiten(pool.values(), cov)) return *z;
  const double mean_diag = cov.diagonal().mean();
  cov.diagonal().array() += mean_diag > 0.0 ? 1e-6 * mean_diag : 1e-6;
  if (auto z = detail::whiten(pool.values(), cov)) return *z;
  throw NumericError("pool covariance is singular even after shrinkage; "
                     "increase covariance_shrinkage");
}

}  // namespace

Design kennard_stone(const FeatureMatrix& pool, std::size_t m, const SamplerConfig& config) {
  config.validate();
  detail::check_size(pool, m, 2, "Kennard-Stone");
  const Eigen::MatrixXd z = distance_space(pool, config);
  const Eigen::Index n = z.rows();

  // Squared distances preserve every comparison.
  Eigen::Index first = 0;
  Eigen::Index second = 1;
  double widest = -1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (z.row(i) - z.row(j)).squaredNorm();
      if (d > widest) {
        widest = d;
        first = i;
        second = j;
      }
    }
  }

  Design design;
  design.pool_ref = pool.fingerprint();
  design.indices = {static_cast<std::size_t>(first), static_cast<std::size_t>(second)};

  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  chosen[static_cast<std::size_t>(first)] = chosen[static_cast<std::size_t>(second)] = true;
  Eigen::VectorXd nearest = (z.rowwise() - z.row(first)).rowwise().squaredNorm().cwiseMin(
      (z.rowwise() - z.row(second)).rowwise().squaredNorm());

  while (design.size() < m) {
    Eigen::Index pick = -1;
    double far = -1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!chosen[static_cast<std::size_t>(j)] && nearest(j) > far) {
        far = nearest(j);
        pick = j;
      }
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    design.indices.push_back(static_cast<std::size_t>(pick));
    nearest = nearest.cwiseMin((z.rowwise() - z.row(pick)).rowwise().squaredNorm());
  }
  return design;
}

}  // namespace oed
