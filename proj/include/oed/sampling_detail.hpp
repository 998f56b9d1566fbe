#pragma once

// Internal helpers shared by the sampling translation units.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "oed/sampling.hpp"

namespace oed::detail {

/// W such that the A/I criteria are -trace((M + delta I)^-1 W): the identity
/// for A, the pool second-moment matrix X'X / n for I.
Eigen::MatrixXd criterion_weight(Criterion kind, const Eigen::MatrixXd& pool_values);

/// Criterion of M + delta I, or nullopt when it is not positive definite or
/// the value is not finite.
std::optional<double> regularized_criterion(const Eigen::MatrixXd& info, Criterion kind,
                                            double delta, const Eigen::MatrixXd& weight);

/// First m entries of a seeded partial Fisher-Yates shuffle of `candidates`.
std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> candidates,
                                                  std::size_t m, std::uint64_t seed);

void check_size(const FeatureMatrix& pool, std::size_t m, std::size_t min_m, const char* who);

/// Rows mapped so that Euclidean distance equals Mahalanobis distance under
/// `covariance`, or nullopt when the covariance is numerically singular.
std::optional<Eigen::MatrixXd> whiten(const Eigen::MatrixXd& rows,
                                      const Eigen::MatrixXd& covariance);

}  // namespace oed::detail
