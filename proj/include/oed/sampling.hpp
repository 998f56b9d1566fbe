#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oed/dataset.hpp"

namespace oed {

/// An ordered selection of distinct rows from a pool. `pool_ref` is the
/// pool's fingerprint.
struct Design {
  std::string pool_ref;
  std::vector<std::size_t> indices;
  std::optional<double> criterion_value;

  [[nodiscard]] std::size_t size() const noexcept { return indices.size(); }
  friend bool operator==(const Design&, const Design&) = default;
};

/// Throws BoundsError/SizeError/MismatchError unless `design` is a valid
/// nonempty selection of distinct rows of `pool`.
void validate_design(const FeatureMatrix& pool, const Design& design);

/// Symmetric positive semidefinite p x p matrix.
class InformationMatrix {
 public:
  explicit InformationMatrix(Eigen::MatrixXd values);
  [[nodiscard]] const Eigen::MatrixXd& values() const noexcept { return values_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return values_.rows(); }

 private:
  Eigen::MatrixXd values_;
};

enum class Criterion { D, A, I };
enum class Distance { euclidean, mahalanobis };
enum class Algorithm { fedorov, kennard_stone, kmeans, random };

std::string to_string(Criterion criterion);
std::string to_string(Distance distance);
std::string to_string(Algorithm algorithm);
Criterion parse_criterion(const std::string& text);
Distance parse_distance(const std::string& text);
Algorithm parse_algorithm(const std::string& text);

struct SamplerConfig {
  Criterion criterion = Criterion::D;
  std::size_t restarts = 10;
  std::size_t max_exchange_passes = 100;
  // Added to the information matrix diagonal before evaluating a criterion.
  double ridge_delta = 1e-6;
  std::uint64_t seed = 20160101;
  Distance distance = Distance::mahalanobis;
  double covariance_shrinkage = 0.0;
  std::size_t kmeans_max_iters = 300;

  void validate() const;
};

/// (1/m) X_d' X_d over the design rows.
InformationMatrix information_matrix(const FeatureMatrix& pool, const Design& design);

/// Larger is better for every kind:
///   D: log det(M + delta I)
///   A: -trace((M + delta I)^-1)
///   I: -mean over pool rows x of x'(M + delta I)^-1 x   (needs `pool`)
double design_criterion(const InformationMatrix& info, Criterion kind, double delta,
                        const FeatureMatrix* pool = nullptr);

/// Fedorov exchange: from each of `restarts` seeded random starts, apply the
/// single best improving (in, out) swap per pass until no swap improves the
/// criterion or max_exchange_passes is reached. Returns the best design over
/// restarts with indices ascending.
///
/// When `trace` is given it receives, per restart, the criterion value of the
/// starting design followed by the value after each accepted swap.
using ExchangeTrace = std::vector<std::vector<double>>;
Design fedorov_exchange(const FeatureMatrix& pool, std::size_t m, const SamplerConfig& config,
                        ExchangeTrace* trace = nullptr);

/// Extends `existing` by `m_additional` rows. Only the new rows take part
/// in swaps; the criterion is evaluated on the union. The returned indices
/// list `existing` first, then the new rows ascending.
Design fedorov_augment(const FeatureMatrix& pool, const Design& existing,
                       std::size_t m_additional, const SamplerConfig& config,
                       ExchangeTrace* trace = nullptr);

/// Max-min distance selection seeded with the most distant pair. Indices
/// are in selection order.
Design kennard_stone(const FeatureMatrix& pool, std::size_t m, const SamplerConfig& config);

/// k-means with k = m, then the nearest unclaimed pool row to each final
/// centroid, centroids processed in order.
Design kmeans_sample(const FeatureMatrix& pool, std::size_t m, const SamplerConfig& config);

struct KMeansResult {
  Eigen::MatrixXd centroids;               // k x p
  std::vector<Eigen::Index> assignment;    // cluster of each row
};

/// Best of config.restarts runs (lowest within-cluster sum of squares). Each
/// run uses k-means++ seeding, then Lloyd iterations until the assignment is
/// stable or config.kmeans_max_iters is reached. An empty cluster is
/// re-seeded at the row farthest from its previous centroid.
KMeansResult kmeans_cluster(const Eigen::MatrixXd& x, std::size_t k, const SamplerConfig& config);

/// For each centroid in order, the nearest row not already claimed
/// (lowest index on ties).
std::vector<std::size_t> claim_nearest(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centroids);

/// m distinct rows drawn uniformly without replacement, in draw order.
Design random_sample(const FeatureMatrix& pool, std::size_t m, std::uint64_t seed);

/// Dispatches on `algorithm`; random sampling uses config.seed.
Design select_design(const FeatureMatrix& pool, Algorithm algorithm, std::size_t m,
                     const SamplerConfig& config);

/// sqrt((u - v)' (C + shrinkage I)^-1 (u - v)).
double mahalanobis_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                            const Eigen::MatrixXd& covariance, double shrinkage);

/// Sample covariance of the pool rows (denominator n - 1).
Eigen::MatrixXd pool_covariance(const FeatureMatrix& pool);

/// |a ∩ b| / |a| for a design `a` no larger than `b` over the same pool.
double persistence(const Design& a, const Design& b);

struct DesignHeader {
  std::string algorithm;
  std::uint64_t seed = 0;
};

/// Comment header (algorithm, m, seed, pool, criterion) followed by one
/// row id per line.
void write_design(std::ostream& out, const Design& design, const FeatureMatrix& pool,
                  const DesignHeader& header);
/// Maps ids back to pool rows. The pool fingerprint is checked when the
/// header records one.
Design read_design(std::istream& in, const FeatureMatrix& pool);

}  // namespace oed
