#include <limits>
#include <random>

#include "oed/sampling.hpp"
#include "oed/sampling_detail.hpp"
#include "oed/seeding.hpp"

namespace oed {

namespace {

// Index of the smallest entry among rows where `allowed` holds (first on ties).
Eigen::Index argmin_allowed(const Eigen::VectorXd& values, const std::vector<bool>& allowed) {
  Eigen::Index best = -1;
  double low = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (allowed[static_cast<std::size_t>(i)] && values(i) < low) {
      low = values(i);
      best = i;
    }
  }
  return best;
}

Eigen::MatrixXd seed_centroids(const Eigen::MatrixXd& x, Eigen::Index k, Rng& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centroids(k, x.cols());
  std::vector<bool> used(static_cast<std::size_t>(n), false);

  std::uniform_int_distribution<Eigen::Index> uniform(0, n - 1);
  Eigen::Index pick = uniform(rng);
  used[static_cast<std::size_t>(pick)] = true;
  centroids.row(0) = x.row(pick);
  Eigen::VectorXd d2 = (x.rowwise() - x.row(pick)).rowwise().squaredNorm();

  for (Eigen::Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    pick = -1;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double target = u(rng);
      double cumulative = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d2(i) <= 0.0) continue;
        cumulative += d2(i);
        pick = i;
        if (cumulative > target) break;
      }
    } else {
      // Every remaining point coincides with a centroid.
      for (Eigen::Index i = 0; i < n && pick < 0; ++i) {
        if (!used[static_cast<std::size_t>(i)]) pick = i;
      }
    }
    used[static_cast<std::size_t>(pick)] = true;
    centroids.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - x.row(pick)).rowwise().squaredNorm());
  }
  return centroids;
}

}  // namespace

namespace {

struct LloydRun {
  KMeansResult result;
  double inertia = 0.0;
};

LloydRun lloyd(const Eigen::MatrixXd& x, Eigen::Index k, std::size_t max_iters, Rng& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centroids = seed_centroids(x, k, rng);

  std::vector<Eigen::Index> assignment(static_cast<std::size_t>(n), -1);
  Eigen::MatrixXd dist(n, k);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    for (Eigen::Index c = 0; c < k; ++c) {
      dist.col(c) = (x.rowwise() - centroids.row(c)).rowwise().squaredNorm();
    }
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      dist.row(i).minCoeff(&best);  // first minimum on ties
      if (assignment[static_cast<std::size_t>(i)] != best) {
        assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assignment[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts(assignment[static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts(c) > 0) {
        centroids.row(c) = sums.row(c) / static_cast<double>(counts(c));
      } else {
        // Re-seed an empty cluster at the point farthest from its old centroid.
        Eigen::Index far = 0;
        dist.col(c).maxCoeff(&far);
        centroids.row(c) = x.row(far);
      }
    }
  }

  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    inertia += (x.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return {{std::move(centroids), std::move(assignment)}, inertia};
}

}  // namespace

KMeansResult kmeans_cluster(const Eigen::MatrixXd& x, std::size_t k_clusters,
                            const SamplerConfig& config) {
  const auto k = static_cast<Eigen::Index>(k_clusters);
  if (k < 1 || k > x.rows()) throw SizeError("k-means needs 1 <= k <= n");

  LloydRun best;
  for (std::size_t restart = 0; restart < config.restarts; ++restart) {
    Rng rng(derive_seed({config.seed, restart}));
    LloydRun run = lloyd(x, k, config.kmeans_max_iters, rng);
    if (restart == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  return std::move(best.result);
}

std::vector<std::size_t> claim_nearest(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centroids) {
  const Eigen::Index n = x.rows();
  std::vector<std::size_t> picks;
  picks.reserve(static_cast<std::size_t>(centroids.rows()));
  std::vector<bool> unclaimed(static_cast<std::size_t>(n), true);
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const Eigen::VectorXd d = (x.rowwise() - centroids.row(c)).rowwise().squaredNorm();
    const Eigen::Index pick = argmin_allowed(d, unclaimed);
    if (pick < 0) throw SizeError("more centroids than pool rows");
    unclaimed[static_cast<std::size_t>(pick)] = false;
    picks.push_back(static_cast<std::size_t>(pick));
  }
  return picks;
}

Design kmeans_sample(const FeatureMatrix& pool, std::size_t m, const SamplerConfig& config) {
  config.validate();
  detail::check_size(pool, m, 1, "k-means sampling");
  const auto clusters = kmeans_cluster(pool.values(), m, config);
  Design design;
  design.pool_ref = pool.fingerprint();
  design.indices = claim_nearest(pool.values(), clusters.centroids);
  return design;
}

}  // namespace oed
