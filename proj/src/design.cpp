#include "oed/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "oed/format.hpp"
#include "oed/sampling_detail.hpp"
#include "oed/seeding.hpp"

namespace oed {

// ---------------------------------------------------------------------------
// Enumerations

std::string to_string(Criterion criterion) {
  switch (criterion) {
    case Criterion::D: return "D";
    case Criterion::A: return "A";
    case Criterion::I: return "I";
  }
  return "D";
}

std::string to_string(Distance distance) {
  return distance == Distance::euclidean ? "euclidean" : "mahalanobis";
}

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::fedorov: return "fedorov";
    case Algorithm::kennard_stone: return "kennard_stone";
    case Algorithm::kmeans: return "kmeans";
    case Algorithm::random: return "random";
  }
  return "random";
}

Criterion parse_criterion(const std::string& text) {
  if (text == "D" || text == "d") return Criterion::D;
  if (text == "A" || text == "a") return Criterion::A;
  if (text == "I" || text == "i") return Criterion::I;
  throw ValidationError("unknown criterion '" + text + "' (expected D, A or I)");
}

Distance parse_distance(const std::string& text) {
  if (text == "euclidean") return Distance::euclidean;
  if (text == "mahalanobis") return Distance::mahalanobis;
  throw ValidationError("unknown distance '" + text + "' (expected euclidean or mahalanobis)");
}

Algorithm parse_algorithm(const std::string& text) {
  if (text == "fedorov") return Algorithm::fedorov;
  if (text == "kennard_stone" || text == "kennard-stone") return Algorithm::kennard_stone;
  if (text == "kmeans" || text == "k-means") return Algorithm::kmeans;
  if (text == "random") return Algorithm::random;
  throw ValidationError("unknown algorithm '" + text +
                        "' (expected fedorov, kennard_stone, kmeans or random)");
}

void SamplerConfig::validate() const {
  if (restarts < 1) throw ValidationError("sampler restarts must be >= 1");
  if (!(ridge_delta > 0.0) || !std::isfinite(ridge_delta)) {
    throw ValidationError("sampler ridge_delta must be a finite positive real");
  }
  if (!(covariance_shrinkage >= 0.0) || !std::isfinite(covariance_shrinkage)) {
    throw ValidationError("covariance shrinkage must be a finite nonnegative real");
  }
}

// ---------------------------------------------------------------------------
// Designs and information matrices

void validate_design(const FeatureMatrix& pool, const Design& design) {
  if (!design.pool_ref.empty() && design.pool_ref != pool.fingerprint()) {
    throw MismatchError("design refers to pool " + design.pool_ref + ", not " +
                        pool.fingerprint());
  }
  if (design.indices.empty()) throw SizeError("design is empty");
  if (design.size() > pool.rows()) {
    throw SizeError("design of " + std::to_string(design.size()) + " rows exceeds pool of " +
                    std::to_string(pool.rows()));
  }
  std::vector<bool> seen(pool.rows(), false);
  for (auto i : design.indices) {
    if (i >= pool.rows()) {
      throw BoundsError("design index " + std::to_string(i) + " out of range for pool of " +
                        std::to_string(pool.rows()));
    }
    if (seen[i]) throw ValidationError("design repeats index " + std::to_string(i));
    seen[i] = true;
  }
}

InformationMatrix::InformationMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols() || values_.rows() < 1) {
    throw ShapeError("information matrix must be square and nonempty");
  }
  if (!values_.allFinite()) throw NumericError("information matrix has non-finite entries");
  const double scale = std::max(1.0, values_.cwiseAbs().maxCoeff());
  if ((values_ - values_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("information matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(values_, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double spectral = ev.cwiseAbs().maxCoeff();
  if (ev.minCoeff() < -1e-10 * spectral) {
    throw ValidationError("information matrix is not positive semidefinite");
  }
}

InformationMatrix information_matrix(const FeatureMatrix& pool, const Design& design) {
  validate_design(pool, design);
  const std::vector<Eigen::Index> rows(design.indices.begin(), design.indices.end());
  const Eigen::MatrixXd xd = pool.values()(rows, Eigen::all);
  Eigen::MatrixXd info = xd.transpose() * xd / static_cast<double>(design.size());
  // Exact symmetry; the product is symmetric up to rounding.
  info = (0.5 * (info + info.transpose())).eval();
  return InformationMatrix(std::move(info));
}

namespace detail {

Eigen::MatrixXd criterion_weight(Criterion kind, const Eigen::MatrixXd& pool_values) {
  const auto p = pool_values.cols();
  if (kind == Criterion::I) {
    return pool_values.transpose() * pool_values / static_cast<double>(pool_values.rows());
  }
  return Eigen::MatrixXd::Identity(p, p);
}

std::optional<double> regularized_criterion(const Eigen::MatrixXd& info, Criterion kind,
                                            double delta, const Eigen::MatrixXd& weight) {
  Eigen::MatrixXd reg = info;
  reg.diagonal().array() += delta;
  Eigen::LLT<Eigen::MatrixXd> llt(reg);
  if (llt.info() != Eigen::Success) return std::nullopt;
  double value = 0.0;
  if (kind == Criterion::D) {
    value = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  } else {
    // trace(reg^-1 W)
    value = -llt.solve(weight).trace();
  }
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace detail

double design_criterion(const InformationMatrix& info, Criterion kind, double delta,
                        const FeatureMatrix* pool) {
  if (!(delta > 0.0)) throw ValidationError("criterion delta must be positive");
  Eigen::MatrixXd weight;
  if (kind == Criterion::I) {
    if (pool == nullptr) throw ValidationError("I-criterion requires the candidate pool");
    if (static_cast<Eigen::Index>(pool->cols()) != info.dim()) {
      throw ShapeError("pool feature count differs from information matrix size");
    }
    weight = detail::criterion_weight(kind, pool->values());
  } else {
    weight = Eigen::MatrixXd::Identity(info.dim(), info.dim());
  }
  const auto value = detail::regularized_criterion(info.values(), kind, delta, weight);
  if (!value) {
    throw NumericError(to_string(kind) +
                       "-criterion is not finite; the information matrix is too ill-conditioned");
  }
  return *value;
}

// ---------------------------------------------------------------------------
// Random baseline and dispatch

namespace detail {

std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> candidates,
                                                  std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = candidates.size();
  for (std::size_t k = 0; k < m; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(candidates[k], candidates[pick(rng)]);
  }
  candidates.resize(m);
  return candidates;
}

void check_size(const FeatureMatrix& pool, std::size_t m, std::size_t min_m, const char* who) {
  if (m < min_m) {
    throw SizeError(std::string(who) + " needs m >= " + std::to_string(min_m) + ", got " +
                    std::to_string(m));
  }
  if (m > pool.rows()) {
    throw SizeError(std::string(who) + ": m = " + std::to_string(m) + " exceeds pool size " +
                    std::to_string(pool.rows()));
  }
}

}  // namespace detail

Design random_sample(const FeatureMatrix& pool, std::size_t m, std::uint64_t seed) {
  detail::check_size(pool, m, 1, "random sampling");
  std::vector<std::size_t> all(pool.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return Design{pool.fingerprint(), detail::draw_without_replacement(std::move(all), m, seed),
                std::nullopt};
}

Design select_design(const FeatureMatrix& pool, Algorithm algorithm, std::size_t m,
                     const SamplerConfig& config) {
  switch (algorithm) {
    case Algorithm::fedorov: return fedorov_exchange(pool, m, config);
    case Algorithm::kennard_stone: return kennard_stone(pool, m, config);
    case Algorithm::kmeans: return kmeans_sample(pool, m, config);
    case Algorithm::random: return random_sample(pool, m, config.seed);
  }
  throw ValidationError("unknown algorithm");
}

// ---------------------------------------------------------------------------
// Persistence

double persistence(const Design& a, const Design& b) {
  if (a.pool_ref != b.pool_ref) throw MismatchError("persistence of designs over different pools");
  if (a.indices.empty()) throw SizeError("persistence of an empty design");
  if (a.size() > b.size()) {
    throw SizeError("persistence expects the first design to be no larger than the second");
  }
  std::vector<std::size_t> sa = a.indices;
  std::vector<std::size_t> sb = b.indices;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<std::size_t> common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  return static_cast<double>(common.size()) / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// Serialization

void write_design(std::ostream& out, const Design& design, const FeatureMatrix& pool,
                  const DesignHeader& header) {
  validate_design(pool, design);
  out << "# algorithm: " << header.algorithm << '\n'
      << "# m: " << design.size() << '\n'
      << "# seed: " << header.seed << '\n'
      << "# pool: " << pool.fingerprint() << '\n'
      << "# criterion: "
      << (design.criterion_value ? format_real(*design.criterion_value) : std::string("none"))
      << '\n';
  for (auto i : design.indices) out << pool.row_ids()[i] << '\n';
}

Design read_design(std::istream& in, const FeatureMatrix& pool) {
  std::unordered_map<std::string_view, std::size_t> lookup;
  lookup.reserve(pool.rows());
  for (std::size_t i = 0; i < pool.rows(); ++i) lookup.emplace(pool.row_ids()[i], i);

  Design design;
  design.pool_ref = pool.fingerprint();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      auto key = line.substr(1, colon - 1);
      auto value = line.substr(colon + 1);
      key.erase(0, key.find_first_not_of(' '));
      value.erase(0, value.find_first_not_of(' '));
      if (key == "pool" && value != pool.fingerprint()) {
        throw MismatchError("design file was written for pool " + value + ", not " +
                            pool.fingerprint());
      }
      if (key == "criterion" && value != "none") {
        double c = 0.0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), c);
        if (ec != std::errc{}) throw SchemaError("design line " + std::to_string(line_no) +
                                                 ": bad criterion '" + value + "'");
        design.criterion_value = c;
      }
      continue;
    }
    const auto it = lookup.find(line);
    if (it == lookup.end()) {
      throw ValidationError("design line " + std::to_string(line_no) + ": row id '" + line +
                            "' is not in the pool");
    }
    design.indices.push_back(it->second);
  }
  validate_design(pool, design);
  return design;
}

}  // namespace oed
