#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oed/sampling.hpp"
#include "oed/sampling_detail.hpp"
#include "oed/seeding.hpp"

namespace oed {

namespace {

struct ExchangeOutcome {
  std::vector<std::size_t> added;  // ascending
  double criterion = -std::numeric_limits<double>::infinity();
};

std::vector<Eigen::Index> as_rows(std::span<const std::size_t> idx) {
  return {idx.begin(), idx.end()};
}

// Greedy exchange over the rows in `added`, holding `fixed` in the design.
//
// With A = M + delta I over the current design of size m and a = x'A^-1 y,
// swapping design row i for candidate j changes the criterion by
//   D:   log[(1 + a_jj/m)(1 - a_ii/m) + (a_ij/m)^2]
//   A/I: tr(S^-1 Q), S = [[m + a_jj, a_ij], [a_ij, a_ii - m]],
//        Q = U'BU over U = [x_j, x_i], B = A^-1 W A^-1
// (determinant lemma and the rank-two Woodbury identity). A is rebuilt from
// scratch on every pass, so accumulated update error never carries over.
class Exchanger {
 public:
  Exchanger(const Eigen::MatrixXd& x, const SamplerConfig& config)
      : x_(x),
        config_(config),
        weight_(detail::criterion_weight(config.criterion, x)),
        p_(x.cols()) {}

  double criterion(std::span<const std::size_t> fixed,
                   std::span<const std::size_t> added) const {
    const auto info = information(fixed, added);
    const auto value =
        detail::regularized_criterion(info, config_.criterion, config_.ridge_delta, weight_);
    if (!value) {
      throw NumericError("design criterion is not finite; increase ridge_delta");
    }
    return *value;
  }

  ExchangeOutcome run(std::span<const std::size_t> fixed, std::vector<std::size_t> added,
                      std::vector<double>* trace) const {
    const std::size_t n = static_cast<std::size_t>(x_.rows());
    const double m = static_cast<double>(fixed.size() + added.size());
    std::sort(added.begin(), added.end());

    std::vector<bool> in_design(n, false);
    for (auto i : fixed) in_design[i] = true;
    for (auto i : added) in_design[i] = true;

    double current = criterion(fixed, added);
    if (trace != nullptr) trace->push_back(current);
    for (std::size_t pass = 0; pass < config_.max_exchange_passes; ++pass) {
      std::vector<std::size_t> outside;
      outside.reserve(n);
      for (std::size_t j = 0; j < n; ++j) {
        if (!in_design[j]) outside.push_back(j);
      }
      if (outside.empty() || added.empty()) break;

      Eigen::MatrixXd reg = information(fixed, added);
      reg.diagonal().array() += config_.ridge_delta;
      Eigen::LLT<Eigen::MatrixXd> llt(reg);
      if (llt.info() != Eigen::Success) {
        throw NumericError("information matrix lost positive definiteness");
      }
      const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p_, p_));

      const Eigen::MatrixXd xa = x_(as_rows(added), Eigen::all);
      const Eigen::MatrixXd xo = x_(as_rows(outside), Eigen::all);
      const Eigen::MatrixXd pa = xa * inv;
      const Eigen::VectorXd aa = pa.cwiseProduct(xa).rowwise().sum();
      const Eigen::VectorXd ao = (xo * inv).cwiseProduct(xo).rowwise().sum();
      const Eigen::MatrixXd cross = pa * xo.transpose();

      const Eigen::Index na = xa.rows();
      const Eigen::Index no = xo.rows();
      double best_gain = 0.0;
      Eigen::Index best_in = -1;
      Eigen::Index best_out = -1;

      if (config_.criterion == Criterion::D) {
        // log is monotone: search on the determinant ratio, take the log once.
        const Eigen::ArrayXd grow = 1.0 + ao.array() / m;
        double best_ratio = 1.0;
        for (Eigen::Index i = 0; i < na; ++i) {
          const double keep = 1.0 - aa(i) / m;
          for (Eigen::Index j = 0; j < no; ++j) {
            const double c = cross(i, j) / m;
            const double ratio = grow(j) * keep + c * c;
            if (ratio > best_ratio) {
              best_ratio = ratio;
              best_in = i;
              best_out = j;
            }
          }
        }
        best_gain = std::log(best_ratio);
      } else {
        const Eigen::MatrixXd b = inv * weight_ * inv;
        const Eigen::MatrixXd qa_rows = xa * b;
        const Eigen::VectorXd qa = qa_rows.cwiseProduct(xa).rowwise().sum();
        const Eigen::VectorXd qo = (xo * b).cwiseProduct(xo).rowwise().sum();
        const Eigen::MatrixXd qcross = qa_rows * xo.transpose();
        for (Eigen::Index i = 0; i < na; ++i) {
          for (Eigen::Index j = 0; j < no; ++j) {
            const double s11 = m + ao(j);
            const double s22 = aa(i) - m;
            const double s12 = cross(i, j);
            const double det = s11 * s22 - s12 * s12;
            if (!(det < 0.0)) continue;
            const double gain = (s22 * qo(j) - 2.0 * s12 * qcross(i, j) + s11 * qa(i)) / det;
            if (gain > best_gain) {
              best_gain = gain;
              best_in = i;
              best_out = j;
            }
          }
        }
      }

      if (best_in < 0 || best_gain <= 1e-12 * std::max(1.0, std::abs(current))) break;

      const std::size_t leaving = added[static_cast<std::size_t>(best_in)];
      const std::size_t entering = outside[static_cast<std::size_t>(best_out)];
      std::vector<std::size_t> trial = added;
      trial[static_cast<std::size_t>(best_in)] = entering;
      std::sort(trial.begin(), trial.end());
      const double next = criterion(fixed, trial);
      // The update formula and the direct evaluation must agree on progress.
      if (!(next > current)) break;
      in_design[leaving] = false;
      in_design[entering] = true;
      added = std::move(trial);
      current = next;
      if (trace != nullptr) trace->push_back(current);
    }
    return {std::move(added), current};
  }

 private:
  Eigen::MatrixXd information(std::span<const std::size_t> fixed,
                              std::span<const std::size_t> added) const {
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p_, p_);
    for (auto i : fixed) {
      info.selfadjointView<Eigen::Lower>().rankUpdate(x_.row(static_cast<Eigen::Index>(i)).transpose());
    }
    for (auto i : added) {
      info.selfadjointView<Eigen::Lower>().rankUpdate(x_.row(static_cast<Eigen::Index>(i)).transpose());
    }
    info = info.selfadjointView<Eigen::Lower>();
    return info / static_cast<double>(fixed.size() + added.size());
  }

  const Eigen::MatrixXd& x_;
  const SamplerConfig& config_;
  Eigen::MatrixXd weight_;
  Eigen::Index p_;
};

Design augment_impl(const FeatureMatrix& pool, const Design& existing, std::size_t m_additional,
                    const SamplerConfig& config, ExchangeTrace* trace) {
  config.validate();
  if (trace != nullptr) trace->clear();
  const std::size_t n = pool.rows();
  if (existing.size() + m_additional > n) {
    throw SizeError("design of " + std::to_string(existing.size()) + " + " +
                    std::to_string(m_additional) + " rows exceeds pool of " + std::to_string(n));
  }
  if (existing.size() + m_additional == 0) throw SizeError("Fedorov exchange needs m >= 1");

  std::vector<bool> fixed_mask(n, false);
  for (auto i : existing.indices) fixed_mask[i] = true;
  std::vector<std::size_t> candidates;
  candidates.reserve(n - existing.size());
  for (std::size_t j = 0; j < n; ++j) {
    if (!fixed_mask[j]) candidates.push_back(j);
  }

  const Exchanger exchanger(pool.values(), config);
  ExchangeOutcome best;
  bool have_best = false;
  for (std::size_t restart = 0; restart < config.restarts; ++restart) {
    auto start = detail::draw_without_replacement(candidates, m_additional,
                                                  derive_seed({config.seed, restart}));
    std::vector<double>* steps = nullptr;
    if (trace != nullptr) steps = &trace->emplace_back();
    auto outcome = exchanger.run(existing.indices, std::move(start), steps);
    if (!have_best || outcome.criterion > best.criterion) {
      best = std::move(outcome);
      have_best = true;
    }
    if (m_additional == 0 || m_additional == candidates.size()) break;  // nothing to vary
  }

  Design result;
  result.pool_ref = pool.fingerprint();
  result.indices = existing.indices;
  result.indices.insert(result.indices.end(), best.added.begin(), best.added.end());
  result.criterion_value = best.criterion;
  return result;
}

}  // namespace

Design fedorov_exchange(const FeatureMatrix& pool, std::size_t m, const SamplerConfig& config,
                        ExchangeTrace* trace) {
  detail::check_size(pool, m, 1, "Fedorov exchange");
  return augment_impl(pool, Design{pool.fingerprint(), {}, std::nullopt}, m, config, trace);
}

Design fedorov_augment(const FeatureMatrix& pool, const Design& existing,
                       std::size_t m_additional, const SamplerConfig& config,
                       ExchangeTrace* trace) {
  if (!existing.indices.empty()) {
    validate_design(pool, existing);
  } else if (!existing.pool_ref.empty() && existing.pool_ref != pool.fingerprint()) {
    throw MismatchError("existing design refers to a different pool");
  }
  return augment_impl(pool, existing, m_additional, config, trace);
}

}  // namespace oed
