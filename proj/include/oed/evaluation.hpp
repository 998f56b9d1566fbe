#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "oed/dataset.hpp"
#include "oed/sampling.hpp"

namespace oed {

// ---------------------------------------------------------------------------
// Statistics

/// Sample Pearson correlation. Throws DegenerateError for a constant input.
double pearson(std::span<const double> a, std::span<const double> b);

/// atanh(r), with r clamped to +-(1 - 1e-12).
double fisher_z(double r);

struct WelchResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

/// Two-sided Welch (unequal-variance) two-sample t-test.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// 100 (mean_alg - mean_base) / mean_base.
double percent_change(double mean_alg, double mean_base);

// ---------------------------------------------------------------------------
// Simulation

struct SimulationPlan {
  std::vector<std::size_t> m_grid{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::size_t iterations = 300;
  std::vector<Algorithm> algorithms{Algorithm::fedorov, Algorithm::kennard_stone,
                                    Algorithm::kmeans, Algorithm::random};
  SamplerConfig sampler_config;
  double lambda = 1.0;
  std::uint64_t master_seed = 20160101;
  std::size_t persistence_step = 1;

  /// Throws ValidationError unless the plan can run on a training set of
  /// `train_n` rows.
  void validate(std::size_t train_n) const;
};

struct TrialResult {
  std::string set_id;
  Algorithm algorithm = Algorithm::random;
  std::size_t m = 0;
  std::size_t iteration = 0;
  double r = 0.0;
  // Model trained on the whole half-sample of this (m, iteration).
  double reference_r = 0.0;
  // Predictions were constant, so r is undefined; excluded from summaries.
  bool skipped = false;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// For every (m, iteration): one half-sample of `train`, shared by all
/// algorithms; each algorithm selects m rows, a ridge model is fitted on
/// them and scored by Pearson r of its rounded predictions on `test`.
/// Per-trial seeds derive from (master_seed, set_id, m, iteration, role), so
/// the output does not depend on `workers`. Results are sorted by
/// (set_id, algorithm, m, iteration).
std::vector<TrialResult> run_simulation(const LabeledDataset& train, const LabeledDataset& test,
                                        const SimulationPlan& plan, std::size_t workers = 1);

std::size_t count_skipped(std::span<const TrialResult> trials);

struct SummaryRow {
  std::string set_id;
  Algorithm algorithm = Algorithm::random;
  std::size_t m = 0;
  std::size_t count = 0;
  double mean_r = 0.0;
  double sd_r = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  double pct_change = 0.0;
  bool significant = false;
  double mean_reference_r = 0.0;
};

/// Groups non-skipped trials by (set, algorithm, m) and compares each group
/// with the random baseline at the same (set, m): percent change of means
/// and a Welch test on Fisher-z values at the 0.001 level.
std::vector<SummaryRow> summarize(std::span<const TrialResult> trials);

inline constexpr double kSignificanceLevel = 0.001;

struct PersistencePoint {
  std::size_t m = 0;
  double value = 0.0;
};

/// persistence(design(m), design(m + step)) for each m. Each size gets its
/// own seed derived from (config.seed, m).
std::vector<PersistencePoint> persistence_curve(const FeatureMatrix& pool, Algorithm algorithm,
                                                std::span<const std::size_t> m_values,
                                                std::size_t step, const SamplerConfig& config);

// ---------------------------------------------------------------------------
// Files

void write_trials_csv(std::ostream& out, std::span<const TrialResult> trials);
std::vector<TrialResult> read_trials_csv(std::istream& in);

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

/// Percent-change table per algorithm: rows are sets, columns are m,
/// insignificant cells marked with '*'.
void write_percent_table(std::ostream& out, std::span<const SummaryRow> rows);

/// m,mean_r,ci95_low,ci95_high for one (set, algorithm).
void write_curve_csv(std::ostream& out, std::span<const SummaryRow> rows,
                     const std::string& set_id, Algorithm algorithm);
/// m,sd_r for one (set, algorithm).
void write_sd_csv(std::ostream& out, std::span<const SummaryRow> rows,
                  const std::string& set_id, Algorithm algorithm);
/// m,mean_reference_r for one set.
void write_reference_csv(std::ostream& out, std::span<const SummaryRow> rows,
                         const std::string& set_id);
void write_persistence_csv(std::ostream& out, std::span<const PersistencePoint> points);

}  // namespace oed
