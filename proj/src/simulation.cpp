#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "oed/evaluation.hpp"
#include "oed/regression.hpp"
#include "oed/seeding.hpp"

namespace oed {

void SimulationPlan::validate(std::size_t train_n) const {
  if (m_grid.empty()) throw ValidationError("m grid is empty");
  if (iterations < 1) throw ValidationError("iterations must be >= 1");
  if (algorithms.empty()) throw ValidationError("no algorithms selected");
  for (std::size_t k = 0; k < m_grid.size(); ++k) {
    if (m_grid[k] < 1) throw ValidationError("m values must be >= 1");
    if (k > 0 && m_grid[k] <= m_grid[k - 1]) {
      throw ValidationError("m grid must be strictly increasing");
    }
  }
  if (m_grid.back() > train_n / 2) {
    throw ValidationError("largest m (" + std::to_string(m_grid.back()) +
                          ") exceeds half the training set (" + std::to_string(train_n / 2) + ")");
  }
  if (std::find(algorithms.begin(), algorithms.end(), Algorithm::kennard_stone) !=
          algorithms.end() &&
      m_grid.front() < 2) {
    throw ValidationError("Kennard-Stone needs m >= 2");
  }
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be nonnegative");
  sampler_config.validate();
}

namespace {

// Mean with one residual correction pass; a constant sample returns its value exactly.
double accurate_mean(const std::vector<double>& v) {
  const auto n = static_cast<double>(v.size());
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double residual = 0.0;
  for (double x : v) residual += x - mean;
  return mean + residual / n;
}

// Pearson r of rounded predictions against the test scores; nullopt when the
// predictions are constant.
std::optional<double> score_model(const LabeledDataset& fit_rows, double lambda,
                                  const LabeledDataset& test,
                                  const std::vector<double>& test_scores) {
  const auto model = fit_ridge(fit_rows.features().values(), fit_rows.scores(), lambda,
                               test.manifest().score_range);
  const auto predicted = predict_scores(model, test.features().values());
  const std::vector<double> as_real(predicted.begin(), predicted.end());
  try {
    return pearson(as_real, test_scores);
  } catch (const DegenerateError&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<TrialResult> run_simulation(const LabeledDataset& train, const LabeledDataset& test,
                                        const SimulationPlan& plan, std::size_t workers) {
  if (train.features().cols() != test.features().cols()) {
    throw ShapeError("train has " + std::to_string(train.features().cols()) +
                     " features but test has " + std::to_string(test.features().cols()));
  }
  if (train.manifest().score_range != test.manifest().score_range) {
    throw ValidationError("train and test score ranges differ");
  }
  if (test.size() < 2) throw SizeError("test set needs at least two rows");
  plan.validate(train.size());

  const std::string& set_id = train.manifest().set_id;
  const std::uint64_t set_hash = hash_string(set_id);
  const std::vector<double> test_scores(test.scores().begin(), test.scores().end());
  const std::size_t n_alg = plan.algorithms.size();
  const std::size_t n_units = plan.m_grid.size() * plan.iterations;

  std::vector<TrialResult> results(n_units * n_alg);

  auto run_unit = [&](std::size_t unit) {
    const std::size_t m = plan.m_grid[unit / plan.iterations];
    const std::size_t iteration = unit % plan.iterations;
    const auto half = half_sample(
        train, derive_seed({plan.master_seed, set_hash, m, iteration, hash_string("half")}));
    const double reference =
        score_model(half, plan.lambda, test, test_scores).value_or(0.0);

    for (std::size_t a = 0; a < n_alg; ++a) {
      const Algorithm algorithm = plan.algorithms[a];
      SamplerConfig config = plan.sampler_config;
      config.seed = derive_seed(
          {plan.master_seed, set_hash, m, iteration, hash_string(to_string(algorithm))});
      const Design design = select_design(half.features(), algorithm, m, config);
      const auto r = score_model(half.subset(design.indices), plan.lambda, test, test_scores);

      TrialResult& out = results[unit * n_alg + a];
      out.set_id = set_id;
      out.algorithm = algorithm;
      out.m = m;
      out.iteration = iteration;
      out.r = r.value_or(0.0);
      out.reference_r = reference;
      out.skipped = !r.has_value();
    }
  };

  workers = std::max<std::size_t>(1, std::min(workers, n_units));
  if (workers == 1) {
    for (std::size_t unit = 0; unit < n_units; ++unit) run_unit(unit);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t unit = next++; unit < n_units; unit = next++) {
          try {
            run_unit(unit);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n_units;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::stable_sort(results.begin(), results.end(), [](const TrialResult& a, const TrialResult& b) {
    return std::tie(a.set_id, a.algorithm, a.m, a.iteration) <
           std::tie(b.set_id, b.algorithm, b.m, b.iteration);
  });
  return results;
}

std::size_t count_skipped(std::span<const TrialResult> trials) {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const TrialResult& t) { return t.skipped; }));
}

std::vector<SummaryRow> summarize(std::span<const TrialResult> trials) {
  if (trials.empty()) throw StructureError("no trials to summarize");

  using Key = std::tuple<std::string, Algorithm, std::size_t>;
  struct Group {
    std::vector<std::pair<std::size_t, double>> r;  // (iteration, r)
    double reference_sum = 0.0;
  };
  std::map<Key, Group> groups;
  for (const auto& t : trials) {
    auto& g = groups[Key{t.set_id, t.algorithm, t.m}];
    if (t.skipped) continue;
    g.r.emplace_back(t.iteration, t.r);
    g.reference_sum += t.reference_r;
  }

  std::map<Key, std::vector<double>> values;
  std::vector<SummaryRow> rows;
  for (auto& [key, g] : groups) {
    if (!groups.contains(Key{std::get<0>(key), Algorithm::random, std::get<2>(key)})) {
      throw StructureError("no random baseline trials for set " + std::get<0>(key) +
                           " at m = " + std::to_string(std::get<2>(key)));
    }
    if (g.r.empty()) continue;
    std::sort(g.r.begin(), g.r.end());
    std::vector<double> r;
    r.reserve(g.r.size());
    for (const auto& [it, value] : g.r) r.push_back(value);

    SummaryRow row;
    row.set_id = std::get<0>(key);
    row.algorithm = std::get<1>(key);
    row.m = std::get<2>(key);
    row.count = r.size();
    row.mean_r = accurate_mean(r);
    double ss = 0.0;
    for (double v : r) ss += (v - row.mean_r) * (v - row.mean_r);
    row.sd_r = r.size() > 1 ? std::sqrt(ss / static_cast<double>(r.size() - 1)) : 0.0;
    const double half_width = 1.96 * row.sd_r / std::sqrt(static_cast<double>(r.size()));
    row.ci95_low = row.mean_r - half_width;
    row.ci95_high = row.mean_r + half_width;
    row.mean_reference_r = g.reference_sum / static_cast<double>(r.size());
    rows.push_back(row);
    values.emplace(key, std::move(r));
  }

  for (auto& row : rows) {
    const Key base_key{row.set_id, Algorithm::random, row.m};
    const auto base = values.find(base_key);
    if (base == values.end()) {
      row.pct_change = std::nan("");
      continue;
    }
    const auto& base_r = base->second;
    const double base_mean = accurate_mean(base_r);
    row.pct_change = base_mean != 0.0 ? percent_change(row.mean_r, base_mean) : std::nan("");
    if (row.algorithm == Algorithm::random) {
      row.pct_change = 0.0;
      continue;
    }
    const auto& own = values.at(Key{row.set_id, row.algorithm, row.m});
    if (own.size() < 2 || base_r.size() < 2) continue;
    std::vector<double> za(own.size());
    std::vector<double> zb(base_r.size());
    std::transform(own.begin(), own.end(), za.begin(), fisher_z);
    std::transform(base_r.begin(), base_r.end(), zb.begin(), fisher_z);
    try {
      row.significant = welch_t_test(za, zb).p < kSignificanceLevel;
    } catch (const DegenerateError&) {
      // Both groups constant with different values.
      row.significant = true;
    }
  }
  return rows;
}

std::vector<PersistencePoint> persistence_curve(const FeatureMatrix& pool, Algorithm algorithm,
                                                std::span<const std::size_t> m_values,
                                                std::size_t step, const SamplerConfig& config) {
  std::vector<PersistencePoint> curve;
  curve.reserve(m_values.size());
  auto design_at = [&](std::size_t m) {
    SamplerConfig c = config;
    c.seed = derive_seed({config.seed, m});
    return select_design(pool, algorithm, m, c);
  };
  for (std::size_t m : m_values) {
    if (m + step > pool.rows()) {
      throw SizeError("persistence at m = " + std::to_string(m) + " with step " +
                      std::to_string(step) + " exceeds pool of " + std::to_string(pool.rows()));
    }
    const Design smaller = design_at(m);
    const Design larger = step == 0 ? smaller : design_at(m + step);
    curve.push_back({m, persistence(smaller, larger)});
  }
  return curve;
}

}  // namespace oed
