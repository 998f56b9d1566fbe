#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "oed/evaluation.hpp"

namespace oed {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("pearson: vectors differ in length");
  if (a.size() < 2) throw SizeError("pearson needs at least two observations");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) throw DegenerateError("pearson: constant vector");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double fisher_z(double r) {
  constexpr double limit = 1.0 - 1e-12;
  return std::atanh(std::clamp(r, -limit, limit));
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw SizeError("Welch t-test needs two samples of size >= 2");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double va = sample_variance(a, ma) / static_cast<double>(a.size());
  const double vb = sample_variance(b, mb) / static_cast<double>(b.size());
  const double se2 = va + vb;
  if (ma == mb) return {0.0, 1.0, static_cast<double>(a.size() + b.size() - 2)};
  if (se2 <= 0.0) throw DegenerateError("Welch t-test: both samples have zero variance");

  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 /
                    (va * va / static_cast<double>(a.size() - 1) +
                     vb * vb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(df);
  const double p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  return {t, p, df};
}

double percent_change(double mean_alg, double mean_base) {
  if (mean_base == 0.0) throw DegenerateError("percent change against a zero baseline is undefined");
  return 100.0 * (mean_alg - mean_base) / mean_base;
}

}  // namespace oed
