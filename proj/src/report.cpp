#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "oed/evaluation.hpp"
#include "oed/format.hpp"

namespace oed {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_field(const std::string& text, std::size_t line_no, const char* column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw SchemaError("trial file line " + std::to_string(line_no) + ", column '" + column +
                      "': cannot parse '" + text + "'");
  }
  return value;
}

std::string format_percent(double pct) {
  if (!std::isfinite(pct)) return "nan";
  const long rounded = std::lround(pct);
  return std::to_string(rounded == 0 ? 0L : rounded);
}

}  // namespace

void write_trials_csv(std::ostream& out, std::span<const TrialResult> trials) {
  out << "set_id,algorithm,m,iteration,r,reference_r,skipped\n";
  for (const auto& t : trials) {
    out << t.set_id << ',' << to_string(t.algorithm) << ',' << t.m << ',' << t.iteration << ','
        << format_real(t.r) << ',' << format_real(t.reference_r) << ',' << (t.skipped ? 1 : 0)
        << '\n';
  }
}

std::vector<TrialResult> read_trials_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("trial file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "set_id,algorithm,m,iteration,r,reference_r,skipped") {
    throw SchemaError("trial file line 1: unexpected header '" + line + "'");
  }
  std::vector<TrialResult> trials;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != 7) {
      throw SchemaError("trial file line " + std::to_string(line_no) + ": expected 7 columns");
    }
    TrialResult t;
    t.set_id = f[0];
    try {
      t.algorithm = parse_algorithm(f[1]);
    } catch (const ValidationError& e) {
      throw SchemaError("trial file line " + std::to_string(line_no) + ": " + e.what());
    }
    t.m = parse_field<std::size_t>(f[2], line_no, "m");
    t.iteration = parse_field<std::size_t>(f[3], line_no, "iteration");
    t.r = parse_field<double>(f[4], line_no, "r");
    t.reference_r = parse_field<double>(f[5], line_no, "reference_r");
    const int skipped = parse_field<int>(f[6], line_no, "skipped");
    if (skipped != 0 && skipped != 1) {
      throw SchemaError("trial file line " + std::to_string(line_no) + ": skipped must be 0 or 1");
    }
    t.skipped = skipped == 1;
    if (!std::isfinite(t.r) || std::abs(t.r) > 1.0 || !std::isfinite(t.reference_r) ||
        std::abs(t.reference_r) > 1.0) {
      throw ValidationError("trial file line " + std::to_string(line_no) +
                            ": correlations must lie in [-1, 1]");
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  out << "set_id,algorithm,m,mean_r,sd_r,ci95_low,ci95_high,pct_change,significant\n";
  for (const auto& r : rows) {
    out << r.set_id << ',' << to_string(r.algorithm) << ',' << r.m << ',' << format_real(r.mean_r)
        << ',' << format_real(r.sd_r) << ',' << format_real(r.ci95_low) << ','
        << format_real(r.ci95_high) << ',' << format_real(r.pct_change) << ','
        << (r.significant ? 1 : 0) << '\n';
  }
}

void write_percent_table(std::ostream& out, std::span<const SummaryRow> rows) {
  std::set<std::size_t> ms;
  std::vector<std::string> sets;
  std::vector<Algorithm> algorithms;
  for (const auto& r : rows) {
    ms.insert(r.m);
    if (std::find(sets.begin(), sets.end(), r.set_id) == sets.end()) sets.push_back(r.set_id);
    if (r.algorithm != Algorithm::random &&
        std::find(algorithms.begin(), algorithms.end(), r.algorithm) == algorithms.end()) {
      algorithms.push_back(r.algorithm);
    }
  }
  std::sort(algorithms.begin(), algorithms.end());

  std::size_t set_width = 3;
  for (const auto& s : sets) set_width = std::max(set_width, s.size());
  constexpr int cell = 6;

  for (const Algorithm algorithm : algorithms) {
    out << "Percent change over baseline: " << to_string(algorithm) << '\n';
    std::ostringstream header;
    header << std::left << std::setw(static_cast<int>(set_width)) << "Set" << " |";
    for (auto m : ms) header << std::right << std::setw(cell) << m;
    const std::string head = header.str();
    out << head << '\n' << std::string(head.size(), '-') << '\n';
    for (const auto& set_id : sets) {
      out << std::left << std::setw(static_cast<int>(set_width)) << set_id << " |";
      for (auto m : ms) {
        const auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& r) {
          return r.set_id == set_id && r.algorithm == algorithm && r.m == m;
        });
        std::string text = "-";
        if (it != rows.end()) {
          text = format_percent(it->pct_change);
          if (!it->significant) text += '*';
        }
        out << std::right << std::setw(cell) << text;
      }
      out << '\n';
    }
    out << '\n';
  }
  out << "* not significant (Welch t-test on Fisher-z correlations, p >= " << kSignificanceLevel
      << ")\n";
}

void write_curve_csv(std::ostream& out, std::span<const SummaryRow> rows,
                     const std::string& set_id, Algorithm algorithm) {
  out << "m,mean_r,ci95_low,ci95_high\n";
  for (const auto& r : rows) {
    if (r.set_id != set_id || r.algorithm != algorithm) continue;
    out << r.m << ',' << format_real(r.mean_r) << ',' << format_real(r.ci95_low) << ','
        << format_real(r.ci95_high) << '\n';
  }
}

void write_sd_csv(std::ostream& out, std::span<const SummaryRow> rows, const std::string& set_id,
                  Algorithm algorithm) {
  out << "m,sd_r\n";
  for (const auto& r : rows) {
    if (r.set_id != set_id || r.algorithm != algorithm) continue;
    out << r.m << ',' << format_real(r.sd_r) << '\n';
  }
}

void write_reference_csv(std::ostream& out, std::span<const SummaryRow> rows,
                         const std::string& set_id) {
  out << "m,mean_reference_r\n";
  for (const auto& r : rows) {
    if (r.set_id != set_id || r.algorithm != Algorithm::random) continue;
    out << r.m << ',' << format_real(r.mean_reference_r) << '\n';
  }
}

void write_persistence_csv(std::ostream& out, std::span<const PersistencePoint> points) {
  out << "m,persistence\n";
  for (const auto& p : points) out << p.m << ',' << format_real(p.value) << '\n';
}

}  // namespace oed
