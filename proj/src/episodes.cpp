#include "consentaneous/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "consentaneous/csv.hpp"
#include "consentaneous/error.hpp"

namespace consentaneous {

ThresholdSpec ThresholdSpec::resolve(double q, const ReturnSeries& series) {
  if (!(q > 0.0)) throw ConfigError("threshold q must be > 0");
  return {q, q * series_std(series)};
}

void EpisodeSet::merge(const EpisodeSet& other) {
  if (n_samples_analyzed == 0 && bursts.empty() && inter_bursts.empty()) {
    q = other.q;
  } else if (q != other.q) {
    throw ConfigError("EpisodeSet::merge: thresholds differ");
  }
  bursts.insert(bursts.end(), other.bursts.begin(), other.bursts.end());
  inter_bursts.insert(inter_bursts.end(), other.inter_bursts.begin(), other.inter_bursts.end());
  n_samples_analyzed += other.n_samples_analyzed;
  n_crossings += other.n_crossings;
}

void EpisodeSet::canonicalize() {
  std::sort(bursts.begin(), bursts.end());
  std::sort(inter_bursts.begin(), inter_bursts.end());
}

double series_std(const ReturnSeries& series) {
  if (series.size() < 2) throw SizeError("series_std: need at least 2 samples");
  const double n = static_cast<double>(series.size());
  double mean = 0.0;
  for (double v : series.values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : series.values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) throw DegenerateSeriesError("series_std: series is constant");
  return sd;
}

EpisodeSet extract_episodes(const ReturnSeries& series, const ThresholdSpec& spec) {
  if (series.size() < 2) throw SizeError("extract_episodes: need at least 2 samples");
  EpisodeSet out;
  out.q = spec.q;
  out.n_samples_analyzed = series.size();

  const auto& v = series.values;
  const double level = spec.absolute_level;
  bool above = v[0] > level;
  std::size_t run_start = 0;
  bool first_run = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const bool now = v[i] > level;
    if (now == above) continue;
    ++out.n_crossings;
    if (!first_run) {
      const double duration = static_cast<double>(i - run_start) * series.delta;
      (above ? out.bursts : out.inter_bursts).push_back(duration);
    }
    first_run = false;
    above = now;
    run_start = i;
  }
  // The run still open at the end is censored and dropped.
  return out;
}

void write_episodes_csv(std::ostream& out, const std::vector<EpisodeSet>& sets) {
  out << "kind,q,duration_days\n";
  for (const auto& set : sets) {
    const std::string q = csv::format(set.q);
    for (double d : set.bursts) out << "T," << q << ',' << csv::format(d) << '\n';
    for (double d : set.inter_bursts) out << "theta," << q << ',' << csv::format(d) << '\n';
  }
}

std::vector<EpisodeSet> read_episodes_csv(std::istream& in) {
  csv::expect_header(in, {"kind", "q", "duration_days"});
  std::map<double, EpisodeSet> by_q;
  std::vector<std::string> row;
  while (csv::next_row(in, row)) {
    if (row.size() != 3) throw ConfigError("episodes csv: expected 3 columns");
    const double q = csv::parse_double(row[1]);
    const double d = csv::parse_double(row[2]);
    EpisodeSet& set = by_q[q];
    set.q = q;
    if (row[0] == "T") {
      set.bursts.push_back(d);
    } else if (row[0] == "theta") {
      set.inter_bursts.push_back(d);
    } else {
      throw ConfigError("episodes csv: unknown kind '" + row[0] + "'");
    }
  }
  std::vector<EpisodeSet> sets;
  for (auto& [q, set] : by_q) sets.push_back(std::move(set));
  return sets;
}

}  // namespace consentaneous
