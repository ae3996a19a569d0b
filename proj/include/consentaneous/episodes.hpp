#pragma once

// Threshold passage durations: bursts T (maximal runs strictly above the
// level) and inter-bursts theta (maximal runs at or below it).

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "consentaneous/series.hpp"

namespace consentaneous {

// Canonical threshold set, in units of the series standard deviation.
inline const std::vector<double> kStudyThresholds = {0.3, 0.5, 0.8, 1.3, 2.0, 3.0};

struct ThresholdSpec {
  double q = 1.0;
  double absolute_level = 0.0;

  // level = q * series_std(series); throws for q <= 0.
  static ThresholdSpec resolve(double q, const ReturnSeries& series);
};

struct EpisodeSet {
  double q = 0.0;
  std::vector<double> bursts;        // T, days
  std::vector<double> inter_bursts;  // theta, days
  std::size_t n_samples_analyzed = 0;
  std::size_t n_crossings = 0;  // level crossings seen, including boundary runs

  bool empty() const { return bursts.empty() && inter_bursts.empty(); }

  // Multiset union; q must match (or this set must be fresh).
  void merge(const EpisodeSet& other);
  // Sorts both duration lists so merged sets compare equal regardless of merge order.
  void canonicalize();
};

// Population standard deviation. Throws DegenerateSeriesError for a constant series.
double series_std(const ReturnSeries& series);

// Boundary-truncated first and last runs are discarded.
EpisodeSet extract_episodes(const ReturnSeries& series, const ThresholdSpec& spec);

// CSV with header `kind,q,duration_days`, kind in {T, theta}.
void write_episodes_csv(std::ostream& out, const std::vector<EpisodeSet>& sets);
std::vector<EpisodeSet> read_episodes_csv(std::istream& in);

}  // namespace consentaneous
