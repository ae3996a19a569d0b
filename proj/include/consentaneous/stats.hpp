#pragma once

// Estimators: log-binned duration PDFs, averaged periodograms and OLS
// power-law fits on log-log bin tables.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "consentaneous/series.hpp"

namespace consentaneous {

struct LogBinnedPdf {
  std::vector<double> bin_edges;    // size n + 1
  std::vector<double> bin_centers;  // geometric means of adjacent edges
  std::vector<double> density;
  std::vector<std::size_t> counts;
  std::size_t n_total = 0;

  std::size_t size() const { return counts.size(); }
  double bin_width(std::size_t i) const { return bin_edges[i + 1] - bin_edges[i]; }
};

// Geometric bins spanning [min, max] of the samples. With `lattice_step` > 0
// the samples are treated as integer multiples of it and each edge is snapped
// to the nearest half-integer multiple, so every bin covers a whole number of
// lattice points and short durations are not aliased. Edge ratios are then
// only approximately constant.
LogBinnedPdf log_binned_pdf(std::span<const double> samples, int bins_per_decade = 10,
                            double lattice_step = 0.0);

struct Spectrum {
  std::vector<double> frequencies;  // 1/day
  std::vector<double> power;
  std::size_t n_segments = 0;
  std::size_t segment_length = 0;

  std::size_t size() const { return frequencies.size(); }
};

// Mean of one-sided periodograms over non-overlapping, mean-removed segments.
// Normalized so that sum(power) * df equals the mean within-segment variance.
Spectrum psd(const ReturnSeries& series, std::size_t segment_length);

// Segment-weighted average of spectra with identical frequency axes. The
// result depends only on the order of `parts`.
Spectrum average_spectra(std::span<const Spectrum> parts);

// Points for a log-log fit: bin centers, positive values, and the number of
// raw observations behind each value.
struct BinTable {
  std::vector<double> centers;
  std::vector<double> values;
  std::vector<std::size_t> counts;
};

BinTable to_table(const LogBinnedPdf& pdf);

// Averages periodogram ordinates inside geometric frequency bins; counts are
// the number of ordinates per bin.
BinTable log_bin_spectrum(const Spectrum& spectrum, int bins_per_decade = 10);

struct FitRange {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const FitRange&) const = default;
};

struct PowerLawFit {
  double exponent = 0.0;  // magnitude of the log-log slope
  double standard_error = 0.0;
  double intercept = 0.0;  // log10 value at log10 x = 0
  FitRange fit_range;
  std::size_t n_bins_used = 0;

  // Value of the fitted line at x.
  double predict(double x) const;
};

inline constexpr std::size_t kMinBinCount = 5;
inline constexpr std::size_t kMinFitBins = 4;

// OLS of log10(value) on log10(center) over bins with center in the range,
// count >= kMinBinCount and value > 0. Throws FitError with fewer than
// kMinFitBins usable bins.
PowerLawFit fit_powerlaw(const BinTable& table, FitRange range);

// Slides a window of `decades` width across `range` (one bin at a time) and
// returns every fit that succeeds.
std::vector<PowerLawFit> sliding_fits(const BinTable& table, FitRange range, double decades);

// From S(f) ~ f^-beta with beta = 2H + 1.
inline double hurst_from_beta(double beta) { return (beta - 1.0) / 2.0; }

// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and `cdf`.
template <typename Cdf>
double ks_distance(std::vector<double> samples, Cdf&& cdf);

// CSV writers: `bin_center,density,count` and `freq_per_day,power`.
void write_pdf_csv(std::ostream& out, const LogBinnedPdf& pdf);
void write_psd_csv(std::ostream& out, const Spectrum& spectrum);

}  // namespace consentaneous

#include <algorithm>
#include <cmath>

template <typename Cdf>
double consentaneous::ks_distance(std::vector<double> samples, Cdf&& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}
