#pragma once

// Return series on the delta grid: volatility composition, exogenous noise
// and the rolling standard-deviation filter.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "consentaneous/model.hpp"

namespace consentaneous {

// Which factors enter the return series.
//   (F,F,F) r = y                  (F,F,T) r = (1 + a0 y) omega
//   (T,F,F) r = |y xi|             (T,F,T) r = (1 + a0 |y xi|) omega
//   (T,T,F) r = b0 (1 + a0 |y xi|) (T,T,T) r = b0 (1 + a0 |y xi|) omega
struct CompositionSpec {
  bool use_xi = true;
  bool use_seasonality = true;
  bool use_omega = true;

  // "TTF" style tag, in field order.
  std::string tag() const;
  static CompositionSpec from_tag(const std::string& tag);

  bool operator==(const CompositionSpec&) const = default;
};

struct ReturnSeries {
  double delta = 1.0 / 390.0;  // days
  double t0 = 0.0;             // days
  std::vector<double> values;
  CompositionSpec composition;
  std::uint64_t seed = 0;

  std::size_t size() const { return values.size(); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) * delta; }
};

// Intraday pattern exp(-({t mod 1} - 0.5)^2 / w^2) + 0.5.
double seasonality(double t_days, double w);

// b0(t) (1 + a0 |y xi|), with b0 -> 1 and/or xi -> 1 when switched off.
double volatility(double t_days, double y, double xi, const ModelParams& params,
                  const CompositionSpec& comp);

// Composes r on the params.delta grid. The trajectory grid must equal delta
// or divide it by an integer, in which case every m-th sample is used.
// omega is drawn from Stream::kExogenous of `seed`.
ReturnSeries generate_returns(const Trajectory& traj, const ModelParams& params,
                              const CompositionSpec& comp, std::uint64_t seed);

// Trailing population standard deviation over `window` samples. The output
// starts at the first complete window, so t0 shifts by (window - 1) delta.
ReturnSeries rolling_std_filter(const ReturnSeries& series, std::size_t window = 10);

// |r|, used for spectra of signed return series.
ReturnSeries absolute(const ReturnSeries& series);

// Drops the first `count` samples and advances t0 accordingly.
ReturnSeries drop_front(const ReturnSeries& series, std::size_t count);

// CSV with header `t_days,r`.
void write_series_csv(std::ostream& out, const ReturnSeries& series);
ReturnSeries read_series_csv(std::istream& in);

}  // namespace consentaneous
