#include "consentaneous/series.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>

#include "consentaneous/csv.hpp"
#include "consentaneous/error.hpp"
#include "consentaneous/rng.hpp"

namespace consentaneous {

std::string CompositionSpec::tag() const {
  std::string s;
  s += use_xi ? 'T' : 'F';
  s += use_seasonality ? 'T' : 'F';
  s += use_omega ? 'T' : 'F';
  return s;
}

CompositionSpec CompositionSpec::from_tag(const std::string& tag) {
  auto flag = [&](char c) {
    if (c == 'T' || c == 't') return true;
    if (c == 'F' || c == 'f') return false;
    throw ConfigError("composition tag must be three of T/F, got '" + tag + "'");
  };
  if (tag.size() != 3) throw ConfigError("composition tag must be three of T/F, got '" + tag + "'");
  return {flag(tag[0]), flag(tag[1]), flag(tag[2])};
}

double seasonality(double t_days, double w) {
  const double frac = t_days - std::floor(t_days);
  const double d = frac - 0.5;
  return std::exp(-d * d / (w * w)) + 0.5;
}

double volatility(double t_days, double y, double xi, const ModelParams& params,
                  const CompositionSpec& comp) {
  const double b0 = comp.use_seasonality ? seasonality(t_days, params.w) : 1.0;
  const double mood = comp.use_xi ? xi : 1.0;
  return b0 * (1.0 + params.a0 * std::abs(y * mood));
}

ReturnSeries generate_returns(const Trajectory& traj, const ModelParams& params,
                              const CompositionSpec& comp, std::uint64_t seed) {
  if (traj.values.empty()) throw ConfigError("generate_returns: empty trajectory");
  if (comp.use_xi && !traj.has_xi) {
    throw ConfigError("generate_returns: composition uses xi but the trajectory has none");
  }
  const double ratio = params.delta / traj.grid_step;
  const double stride_f = std::round(ratio);
  if (stride_f < 1.0 || std::abs(ratio - stride_f) > 1e-6 * stride_f) {
    throw ConfigError("generate_returns: trajectory grid step must divide delta");
  }
  const auto stride = static_cast<std::size_t>(stride_f);
  const std::size_t n = (traj.size() - 1) / stride + 1;

  ReturnSeries out;
  out.delta = params.delta;
  out.t0 = traj.t0;
  out.composition = comp;
  out.seed = seed;
  out.values.resize(n);

  Engine engine = make_engine(seed, Stream::kExogenous);
  std::normal_distribution<double> normal;
  const bool magnitude_only = !comp.use_omega && !comp.use_seasonality;
  for (std::size_t k = 0; k < n; ++k) {
    const TrajectorySample& s = traj.values[k * stride];
    const double t = out.time(k);
    double r;
    if (magnitude_only) {
      r = comp.use_xi ? std::abs(s.y * s.xi) : s.y;
    } else {
      r = volatility(t, s.y, s.xi, params, comp);
      if (comp.use_omega) r *= normal(engine);
    }
    out.values[k] = r;
  }
  return out;
}

ReturnSeries rolling_std_filter(const ReturnSeries& series, std::size_t window) {
  if (window < 2) throw ConfigError("rolling_std_filter: window must be >= 2");
  if (series.size() < window) {
    throw SizeError("rolling_std_filter: series of " + std::to_string(series.size()) +
                    " samples is shorter than the window " + std::to_string(window));
  }
  ReturnSeries out;
  out.delta = series.delta;
  out.t0 = series.time(window - 1);
  out.composition = series.composition;
  out.seed = series.seed;
  const std::size_t n = series.size() - window + 1;
  out.values.resize(n);
  const double inv = 1.0 / static_cast<double>(window);
  const double* v = series.values.data();
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < window; ++j) mean += v[i + j];
    mean *= inv;
    double ss = 0.0;
    for (std::size_t j = 0; j < window; ++j) {
      const double d = v[i + j] - mean;
      ss += d * d;
    }
    out.values[i] = std::sqrt(ss * inv);
  }
  return out;
}

ReturnSeries absolute(const ReturnSeries& series) {
  ReturnSeries out = series;
  for (double& v : out.values) v = std::abs(v);
  return out;
}

ReturnSeries drop_front(const ReturnSeries& series, std::size_t count) {
  if (count >= series.size()) throw SizeError("drop_front: nothing left after dropping");
  ReturnSeries out;
  out.delta = series.delta;
  out.t0 = series.time(count);
  out.composition = series.composition;
  out.seed = series.seed;
  out.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(count), series.values.end());
  return out;
}

void write_series_csv(std::ostream& out, const ReturnSeries& series) {
  out << "t_days,r\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << csv::format(series.time(i)) << ',' << csv::format(series.values[i]) << '\n';
  }
}

ReturnSeries read_series_csv(std::istream& in) {
  csv::expect_header(in, {"t_days", "r"});
  ReturnSeries series;
  std::vector<std::string> row;
  double first = 0.0;
  double last = 0.0;
  while (csv::next_row(in, row)) {
    if (row.size() != 2) throw ConfigError("series csv: expected 2 columns");
    last = csv::parse_double(row[0]);
    if (series.values.empty()) first = last;
    series.values.push_back(csv::parse_double(row[1]));
  }
  if (series.values.empty()) throw SizeError("series csv: no samples");
  series.t0 = first;
  if (series.size() > 1) series.delta = (last - first) / static_cast<double>(series.size() - 1);
  return series;
}

}  // namespace consentaneous
