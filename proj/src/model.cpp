#include "consentaneous/model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "consentaneous/csv.hpp"
#include "consentaneous/error.hpp"

namespace consentaneous {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

double reflect(double x, double lo, double hi) {
  if (x < lo) x = 2.0 * lo - x;
  if (x > hi) x = 2.0 * hi - x;
  return std::clamp(x, lo, hi);
}

// Steps shorter than this fraction of the remaining interval are merged into
// the final step so grid times are hit exactly.
constexpr double kLandingSlack = 1e-9;

}  // namespace

void ModelParams::validate() const {
  require(eps_cf > 0.0, "eps_cf must be > 0");
  require(eps_fc > 0.0, "eps_fc must be > 0");
  require(eps_cc > 0.0, "eps_cc must be > 0");
  require(h_cc > 0.0, "h_cc must be > 0");
  require(h > 0.0, "h must be > 0");
  require(delta > 0.0, "delta must be > 0");
  require(w > 0.0, "w must be > 0");
  require(alpha >= 0.0, "alpha must be >= 0");
  require(a0 >= 0.0, "a0 must be >= 0");
  require(a_tau >= 0.0, "a_tau must be >= 0");
}

AgentState equilibrium_state(const ModelParams& params) {
  return {params.eps_cf / (params.eps_cf + params.eps_fc), 0.0, 0.0};
}

YProcessParams YProcessParams::from_model(const ModelParams& params) {
  YProcessParams p;
  p.eps1 = params.eps_cf;
  p.eps2 = params.eps_fc;
  p.alpha = params.alpha;
  return p;
}

void YProcessParams::validate() const {
  require(eps1 > 0.0, "eps1 must be > 0");
  require(eps2 > 2.0, "eps2 must be > 2");
  require(y_min > 0.0 && y_min < y_max, "need 0 < y_min < y_max");
}

void IntegratorOptions::validate() const {
  require(kappa > 0.0 && kappa <= 0.5, "kappa must be in (0, 0.5]");
  require(n_min > 0.0 && n_min < 0.5, "n_min must be in (0, 0.5)");
  require(xi_min > 0.0 && xi_min < 1.0, "xi_min must be in (0, 1)");
}

double tau(double n_f, const ModelParams& params) {
  if (!(n_f > 0.0 && n_f <= 1.0)) {
    throw DomainError("tau: n_f must be in (0, 1], got " + std::to_string(n_f));
  }
  const double y = (1.0 - n_f) / n_f;
  return std::pow(1.0 + params.a_tau * y, -params.alpha);
}

AgentCoefficients agent_drift_diffusion(const AgentState& state, const ModelParams& params) {
  const double n = state.n_f;
  const double xi = state.xi;
  const double inv_tau = 1.0 / tau(n, params);
  AgentCoefficients c;
  c.drift_nf = ((1.0 - n) * params.eps_cf - n * params.eps_fc) * inv_tau;
  c.diff_nf = std::sqrt(std::max(0.0, 2.0 * n * (1.0 - n) * inv_tau));
  c.drift_xi = -2.0 * params.h_cc * params.eps_cc * xi * inv_tau;
  c.diff_xi = std::sqrt(std::max(0.0, 2.0 * params.h_cc * (1.0 - xi * xi) * inv_tau));
  return c;
}

YCoefficients y_drift_diffusion(double y, const YProcessParams& p) {
  if (!(y > 0.0)) throw DomainError("y_drift_diffusion: y must be > 0");
  const double a = p.alpha;
  const double drift = (p.eps1 * std::pow(y, -a) + (2.0 - p.eps2) * std::pow(y, 1.0 - a)) *
                       std::pow(y + 1.0, 2.0 * a + 1.0);
  const double diff2 = 2.0 * std::pow(y, 1.0 - a) * std::pow(y + 1.0, 2.0 * a + 2.0);
  return {drift, std::sqrt(diff2)};
}

std::size_t grid_sample_count(double total_days, double grid_step) {
  if (!(total_days > 0.0)) throw ConfigError("total_days must be > 0");
  if (!(grid_step > 0.0)) throw ConfigError("grid_step must be > 0");
  const double n = std::floor(total_days / grid_step + kLandingSlack);
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

// ---------------------------------------------------------------------------

AgentIntegrator::AgentIntegrator(const ModelParams& params, const AgentState& initial,
                                 std::uint64_t seed, const IntegratorOptions& options)
    : params_(params),
      options_(options),
      state_(initial),
      seed_(seed),
      nf_engine_(make_engine(seed, Stream::kFundamentalists)),
      xi_engine_(make_engine(seed, Stream::kMood)) {
  params_.validate();
  options_.validate();
  state_.n_f = reflect(state_.n_f, options_.n_min, 1.0 - options_.n_min);
  state_.xi = reflect(state_.xi, -1.0 + options_.xi_min, 1.0 - options_.xi_min);
}

void AgentIntegrator::step_xi(double ds, double tau_now) {
  const double lo = -1.0 + options_.xi_min;
  const double hi = 1.0 - options_.xi_min;
  const double kappa = options_.kappa;
  const double max_sub = kappa * kappa * tau_now / std::max(1.0, params_.h_cc);
  const double rate = params_.h_cc / tau_now;
  double xi = state_.xi;
  double remaining = ds;
  while (remaining > 0.0) {
    const double drift = -2.0 * params_.eps_cc * rate * xi;
    const double diff = std::sqrt(std::max(0.0, 2.0 * rate * (1.0 - xi * xi)));
    const double room = kappa * (1.0 - std::abs(xi));
    double dss = max_sub;
    if (drift != 0.0) dss = std::min(dss, room / std::abs(drift));
    if (options_.noise && diff > 0.0) dss = std::min(dss, (room / diff) * (room / diff));
    const bool last = dss >= remaining * (1.0 - kLandingSlack);
    if (last) dss = remaining;
    double next = xi + drift * dss;
    if (options_.noise) next += diff * std::sqrt(dss) * xi_normal_(xi_engine_);
    if (!std::isfinite(next)) throw IntegrationError("non-finite mood", steps_);
    xi = reflect(next, lo, hi);
    if (last) break;
    remaining -= dss;
  }
  state_.xi = xi;
}

void AgentIntegrator::advance(double scaled_duration, bool move_xi, double cap) {
  const double lo = options_.n_min;
  const double hi = 1.0 - options_.n_min;
  const double k2 = options_.kappa * options_.kappa;
  double remaining = scaled_duration;
  while (remaining > 0.0) {
    const double tau_now = tau(state_.n_f, params_);
    const AgentCoefficients c = agent_drift_diffusion(state_, params_);
    // Relative control: neither term may move n_f by more than kappa times
    // its distance to the nearer boundary.
    const double room = options_.kappa * std::min(state_.n_f, 1.0 - state_.n_f);
    double ds = std::min(k2 * tau_now, cap);
    if (c.drift_nf != 0.0) ds = std::min(ds, room / std::abs(c.drift_nf));
    if (options_.noise && c.diff_nf > 0.0) ds = std::min(ds, (room / c.diff_nf) * (room / c.diff_nf));
    const bool last = ds >= remaining * (1.0 - kLandingSlack);
    if (last) ds = remaining;

    double next = state_.n_f + c.drift_nf * ds;
    if (options_.noise) next += c.diff_nf * std::sqrt(ds) * nf_normal_(nf_engine_);
    if (!std::isfinite(next)) throw IntegrationError("non-finite n_f", steps_);
    if (move_xi) step_xi(ds, tau_now);
    state_.n_f = reflect(next, lo, hi);
    ++steps_;
    if (last) break;
    remaining -= ds;
  }
}

void AgentIntegrator::burn_in(double scaled_duration) {
  if (!(scaled_duration >= 0.0)) throw ConfigError("burn-in must be >= 0");
  const double inf = std::numeric_limits<double>::infinity();
  // The split point is independent of evolve_xi so the n_f step sequence is too.
  const double xi_part = scaled_duration / std::max(1.0, params_.h_cc);
  const double nf_part = scaled_duration - xi_part;
  if (nf_part > 0.0) advance(nf_part, false, inf);
  if (xi_part > 0.0) advance(xi_part, options_.evolve_xi, inf);
  state_.t_scaled += scaled_duration;
}

Trajectory AgentIntegrator::run(std::size_t n_samples, double grid_step) {
  if (n_samples == 0) throw ConfigError("trajectory needs at least one sample");
  if (!(grid_step > 0.0)) throw ConfigError("grid_step must be > 0");
  const double grid_scaled = grid_step * params_.h_per_day();
  const double t_start = state_.t_scaled;
  Trajectory traj;
  traj.t0 = 0.0;
  traj.grid_step = grid_step;
  traj.seed = seed_;
  traj.has_xi = options_.evolve_xi;
  traj.values.reserve(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double n = state_.n_f;
    traj.values.push_back({n, options_.evolve_xi ? state_.xi : 0.0, (1.0 - n) / n});
    if (k + 1 < n_samples) {
      advance(grid_scaled, options_.evolve_xi, grid_scaled);
      state_.t_scaled = t_start + static_cast<double>(k + 1) * grid_scaled;
    }
  }
  return traj;
}

Trajectory integrate_agent_sde(const ModelParams& params, const AgentState& initial,
                               double total_days, double grid_step, std::uint64_t seed,
                               const IntegratorOptions& options) {
  const std::size_t n = grid_sample_count(total_days, grid_step);
  AgentIntegrator integrator(params, initial, seed, options);
  return integrator.run(n, grid_step);
}

// ---------------------------------------------------------------------------

YIntegrator::YIntegrator(const YProcessParams& p, double h_per_day, double y0,
                         std::uint64_t seed, const YIntegratorOptions& options)
    : p_(p),
      h_per_day_(h_per_day),
      options_(options),
      y_(y0),
      seed_(seed),
      engine_(make_engine(seed, Stream::kRatio)) {
  p_.validate();
  if (!(h_per_day_ > 0.0)) throw ConfigError("h must be > 0");
  if (!(options_.kappa > 0.0 && options_.kappa <= 0.5)) throw ConfigError("kappa must be in (0, 0.5]");
  if (!(y0 >= p_.y_min && y0 <= p_.y_max)) throw ConfigError("y0 outside [y_min, y_max]");
}

void YIntegrator::advance(double scaled_duration) {
  const double kappa = options_.kappa;
  double remaining = scaled_duration;
  while (remaining > 0.0) {
    const YCoefficients c = y_drift_diffusion(y_, p_);
    double ds = remaining;
    const double room = kappa * y_;
    if (c.drift != 0.0) ds = std::min(ds, room / std::abs(c.drift));
    if (options_.noise && c.diffusion > 0.0) ds = std::min(ds, (room / c.diffusion) * (room / c.diffusion));
    const bool last = ds >= remaining * (1.0 - kLandingSlack);
    if (last) ds = remaining;

    double next = y_ + c.drift * ds;
    if (options_.noise) next += c.diffusion * std::sqrt(ds) * normal_(engine_);
    if (!std::isfinite(next)) throw IntegrationError("non-finite y", steps_);
    y_ = reflect(next, p_.y_min, p_.y_max);
    ++steps_;
    if (last) break;
    remaining -= ds;
  }
}

void YIntegrator::burn_in(double scaled_duration) {
  if (!(scaled_duration >= 0.0)) throw ConfigError("burn-in must be >= 0");
  if (scaled_duration > 0.0) advance(scaled_duration);
  t_scaled_ += scaled_duration;
}

Trajectory YIntegrator::run(std::size_t n_samples, double grid_step) {
  if (n_samples == 0) throw ConfigError("trajectory needs at least one sample");
  if (!(grid_step > 0.0)) throw ConfigError("grid_step must be > 0");
  const double grid_scaled = grid_step * h_per_day_;
  const double t_start = t_scaled_;
  Trajectory traj;
  traj.grid_step = grid_step;
  traj.seed = seed_;
  traj.has_xi = false;
  traj.values.reserve(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    traj.values.push_back({1.0 / (1.0 + y_), 0.0, y_});
    if (k + 1 < n_samples) {
      advance(grid_scaled);
      t_scaled_ = t_start + static_cast<double>(k + 1) * grid_scaled;
    }
  }
  return traj;
}

Trajectory integrate_y_sde(const YProcessParams& p, double h_per_day, double y0,
                           double total_days, double grid_step, std::uint64_t seed,
                           const YIntegratorOptions& options) {
  const std::size_t n = grid_sample_count(total_days, grid_step);
  YIntegrator integrator(p, h_per_day, y0, seed, options);
  return integrator.run(n, grid_step);
}

// ---------------------------------------------------------------------------

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t_days,n_f,xi,y\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj.values[k];
    out << csv::format(traj.time(k)) << ',' << csv::format(s.n_f) << ',' << csv::format(s.xi)
        << ',' << csv::format(s.y) << '\n';
  }
}

// The CSV carries no seed; a file whose mood column is identically zero is
// read back as a trajectory without mood.
Trajectory read_trajectory_csv(std::istream& in) {
  csv::expect_header(in, {"t_days", "n_f", "xi", "y"});
  Trajectory traj;
  std::vector<std::string> row;
  std::vector<double> times;
  while (csv::next_row(in, row)) {
    if (row.size() != 4) throw ConfigError("trajectory csv: expected 4 columns");
    times.push_back(csv::parse_double(row[0]));
    traj.values.push_back({csv::parse_double(row[1]), csv::parse_double(row[2]),
                           csv::parse_double(row[3])});
    if (traj.values.back().xi != 0.0) traj.has_xi = true;
  }
  if (traj.values.empty()) throw SizeError("trajectory csv: no samples");
  traj.t0 = times.front();
  traj.grid_step = times.size() > 1 ? (times.back() - times.front()) / static_cast<double>(times.size() - 1)
                                    : 1.0;
  return traj;
}

}  // namespace consentaneous
