#pragma once

// Agent dynamics of the consentaneous market model: the coupled SDEs for the
// fundamentalist fraction n_f and the chartist mood xi, and the standalone
// nonlinear SDE for the population ratio y = (1 - n_f) / n_f.
//
// All SDEs evolve in scaled time t_s = h * t. Grids and durations exposed by
// this header are in days; `seconds_per_day` converts the herding rate.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "consentaneous/rng.hpp"

namespace consentaneous {

inline constexpr double seconds_per_day = 86400.0;

struct ModelParams {
  double eps_cf = 1.1;   // chartist -> fundamentalist
  double eps_fc = 3.0;   // fundamentalist -> chartist
  double eps_cc = 3.0;   // optimist <-> pessimist
  double h_cc = 1000.0;  // speed of xi relative to n_f
  double a0 = 1.0;
  double a_tau = 0.7;
  double alpha = 2.0;
  double h = 0.3e-8;  // herding rate, 1/s
  double w = 0.25;    // intraday pattern width, fraction of a day
  double delta = 1.0 / 390.0;  // return step, days

  // Herding rate in 1/day: scaled time advanced per simulated day.
  double h_per_day() const { return h * seconds_per_day; }

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

struct AgentState {
  double n_f = 1.1 / 4.1;
  double xi = 0.0;
  double t_scaled = 0.0;
};

// Drift root of the n_f equation with the mood at its drift root.
AgentState equilibrium_state(const ModelParams& params);

struct YProcessParams {
  double eps1 = 1.1;
  double eps2 = 3.0;
  double alpha = 2.0;
  double y_min = 1e-3;
  double y_max = 1e3;

  // eps1 -> eps_cf, eps2 -> eps_fc, alpha shared.
  static YProcessParams from_model(const ModelParams& params);

  // Deterministic fixed point eps1 / (eps2 - 2).
  double fixed_point() const { return eps1 / (eps2 - 2.0); }

  void validate() const;
};

struct TrajectorySample {
  double n_f;
  double xi;
  double y;
};

struct Trajectory {
  double t0 = 0.0;         // days
  double grid_step = 0.0;  // days
  std::vector<TrajectorySample> values;
  std::uint64_t seed = 0;
  bool has_xi = false;  // false when the mood was not integrated

  double time(std::size_t k) const { return t0 + static_cast<double>(k) * grid_step; }
  std::size_t size() const { return values.size(); }
};

// Inter-trade time in scaled units, (1 + a_tau (1 - n_f) / n_f)^(-alpha).
double tau(double n_f, const ModelParams& params);

struct AgentCoefficients {
  double drift_nf;
  double diff_nf;
  double drift_xi;
  double diff_xi;
};

AgentCoefficients agent_drift_diffusion(const AgentState& state, const ModelParams& params);

struct YCoefficients {
  double drift;
  double diffusion;
};

YCoefficients y_drift_diffusion(double y, const YProcessParams& p);

struct IntegratorOptions {
  // Step control: n_f steps by at most kappa^2 * tau(n_f); the mood, which
  // runs h_cc times faster, substeps by at most kappa^2 * tau(n_f) / h_cc.
  // Both are further limited so that drift and diffusion each move the
  // variable by at most kappa times its distance to the nearer boundary.
  double kappa = 0.1;
  double n_min = 1e-6;
  double xi_min = 1e-6;
  bool evolve_xi = true;
  // Test hook: drop the Wiener terms and integrate the drift only.
  bool noise = true;

  void validate() const;
};

// Euler-Maruyama integrator of the n_f / xi system. n_f and xi draw from
// separate engines, and the n_f step sequence does not depend on xi, so a
// run with `evolve_xi = false` reproduces the n_f path of a run with it.
class AgentIntegrator {
 public:
  AgentIntegrator(const ModelParams& params, const AgentState& initial, std::uint64_t seed,
                  const IntegratorOptions& options = {});

  // Advances by `scaled_duration` without recording. The mood only moves
  // during the final scaled_duration / h_cc, which equals the full duration
  // on its own clock.
  void burn_in(double scaled_duration);

  // Records `n_samples` states spaced `grid_step` days apart, the first at
  // the current time. Each sample is the state reached exactly at its grid time.
  Trajectory run(std::size_t n_samples, double grid_step);

  const AgentState& state() const { return state_; }
  std::size_t steps_taken() const { return steps_; }

 private:
  void advance(double scaled_duration, bool move_xi, double cap);
  void step_xi(double ds, double tau_now);

  ModelParams params_;
  IntegratorOptions options_;
  AgentState state_;
  std::uint64_t seed_;
  Engine nf_engine_;
  Engine xi_engine_;
  std::normal_distribution<double> nf_normal_;
  std::normal_distribution<double> xi_normal_;
  std::size_t steps_ = 0;
};

// Number of grid samples covering `total_days`: floor(total_days / grid_step).
std::size_t grid_sample_count(double total_days, double grid_step);

// Integrates from `initial` (no burn-in) and samples `total_days` on the grid.
Trajectory integrate_agent_sde(const ModelParams& params, const AgentState& initial,
                               double total_days, double grid_step, std::uint64_t seed,
                               const IntegratorOptions& options = {});

struct YIntegratorOptions {
  double kappa = 0.1;
  bool noise = true;
};

// Adaptive Euler-Maruyama for the y SDE with relative-change step control and
// reflecting bounds [y_min, y_max]. `h_per_day` converts days to scaled time.
class YIntegrator {
 public:
  YIntegrator(const YProcessParams& p, double h_per_day, double y0, std::uint64_t seed,
              const YIntegratorOptions& options = {});

  void burn_in(double scaled_duration);
  Trajectory run(std::size_t n_samples, double grid_step);

  double y() const { return y_; }
  double t_scaled() const { return t_scaled_; }

 private:
  void advance(double scaled_duration);

  YProcessParams p_;
  double h_per_day_;
  YIntegratorOptions options_;
  double y_;
  double t_scaled_ = 0.0;
  std::uint64_t seed_;
  Engine engine_;
  std::normal_distribution<double> normal_;
  std::size_t steps_ = 0;
};

Trajectory integrate_y_sde(const YProcessParams& p, double h_per_day, double y0,
                           double total_days, double grid_step, std::uint64_t seed,
                           const YIntegratorOptions& options = {});

// CSV with header `t_days,n_f,xi,y`.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in);

}  // namespace consentaneous
