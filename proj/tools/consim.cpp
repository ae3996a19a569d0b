// consim: command-line driver for the consentaneous market model.
//
//   consim simulate   --days 365 --seed 7 --out run/        -> run/trajectory.csv
//   consim compose    --trajectory run/trajectory.csv --composition TTT --out run/
//   consim episodes   --series run/series.csv --filter-window 10 --out run/
//   consim pdf        --episodes run/episodes.csv --out run/
//   consim psd        --series run/series.csv --segment 65536 --abs --out run/
//   consim experiment --preset fig1:model --realizations 4 --out out/fig1
//
// Global flags (--seed, --days, --realizations, --out, --workers) may follow
// the subcommand. Exit code 0 on success, 1 with a one-line diagnostic otherwise.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "consentaneous/csv.hpp"
#include "consentaneous/episodes.hpp"
#include "consentaneous/error.hpp"
#include "consentaneous/experiment.hpp"
#include "consentaneous/model.hpp"
#include "consentaneous/series.hpp"
#include "consentaneous/stats.hpp"

namespace fs = std::filesystem;
using namespace consentaneous;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<double> days;
  std::optional<std::size_t> realizations;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
};

fs::path out_dir(const Globals& g) {
  const fs::path dir = g.out.value_or(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  return f;
}

// --param key=value overrides on ModelParams, routed through the JSON reader
// so names and validation match config files.
void apply_params(ModelParams& params, const std::vector<std::string>& overrides) {
  nlohmann::json j = params;
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    if (!j.contains(key)) throw ConfigError("unknown model parameter '" + key + "'");
    j[key] = csv::parse_double(kv.substr(eq + 1));
  }
  from_json(j, params);
  params.validate();
}

void print_fit(const std::string& label, const BinTable& table, FitRange range) {
  try {
    const PowerLawFit f = fit_powerlaw(table, range);
    std::cout << label << ": exponent " << f.exponent << " +- " << f.standard_error << " on [" << range.lo << ", "
              << range.hi << "] (" << f.n_bins_used << " bins)\n";
  } catch (const FitError& e) {
    std::cout << label << ": no fit, " << e.what() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consentaneous market model: simulation and burst-duration statistics"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Base seed");
  app.add_option("--days", g.days, "Simulated days per realization");
  app.add_option("--realizations", g.realizations, "Number of realizations");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--workers", g.workers, "Concurrent realizations");

  std::vector<std::string> param_overrides;

  // simulate
  auto* sim = app.add_subcommand("simulate", "Integrate the agent or y SDE and dump the trajectory");
  sim->fallthrough();
  std::string route = "agent";
  double grid = 1.0 / 390.0;
  double burn_in = 1000.0;
  double kappa = 0.1;
  bool no_xi = false;
  sim->add_option("--route", route, "agent | ratio_sde")->check(CLI::IsMember({"agent", "ratio_sde"}));
  sim->add_option("--grid", grid, "Output grid step, days");
  sim->add_option("--burn-in", burn_in, "Burn-in, scaled time units");
  sim->add_option("--kappa", kappa, "Step control");
  sim->add_flag("--no-xi", no_xi, "Do not integrate the mood");
  sim->add_option("--param", param_overrides, "Model parameter override key=value");

  // compose
  auto* comp = app.add_subcommand("compose", "Compose a return series from a trajectory");
  comp->fallthrough();
  std::string traj_path;
  std::string comp_tag = "TTT";
  std::size_t compose_filter = 0;
  comp->add_option("--trajectory", traj_path, "Trajectory CSV")->required();
  comp->add_option("--composition", comp_tag, "use_xi,use_seasonality,use_omega as T/F, e.g. TTT");
  comp->add_option("--filter-window", compose_filter, "Also write the rolling-std filtered series (0: off)");
  comp->add_option("--param", param_overrides, "Model parameter override key=value");

  // episodes
  auto* epi = app.add_subcommand("episodes", "Extract burst and inter-burst durations");
  epi->fallthrough();
  std::string series_path;
  std::vector<double> thresholds = kStudyThresholds;
  std::size_t filter_window = 0;
  epi->add_option("--series", series_path, "Series CSV")->required();
  epi->add_option("--thresholds", thresholds, "Thresholds q in std units")->delimiter(',');
  epi->add_option("--filter-window", filter_window, "Apply the rolling-std filter first (0: off)");

  // pdf
  auto* pdfc = app.add_subcommand("pdf", "Log-binned duration PDFs and power-law fits");
  pdfc->fallthrough();
  std::string episodes_path;
  int bins = 10;
  double lattice = 1.0 / 390.0;
  FitRange dfit{10.0 / 390.0, 10.0};
  pdfc->add_option("--episodes", episodes_path, "Episodes CSV")->required();
  pdfc->add_option("--bins-per-decade", bins, "Bins per decade");
  pdfc->add_option("--lattice", lattice, "Duration lattice step, days (0: continuous bins)");
  pdfc->add_option("--fit-lo", dfit.lo, "Fit range low, days");
  pdfc->add_option("--fit-hi", dfit.hi, "Fit range high, days");

  // psd
  auto* psdc = app.add_subcommand("psd", "Averaged periodogram of a series");
  psdc->fallthrough();
  std::string psd_series;
  std::size_t segment = std::size_t{1} << 16;
  bool use_abs = false;
  FitRange low{1e-2, 1.0};
  FitRange high{10.0, 100.0};
  psdc->add_option("--series", psd_series, "Series CSV")->required();
  psdc->add_option("--segment", segment, "Segment length, power of two");
  psdc->add_flag("--abs", use_abs, "Use |r|");
  psdc->add_option("--low-lo", low.lo, "Low-frequency fit range start, 1/day");
  psdc->add_option("--low-hi", low.hi, "Low-frequency fit range end, 1/day");
  psdc->add_option("--high-lo", high.lo, "High-frequency fit range start, 1/day");
  psdc->add_option("--high-hi", high.hi, "High-frequency fit range end, 1/day");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a preset or configured multi-realization experiment");
  exp->fallthrough();
  std::string preset_name;
  std::string config_path;
  bool plots = false;
  bool dump = false;
  bool list = false;
  auto* p_opt = exp->add_option("--preset", preset_name, "Preset name (see --list)");
  exp->add_option("--config", config_path, "JSON config or manifest")->excludes(p_opt);
  exp->add_flag("--plots", plots, "Emit a gnuplot script");
  exp->add_flag("--dump-series", dump, "Write every realization's series (large)");
  exp->add_flag("--list", list, "List presets and exit");
  exp->add_option("--param", param_overrides, "Model parameter override key=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sim) {
      ModelParams params;
      apply_params(params, param_overrides);
      const double days = g.days.value_or(365.0);
      const std::uint64_t seed = g.seed.value_or(1);
      const std::size_t n = grid_sample_count(days, grid);
      Trajectory traj;
      if (route == "agent") {
        IntegratorOptions opt;
        opt.kappa = kappa;
        opt.evolve_xi = !no_xi;
        AgentIntegrator integ(params, equilibrium_state(params), seed, opt);
        integ.burn_in(burn_in);
        traj = integ.run(n, grid);
      } else {
        const YProcessParams yp = YProcessParams::from_model(params);
        YIntegratorOptions opt;
        opt.kappa = kappa;
        YIntegrator integ(yp, params.h_per_day(), yp.fixed_point(), seed, opt);
        integ.burn_in(burn_in);
        traj = integ.run(n, grid);
      }
      const fs::path p = out_dir(g) / "trajectory.csv";
      auto f = open_out(p);
      write_trajectory_csv(f, traj);
      std::cout << "wrote " << traj.size() << " samples to " << p.string() << "\n";
    } else if (*comp) {
      ModelParams params;
      apply_params(params, param_overrides);
      auto in = open_in(traj_path);
      const Trajectory traj = read_trajectory_csv(in);
      const ReturnSeries series =
          generate_returns(traj, params, CompositionSpec::from_tag(comp_tag), g.seed.value_or(1));
      const fs::path dir = out_dir(g);
      {
        auto f = open_out(dir / "series.csv");
        write_series_csv(f, series);
      }
      if (compose_filter > 0) {
        auto f = open_out(dir / "series_filtered.csv");
        write_series_csv(f, rolling_std_filter(series, compose_filter));
      }
      std::cout << "wrote " << series.size() << " samples to " << (dir / "series.csv").string() << "\n";
    } else if (*epi) {
      auto in = open_in(series_path);
      ReturnSeries series = read_series_csv(in);
      if (filter_window > 0) series = rolling_std_filter(series, filter_window);
      std::vector<EpisodeSet> sets;
      for (double q : thresholds) {
        sets.push_back(extract_episodes(series, ThresholdSpec::resolve(q, series)));
        std::cout << "q=" << q << ": " << sets.back().bursts.size() << " bursts, "
                  << sets.back().inter_bursts.size() << " inter-bursts\n";
      }
      auto f = open_out(out_dir(g) / "episodes.csv");
      write_episodes_csv(f, sets);
    } else if (*pdfc) {
      auto in = open_in(episodes_path);
      const auto sets = read_episodes_csv(in);
      const fs::path dir = out_dir(g);
      auto fits = open_out(dir / "fits.csv");
      fits << "target,range_lo,range_hi,exponent,stderr\n";
      for (const auto& set : sets) {
        const std::string q = threshold_label(set.q);
        for (const auto& [kind, samples] : {std::pair{std::string("T"), &set.bursts},
                                            std::pair{std::string("theta"), &set.inter_bursts}}) {
          if (samples->size() < 10) {
            std::cout << kind << " q=" << q << ": too few samples (" << samples->size() << ")\n";
            fits << kind << "_q" << q << ',' << csv::format(dfit.lo) << ',' << csv::format(dfit.hi) << ",nan,nan\n";
            continue;
          }
          const LogBinnedPdf pdf = log_binned_pdf(*samples, bins, lattice);
          auto f = open_out(dir / ("pdf_" + kind + "_q" + q + ".csv"));
          write_pdf_csv(f, pdf);
          fits << kind << "_q" << q << ',' << csv::format(dfit.lo) << ',' << csv::format(dfit.hi) << ',';
          try {
            const PowerLawFit fit = fit_powerlaw(to_table(pdf), dfit);
            fits << csv::format(fit.exponent) << ',' << csv::format(fit.standard_error) << '\n';
          } catch (const FitError&) {
            fits << "nan,nan\n";
          }
          print_fit(kind + " q=" + q, to_table(pdf), dfit);
        }
      }
    } else if (*psdc) {
      auto in = open_in(psd_series);
      ReturnSeries series = read_series_csv(in);
      if (use_abs) series = absolute(series);
      const Spectrum s = psd(series, segment);
      auto f = open_out(out_dir(g) / "psd.csv");
      write_psd_csv(f, s);
      const BinTable table = log_bin_spectrum(s);
      print_fit("beta1", table, low);
      print_fit("beta2", table, high);
    } else if (*exp) {
      if (list) {
        for (const auto& n : preset_names()) std::cout << n << "\n";
        return 0;
      }
      if (preset_name.empty() && config_path.empty()) throw ConfigError("experiment needs --preset or --config");
      ExperimentConfig config = config_path.empty() ? preset(preset_name) : load_config(config_path);
      if (g.seed) config.base_seed = *g.seed;
      if (g.days) config.total_days = *g.days;
      if (g.realizations) config.n_realizations = *g.realizations;
      if (g.out) config.output_dir = *g.out;
      if (g.workers) config.workers = *g.workers;
      if (plots) config.emit_plots = true;
      if (dump) config.dump_series = true;
      apply_params(config.params, param_overrides);
      if (config.output_dir.empty()) config.output_dir = "out/" + config.name;
      const ExperimentResult r = run_experiment(config);
      for (const auto& t : r.thresholds) {
        std::cout << "q=" << t.q << ": " << t.episodes.bursts.size() << " T, " << t.episodes.inter_bursts.size()
                  << " theta";
        if (t.fit_T) std::cout << ", T exponent " << t.fit_T->exponent;
        if (t.fit_theta) std::cout << ", theta exponent " << t.fit_theta->exponent;
        std::cout << "\n";
      }
      if (r.beta_low) {
        std::cout << "beta1 " << r.beta_low->exponent << " (H = " << hurst_from_beta(r.beta_low->exponent) << ")\n";
      }
      if (r.beta_high) std::cout << "beta2 " << r.beta_high->exponent << "\n";
      std::cout << "outputs in " << config.output_dir << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "consim: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
