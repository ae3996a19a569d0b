#include "consentaneous/experiment.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <sstream>
#include <thread>

#include "consentaneous/csv.hpp"
#include "consentaneous/error.hpp"
#include "consentaneous/rng.hpp"

namespace consentaneous {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct RealizationOutput {
  std::vector<EpisodeSet> episodes;  // one per threshold, config order
  std::optional<Spectrum> spectrum;
  std::map<std::string, double> seconds;
};

RealizationOutput run_realization(const ExperimentConfig& config, std::size_t index, std::uint64_t seed) {
  RealizationOutput out;
  auto t = Clock::now();
  const Trajectory traj = simulate_realization(config, seed);
  out.seconds["simulate"] = seconds_since(t);

  t = Clock::now();
  const ReturnSeries raw = generate_returns(traj, config.params, config.composition, seed);
  const ReturnSeries analyzed = analyzed_series(config, raw);
  out.seconds["compose"] = seconds_since(t);

  if (config.dump_series && !config.output_dir.empty()) {
    const fs::path p = fs::path(config.output_dir) / ("series_r" + std::to_string(index) + ".csv");
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    write_series_csv(f, raw);
  }

  t = Clock::now();
  for (double q : config.thresholds) {
    try {
      out.episodes.push_back(extract_episodes(analyzed, ThresholdSpec::resolve(q, analyzed)));
    } catch (const DegenerateSeriesError&) {
      EpisodeSet empty;
      empty.q = q;
      empty.n_samples_analyzed = analyzed.size();
      out.episodes.push_back(std::move(empty));
    }
  }
  out.seconds["episodes"] = seconds_since(t);

  t = Clock::now();
  if (config.psd_segment > 0 && raw.size() >= config.psd_segment) {
    out.spectrum = psd(config.composition.use_omega ? absolute(raw) : raw, config.psd_segment);
  }
  out.seconds["psd"] = seconds_since(t);
  return out;
}

std::optional<PowerLawFit> try_fit(const BinTable& table, FitRange range) {
  try {
    return fit_powerlaw(table, range);
  } catch (const FitError&) {
    return std::nullopt;
  }
}

std::optional<LogBinnedPdf> try_pdf(const std::vector<double>& samples, const ExperimentConfig& c) {
  if (samples.size() < 10) return std::nullopt;
  return log_binned_pdf(samples, c.bins_per_decade, c.params.delta);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

template <typename Writer>
std::string render(Writer&& w) {
  std::ostringstream os;
  w(os);
  return os.str();
}

void fit_row(std::ostream& os, const std::string& target, FitRange range, const std::optional<PowerLawFit>& fit) {
  os << target << ',' << csv::format(range.lo) << ',' << csv::format(range.hi) << ',';
  if (fit) {
    os << csv::format(fit->exponent) << ',' << csv::format(fit->standard_error) << '\n';
  } else {
    os << "nan,nan\n";
  }
}

std::string gnuplot_script(const ExperimentResult& r) {
  std::ostringstream os;
  os << "# gnuplot script: burst and inter-burst duration PDFs, log-log\n"
     << "set logscale xy\nset format xy '10^{%L}'\nset xlabel 'duration, days'\nset ylabel 'PDF'\n"
     << "set key outside\nguide(x) = x**(-1.5)\n";
  for (const char* kind : {"T", "theta"}) {
    os << "set title '" << kind << "'\nset terminal pngcairo size 900,600\n"
       << "set output 'pdf_" << kind << ".png'\nplot ";
    bool first = true;
    for (const auto& t : r.thresholds) {
      const bool has = std::string(kind) == "T" ? t.pdf_T.has_value() : t.pdf_theta.has_value();
      if (!has) continue;
      if (!first) os << ", ";
      first = false;
      os << "'pdf_" << kind << "_q" << threshold_label(t.q) << ".csv' skip 1 using 1:2 with linespoints title 'q="
         << threshold_label(t.q) << "'";
    }
    if (!first) os << ", ";
    os << "guide(x) with lines lc rgb 'gray' title 'x^{-3/2}'\n";
  }
  if (r.spectrum) {
    os << "set title 'PSD'\nset xlabel 'f, 1/day'\nset ylabel 'S(f)'\nset output 'psd.png'\n"
       << "plot 'psd.csv' skip 1 using 1:2 with lines title 'S(f)'\n";
  }
  return os.str();
}

}  // namespace

std::string threshold_label(double q) { return csv::format(q); }

Trajectory simulate_realization(const ExperimentConfig& config, std::uint64_t seed) {
  const std::size_t n = grid_sample_count(config.total_days, config.grid_step);
  if (config.route == Route::kAgent) {
    IntegratorOptions opt;
    opt.kappa = config.kappa;
    opt.evolve_xi = config.composition.use_xi;
    AgentIntegrator integrator(config.params, equilibrium_state(config.params), seed, opt);
    integrator.burn_in(config.burn_in);
    return integrator.run(n, config.grid_step);
  }
  const YProcessParams yp = YProcessParams::from_model(config.params);
  YIntegratorOptions opt;
  opt.kappa = config.kappa;
  YIntegrator integrator(yp, config.params.h_per_day(), yp.fixed_point(), seed, opt);
  integrator.burn_in(config.burn_in);
  return integrator.run(n, config.grid_step);
}

ReturnSeries analyzed_series(const ExperimentConfig& config, const ReturnSeries& raw) {
  return config.apply_filter ? rolling_std_filter(raw, config.filter_window) : raw;
}

std::string sha256_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed for " + file.string());
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  if (!config.output_dir.empty()) {
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + config.output_dir + ": " + ec.message());
  }

  const std::size_t R = config.n_realizations;
  result.seeds.resize(R);
  for (std::size_t r = 0; r < R; ++r) result.seeds[r] = realization_seed(config.base_seed, r);

  // Workers fill fixed slots; merging below walks the slots in index order.
  std::vector<RealizationOutput> slots(R);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t r = next.fetch_add(1);
      if (r >= R) return;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) return;
      }
      try {
        slots[r] = run_realization(config, r, result.seeds[r]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(config.workers, R);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (const auto& slot : slots) {
    for (const auto& [stage, s] : slot.seconds) result.stage_seconds[stage] += s;
  }

  auto t = Clock::now();
  for (std::size_t i = 0; i < config.thresholds.size(); ++i) {
    ThresholdResult tr;
    tr.q = config.thresholds[i];
    tr.episodes.q = tr.q;
    for (const auto& slot : slots) tr.episodes.merge(slot.episodes[i]);
    tr.episodes.canonicalize();
    tr.pdf_T = try_pdf(tr.episodes.bursts, config);
    tr.pdf_theta = try_pdf(tr.episodes.inter_bursts, config);
    if (tr.pdf_T) tr.fit_T = try_fit(to_table(*tr.pdf_T), config.duration_fit);
    if (tr.pdf_theta) tr.fit_theta = try_fit(to_table(*tr.pdf_theta), config.duration_fit);
    result.thresholds.push_back(std::move(tr));
  }
  std::vector<Spectrum> spectra;
  for (const auto& slot : slots) {
    if (slot.spectrum) spectra.push_back(*slot.spectrum);
  }
  if (!spectra.empty()) {
    result.spectrum = average_spectra(spectra);
    const BinTable table = log_bin_spectrum(*result.spectrum, config.bins_per_decade);
    result.beta_low = try_fit(table, config.psd_low_fit);
    result.beta_high = try_fit(table, config.psd_high_fit);
  }
  result.stage_seconds["merge"] = seconds_since(t);

  json fits = json::array();
  auto fit_json = [&](const std::string& target, FitRange range, const std::optional<PowerLawFit>& f) {
    json row{{"target", target}, {"range", {range.lo, range.hi}}};
    if (f) {
      row["exponent"] = f->exponent;
      row["stderr"] = f->standard_error;
      row["bins"] = f->n_bins_used;
    }
    fits.push_back(row);
  };
  for (const auto& tr : result.thresholds) {
    fit_json("T_q" + threshold_label(tr.q), config.duration_fit, tr.fit_T);
    fit_json("theta_q" + threshold_label(tr.q), config.duration_fit, tr.fit_theta);
  }
  fit_json("psd_beta1", config.psd_low_fit, result.beta_low);
  fit_json("psd_beta2", config.psd_high_fit, result.beta_high);

  if (!config.output_dir.empty()) {
    t = Clock::now();
    const fs::path dir(config.output_dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& content) {
      write_file(dir / name, content);
      written.push_back(name);
    };
    for (const auto& tr : result.thresholds) {
      const std::string q = threshold_label(tr.q);
      if (tr.pdf_T) emit("pdf_T_q" + q + ".csv", render([&](std::ostream& os) { write_pdf_csv(os, *tr.pdf_T); }));
      if (tr.pdf_theta) {
        emit("pdf_theta_q" + q + ".csv", render([&](std::ostream& os) { write_pdf_csv(os, *tr.pdf_theta); }));
      }
    }
    if (result.spectrum) emit("psd.csv", render([&](std::ostream& os) { write_psd_csv(os, *result.spectrum); }));
    emit("fits.csv", render([&](std::ostream& os) {
           os << "target,range_lo,range_hi,exponent,stderr\n";
           for (const auto& tr : result.thresholds) {
             fit_row(os, "T_q" + threshold_label(tr.q), config.duration_fit, tr.fit_T);
             fit_row(os, "theta_q" + threshold_label(tr.q), config.duration_fit, tr.fit_theta);
           }
           fit_row(os, "psd_beta1", config.psd_low_fit, result.beta_low);
           fit_row(os, "psd_beta2", config.psd_high_fit, result.beta_high);
         }));
    if (config.emit_plots) emit("plot.gp", gnuplot_script(result));
    if (config.dump_series) {
      for (std::size_t r = 0; r < R; ++r) written.push_back("series_r" + std::to_string(r) + ".csv");
    }
    for (const auto& name : written) result.checksums[name] = sha256_hex(dir / name);
    result.stage_seconds["output"] = seconds_since(t);
  }

  json realizations = json::array();
  for (std::size_t r = 0; r < R; ++r) realizations.push_back({{"index", r}, {"seed", result.seeds[r]}});
  json counts = json::array();
  for (const auto& tr : result.thresholds) {
    counts.push_back({{"q", tr.q},
                      {"bursts", tr.episodes.bursts.size()},
                      {"inter_bursts", tr.episodes.inter_bursts.size()},
                      {"samples_analyzed", tr.episodes.n_samples_analyzed}});
  }
  result.manifest = json{{"artifact", kArtifactName},
                         {"version", kArtifactVersion},
                         {"config", config},
                         {"seed_derivation", "seed_r = splitmix64(base_seed xor r)"},
                         {"realizations", realizations},
                         {"episode_counts", counts},
                         {"fits", fits},
                         {"stage_seconds", result.stage_seconds},
                         {"outputs", result.checksums}};
  if (!config.output_dir.empty()) {
    write_file(fs::path(config.output_dir) / "manifest.json", result.manifest.dump(2) + "\n");
  }
  return result;
}

}  // namespace consentaneous
