#pragma once

// Seeded multi-realization experiments: integrate -> compose -> filter ->
// episodes per threshold -> merged PDFs, fits and spectrum, plus a manifest
// that pins everything needed to reproduce the outputs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "consentaneous/episodes.hpp"
#include "consentaneous/model.hpp"
#include "consentaneous/series.hpp"
#include "consentaneous/stats.hpp"
#include "json.hpp"

namespace consentaneous {

inline constexpr const char* kArtifactName = "consentaneous";
inline constexpr const char* kArtifactVersion = "1.0.0";

// Where y(t) comes from: the n_f / xi system or the standalone y SDE.
enum class Route { kAgent, kRatioSde };

struct ExperimentConfig {
  std::string name = "custom";
  ModelParams params;
  CompositionSpec composition;
  Route route = Route::kAgent;
  double total_days = 20.0 * 365.0;  // recorded per realization, after burn-in
  double grid_step = 1.0 / 390.0;    // must divide params.delta
  std::size_t n_realizations = 50;
  std::uint64_t base_seed = 1;
  std::vector<double> thresholds = kStudyThresholds;
  std::size_t filter_window = 10;
  bool apply_filter = true;
  double burn_in = 1000.0;  // scaled time units
  double kappa = 0.1;
  int bins_per_decade = 10;
  FitRange duration_fit{10.0 / 390.0, 10.0};
  FitRange psd_low_fit{1e-2, 1.0};
  FitRange psd_high_fit{10.0, 100.0};
  std::size_t psd_segment = std::size_t{1} << 20;  // 0 disables the spectrum
  std::size_t workers = 1;
  std::string output_dir;  // empty: compute only
  bool dump_series = false;
  bool emit_plots = false;

  // Throws ConfigError on the first violated constraint.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

void to_json(nlohmann::json& j, const ModelParams& p);
void from_json(const nlohmann::json& j, ModelParams& p);

// Known preset names, e.g. "fig3:red", "fig1:model".
std::vector<std::string> preset_names();

// Figure curves: fig1/fig2 model = full model; fig3/fig4 red/green/blue =
// FFF/TFF/TTF without omega and filter; fig5/fig6 red/green/blue = FFT/TFT/TTT
// with omega and the filter. Throws ConfigError listing presets when unknown.
ExperimentConfig preset(const std::string& name);

// Reads a config file. A manifest (JSON object with a "config" key) is accepted too.
ExperimentConfig load_config(const std::filesystem::path& path);

struct ThresholdResult {
  double q = 0.0;
  EpisodeSet episodes;  // merged across realizations, sorted
  std::optional<LogBinnedPdf> pdf_T;
  std::optional<LogBinnedPdf> pdf_theta;
  std::optional<PowerLawFit> fit_T;
  std::optional<PowerLawFit> fit_theta;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<ThresholdResult> thresholds;
  std::optional<Spectrum> spectrum;
  std::optional<PowerLawFit> beta_low;
  std::optional<PowerLawFit> beta_high;
  std::map<std::string, double> stage_seconds;
  std::map<std::string, std::string> checksums;  // file name -> sha256 hex
  nlohmann::json manifest;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// Realization pipeline pieces, exposed for tests and CLI subcommands.
Trajectory simulate_realization(const ExperimentConfig& config, std::uint64_t seed);
ReturnSeries analyzed_series(const ExperimentConfig& config, const ReturnSeries& raw);

std::string sha256_hex(const std::filesystem::path& file);

// "0.3" -> "0.3", 2 -> "2"; used in output file names.
std::string threshold_label(double q);

}  // namespace consentaneous
