#include <cmath>
#include <fstream>
#include <set>

#include "consentaneous/error.hpp"
#include "consentaneous/experiment.hpp"

namespace consentaneous {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

void check_keys(const json& j, const std::set<std::string>& allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string("config: ") + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(std::string("config: unknown key '") + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json range_json(const FitRange& r) { return json::array({r.lo, r.hi}); }

FitRange range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("config: fit range must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

const char* route_name(Route r) { return r == Route::kAgent ? "agent" : "ratio_sde"; }

Route route_from(const std::string& s) {
  if (s == "agent") return Route::kAgent;
  if (s == "ratio_sde") return Route::kRatioSde;
  throw ConfigError("config: route must be 'agent' or 'ratio_sde', got '" + s + "'");
}

bool power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

void to_json(json& j, const ModelParams& p) {
  j = json{{"eps_cf", p.eps_cf}, {"eps_fc", p.eps_fc}, {"eps_cc", p.eps_cc}, {"h_cc", p.h_cc},
           {"a0", p.a0},         {"a_tau", p.a_tau},   {"alpha", p.alpha},   {"h", p.h},
           {"w", p.w},           {"delta", p.delta}};
}

void from_json(const json& j, ModelParams& p) {
  check_keys(j, {"eps_cf", "eps_fc", "eps_cc", "h_cc", "a0", "a_tau", "alpha", "h", "w", "delta"}, "params");
  read_opt(j, "eps_cf", p.eps_cf);
  read_opt(j, "eps_fc", p.eps_fc);
  read_opt(j, "eps_cc", p.eps_cc);
  read_opt(j, "h_cc", p.h_cc);
  read_opt(j, "a0", p.a0);
  read_opt(j, "a_tau", p.a_tau);
  read_opt(j, "alpha", p.alpha);
  read_opt(j, "h", p.h);
  read_opt(j, "w", p.w);
  read_opt(j, "delta", p.delta);
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"name", c.name},
           {"params", c.params},
           {"composition", c.composition.tag()},
           {"route", route_name(c.route)},
           {"total_days", c.total_days},
           {"grid_step", c.grid_step},
           {"n_realizations", c.n_realizations},
           {"base_seed", c.base_seed},
           {"thresholds", c.thresholds},
           {"filter_window", c.filter_window},
           {"apply_filter", c.apply_filter},
           {"burn_in", c.burn_in},
           {"kappa", c.kappa},
           {"bins_per_decade", c.bins_per_decade},
           {"duration_fit", range_json(c.duration_fit)},
           {"psd_low_fit", range_json(c.psd_low_fit)},
           {"psd_high_fit", range_json(c.psd_high_fit)},
           {"psd_segment", c.psd_segment},
           {"workers", c.workers},
           {"output_dir", c.output_dir},
           {"dump_series", c.dump_series},
           {"emit_plots", c.emit_plots}};
}

void from_json(const json& j, ExperimentConfig& c) {
  check_keys(j,
             {"name", "params", "composition", "route", "total_days", "grid_step", "n_realizations",
              "base_seed", "thresholds", "filter_window", "apply_filter", "burn_in", "kappa",
              "bins_per_decade", "duration_fit", "psd_low_fit", "psd_high_fit", "psd_segment", "workers",
              "output_dir", "dump_series", "emit_plots"},
             "experiment config");
  read_opt(j, "name", c.name);
  if (j.contains("params")) {
    ModelParams p = c.params;
    from_json(j.at("params"), p);
    c.params = p;
  }
  if (j.contains("composition")) c.composition = CompositionSpec::from_tag(j.at("composition").get<std::string>());
  if (j.contains("route")) c.route = route_from(j.at("route").get<std::string>());
  read_opt(j, "total_days", c.total_days);
  read_opt(j, "grid_step", c.grid_step);
  read_opt(j, "n_realizations", c.n_realizations);
  read_opt(j, "base_seed", c.base_seed);
  read_opt(j, "thresholds", c.thresholds);
  read_opt(j, "filter_window", c.filter_window);
  read_opt(j, "apply_filter", c.apply_filter);
  read_opt(j, "burn_in", c.burn_in);
  read_opt(j, "kappa", c.kappa);
  read_opt(j, "bins_per_decade", c.bins_per_decade);
  if (j.contains("duration_fit")) c.duration_fit = range_from(j.at("duration_fit"));
  if (j.contains("psd_low_fit")) c.psd_low_fit = range_from(j.at("psd_low_fit"));
  if (j.contains("psd_high_fit")) c.psd_high_fit = range_from(j.at("psd_high_fit"));
  read_opt(j, "psd_segment", c.psd_segment);
  read_opt(j, "workers", c.workers);
  read_opt(j, "output_dir", c.output_dir);
  read_opt(j, "dump_series", c.dump_series);
  read_opt(j, "emit_plots", c.emit_plots);
}

void ExperimentConfig::validate() const {
  params.validate();
  require(n_realizations >= 1, "n_realizations must be >= 1");
  require(!thresholds.empty(), "thresholds must be nonempty");
  for (double q : thresholds) require(q > 0.0, "thresholds must be positive");
  require(total_days >= 100.0 * params.delta * (1.0 - 1e-12), "total_days must be >= 100 delta");
  require(grid_step > 0.0, "grid_step must be > 0");
  const double ratio = params.delta / grid_step;
  require(ratio >= 1.0 - 1e-9 && std::abs(ratio - std::round(ratio)) <= 1e-6 * ratio,
          "grid_step must divide delta");
  require(filter_window >= 2, "filter_window must be >= 2");
  require(burn_in >= 0.0, "burn_in must be >= 0");
  require(kappa > 0.0 && kappa <= 0.5, "kappa must be in (0, 0.5]");
  require(bins_per_decade >= 2, "bins_per_decade must be >= 2");
  for (const FitRange& r : {duration_fit, psd_low_fit, psd_high_fit}) {
    require(r.lo > 0.0 && r.lo < r.hi, "fit ranges need 0 < lo < hi");
  }
  require(psd_segment == 0 || (power_of_two(psd_segment) && psd_segment >= 4),
          "psd_segment must be 0 or a power of two >= 4");
  require(workers >= 1, "workers must be >= 1");
  require(!(route == Route::kRatioSde && composition.use_xi),
          "the ratio_sde route has no mood; composition must not use xi");
  if (route == Route::kRatioSde) YProcessParams::from_model(params).validate();
}

// ---------------------------------------------------------------------------

std::vector<std::string> preset_names() {
  return {"fig1:model", "fig2:model", "fig3:red", "fig3:green", "fig3:blue", "fig4:red", "fig4:green",
          "fig4:blue",  "fig5:red",   "fig5:green", "fig5:blue", "fig6:red",  "fig6:green", "fig6:blue",
          "y-only",     "full"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  auto set = [&](bool xi, bool seasonal, bool omega) {
    c.composition = {xi, seasonal, omega};
    c.apply_filter = omega;
  };
  if (name == "fig1:model" || name == "fig2:model" || name == "full") {
    set(true, true, true);
  } else if (name == "fig3:red" || name == "fig4:red" || name == "y-only") {
    set(false, false, false);
  } else if (name == "fig3:green" || name == "fig4:green") {
    set(true, false, false);
  } else if (name == "fig3:blue" || name == "fig4:blue") {
    set(true, true, false);
  } else if (name == "fig5:red" || name == "fig6:red") {
    set(false, false, true);
  } else if (name == "fig5:green" || name == "fig6:green") {
    set(true, false, true);
  } else if (name == "fig5:blue" || name == "fig6:blue") {
    set(true, true, true);
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "'; known presets: " + known);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  const json& body = (j.is_object() && j.contains("config")) ? j.at("config") : j;
  ExperimentConfig c;
  try {
    from_json(body, c);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return c;
}

}  // namespace consentaneous
