#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "consentaneous/error.hpp"
#include "consentaneous/experiment.hpp"
#include "consentaneous/rng.hpp"
#include "doctest.h"

using namespace consentaneous;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "consentaneous_tests" / name;
  fs::remove_all(p);
  return p;
}

ExperimentConfig small(const std::string& preset_name = "full") {
  ExperimentConfig c = preset(preset_name);
  c.n_realizations = 3;
  c.total_days = 60.0;
  c.burn_in = 20.0;
  c.thresholds = {0.5, 2.0};
  c.psd_segment = 1 << 12;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("seed derivation") {
  CHECK(realization_seed(1, 0) == splitmix64(1));
  CHECK(realization_seed(7, 3) == splitmix64(7 ^ 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(realization_seed(42, r));
  CHECK(seen.size() == 1000);
  std::set<std::uint64_t> streams;
  for (auto s : {Stream::kFundamentalists, Stream::kMood, Stream::kRatio, Stream::kExogenous, Stream::kWiener}) {
    streams.insert(stream_seed(5, s));
  }
  CHECK(streams.size() == 5);
}

TEST_CASE("config JSON round trip") {
  ExperimentConfig c;
  c.name = "round";
  c.params.a_tau = 0.9;
  c.params.h_cc = 250.0;
  c.composition = {true, false, true};
  c.route = Route::kAgent;
  c.total_days = 123.5;
  c.n_realizations = 7;
  c.base_seed = 0xDEADBEEFCAFEULL;
  c.thresholds = {0.3, 3.0};
  c.filter_window = 12;
  c.apply_filter = false;
  c.duration_fit = {0.1, 5.0};
  c.psd_segment = 1 << 10;
  c.workers = 2;
  c.output_dir = "x/y";
  c.emit_plots = true;
  const nlohmann::json j = c;
  const ExperimentConfig back = j.get<ExperimentConfig>();
  CHECK(back == c);
  CHECK(j.at("composition") == "TFT");
  CHECK(nlohmann::json(back) == j);
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(nlohmann::json({{"n_realisations", 3}}).get<ExperimentConfig>(), ConfigError);
  CHECK_THROWS_AS(nlohmann::json({{"params", {{"hcc", 1}}}}).get<ExperimentConfig>(), ConfigError);
  CHECK_THROWS_AS(nlohmann::json({{"route", "fast"}}).get<ExperimentConfig>(), ConfigError);
  CHECK_THROWS_AS(nlohmann::json({{"duration_fit", {1.0}}}).get<ExperimentConfig>(), ConfigError);

  auto invalid = [](auto mutate) {
    ExperimentConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  invalid([](ExperimentConfig& c) { c.n_realizations = 0; });
  invalid([](ExperimentConfig& c) { c.thresholds.clear(); });
  invalid([](ExperimentConfig& c) { c.thresholds = {0.5, -1.0}; });
  invalid([](ExperimentConfig& c) { c.total_days = 50.0 * c.params.delta; });
  invalid([](ExperimentConfig& c) { c.grid_step = c.params.delta / 2.5; });
  invalid([](ExperimentConfig& c) { c.psd_segment = 1000; });
  invalid([](ExperimentConfig& c) { c.filter_window = 1; });
  invalid([](ExperimentConfig& c) { c.duration_fit = {10.0, 1.0}; });
  invalid([](ExperimentConfig& c) {
    c.route = Route::kRatioSde;
    c.composition = {true, true, true};
  });
  ExperimentConfig ok;
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("presets") {
  const ExperimentConfig red3 = preset("fig3:red");
  CHECK(red3.composition == CompositionSpec{false, false, false});
  CHECK_FALSE(red3.apply_filter);
  CHECK(preset("fig4:green").composition == CompositionSpec{true, false, false});
  CHECK(preset("fig3:blue").composition == CompositionSpec{true, true, false});
  const ExperimentConfig red5 = preset("fig5:red");
  CHECK(red5.composition == CompositionSpec{false, false, true});
  CHECK(red5.apply_filter);
  CHECK(preset("fig6:green").composition == CompositionSpec{true, false, true});
  const ExperimentConfig model = preset("fig1:model");
  CHECK(model.composition == CompositionSpec{true, true, true});
  CHECK(model.apply_filter);
  CHECK(preset("y-only").composition == red3.composition);
  for (const auto& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    CHECK(c.name == name);
    CHECK(c.thresholds == kStudyThresholds);
    CHECK_NOTHROW(c.validate());
  }
  try {
    preset("fig7:red");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("fig7:red") != std::string::npos);
    CHECK(msg.find("fig3:red") != std::string::npos);
  }
}

TEST_CASE("config files and manifests load") {
  const fs::path dir = scratch("load");
  fs::create_directories(dir);
  ExperimentConfig c = small();
  c.base_seed = 99;
  {
    std::ofstream f(dir / "cfg.json");
    f << nlohmann::json(c).dump(2);
  }
  CHECK(load_config(dir / "cfg.json") == c);
  {
    std::ofstream f(dir / "manifest.json");
    f << nlohmann::json{{"artifact", "x"}, {"config", c}}.dump();
  }
  CHECK(load_config(dir / "manifest.json") == c);
  {
    std::ofstream f(dir / "broken.json");
    f << "{ not json";
  }
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("experiment outputs and manifest") {
  ExperimentConfig c = small();
  c.output_dir = scratch("outputs").string();
  c.emit_plots = true;
  c.dump_series = true;
  const ExperimentResult r = run_experiment(c);
  const fs::path dir(c.output_dir);
  for (const char* name : {"manifest.json", "pdf_T_q0.5.csv", "pdf_theta_q0.5.csv", "psd.csv", "fits.csv",
                           "plot.gp", "series_r0.csv", "series_r2.csv"}) {
    CHECK_MESSAGE(fs::exists(dir / name), name);
  }
  CHECK(slurp(dir / "fits.csv").rfind("target,range_lo,range_hi,exponent,stderr\n", 0) == 0);
  CHECK(r.seeds.size() == 3);
  CHECK(r.seeds[1] == realization_seed(c.base_seed, 1));
  CHECK(r.spectrum.has_value());
  CHECK(r.thresholds.size() == 2);
  for (const auto& [name, sum] : r.checksums) {
    CHECK(sum.size() == 64);
    CHECK(sha256_hex(dir / name) == sum);
  }
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m.at("version") == kArtifactVersion);
  CHECK(m.at("config").get<ExperimentConfig>() == c);
  CHECK(m.at("realizations").size() == 3);
  CHECK(m.at("outputs").size() == r.checksums.size());
  CHECK(m.contains("stage_seconds"));
}

TEST_CASE("a manifest reproduces every output byte for byte") {
  ExperimentConfig c = small();
  c.output_dir = scratch("first").string();
  const ExperimentResult a = run_experiment(c);
  ExperimentConfig again = load_config(fs::path(c.output_dir) / "manifest.json");
  again.output_dir = scratch("second").string();
  const ExperimentResult b = run_experiment(again);
  CHECK(a.checksums == b.checksums);
  for (const auto& [name, sum] : a.checksums) {
    CHECK(slurp(fs::path(c.output_dir) / name) == slurp(fs::path(again.output_dir) / name));
  }
}

TEST_CASE("single realization reruns are identical") {
  ExperimentConfig c = small();
  c.n_realizations = 1;
  c.output_dir = scratch("single_a").string();
  const auto a = run_experiment(c).checksums;
  c.output_dir = scratch("single_b").string();
  const auto b = run_experiment(c).checksums;
  CHECK(a == b);
}

TEST_CASE("merged results do not depend on the worker count") {
  ExperimentConfig c = small();
  c.n_realizations = 5;
  c.workers = 1;
  c.output_dir = scratch("serial").string();
  const ExperimentResult a = run_experiment(c);
  c.workers = 3;
  c.output_dir = scratch("parallel").string();
  const ExperimentResult b = run_experiment(c);
  CHECK(a.checksums == b.checksums);
  for (std::size_t i = 0; i < a.thresholds.size(); ++i) {
    CHECK(a.thresholds[i].episodes.bursts == b.thresholds[i].episodes.bursts);
    CHECK(a.thresholds[i].episodes.inter_bursts == b.thresholds[i].episodes.inter_bursts);
  }
}

TEST_CASE("adding realizations keeps existing ones") {
  ExperimentConfig c = small("fig3:red");
  c.n_realizations = 2;
  const Trajectory a = simulate_realization(c, realization_seed(c.base_seed, 1));
  c.n_realizations = 6;
  const ExperimentResult r = run_experiment(c);
  const Trajectory b = simulate_realization(c, r.seeds[1]);
  CHECK(a.values.size() == b.values.size());
  CHECK(a.values.back().y == b.values.back().y);
}

TEST_CASE("ratio SDE route") {
  ExperimentConfig c = small("fig3:red");
  c.route = Route::kRatioSde;
  const Trajectory t = simulate_realization(c, 3);
  CHECK_FALSE(t.has_xi);
  for (const auto& s : t.values) {
    CHECK(s.y >= 1e-3);
    CHECK(s.y <= 1e3);
  }
  CHECK_NOTHROW(run_experiment(c));
}

TEST_CASE("analyzed series follows the filter flag") {
  ExperimentConfig c = small();
  const Trajectory t = simulate_realization(c, 1);
  const ReturnSeries raw = generate_returns(t, c.params, c.composition, 1);
  CHECK(analyzed_series(c, raw).size() == raw.size() - c.filter_window + 1);
  c.apply_filter = false;
  CHECK(analyzed_series(c, raw).values == raw.values);
}

TEST_CASE("invalid configs fail before any output") {
  ExperimentConfig c = small();
  c.thresholds.clear();
  c.output_dir = scratch("never").string();
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
  CHECK_FALSE(fs::exists(c.output_dir));
}

TEST_CASE("unwritable output directory names the path") {
  const fs::path base = scratch("blocked");
  fs::create_directories(base);
  { std::ofstream(base / "file") << "x"; }
  ExperimentConfig c = small();
  c.n_realizations = 1;
  c.output_dir = (base / "file" / "sub").string();
  try {
    run_experiment(c);
    FAIL("expected failure");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find(c.output_dir) != std::string::npos);
  }
}

TEST_CASE("threshold labels") {
  CHECK(threshold_label(0.3) == "0.3");
  CHECK(threshold_label(2.0) == "2");
  CHECK(threshold_label(1.3) == "1.3");
}
