#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "consentaneous/error.hpp"
#include "consentaneous/stats.hpp"
#include "doctest.h"

using namespace consentaneous;

namespace {

// Inverse-CDF draws from p(x) ~ x^-gamma on [lo, hi].
std::vector<double> power_law_samples(double gamma, double lo, double hi, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = 1.0 - gamma;
  const double la = std::pow(lo, a);
  const double ha = std::pow(hi, a);
  std::vector<double> out(n);
  for (double& x : out) x = std::pow(la + u(eng) * (ha - la), 1.0 / a);
  return out;
}

double integral(const LogBinnedPdf& pdf) {
  double s = 0.0;
  for (std::size_t i = 0; i < pdf.size(); ++i) s += pdf.density[i] * pdf.bin_width(i);
  return s;
}

BinTable exact_table(double gamma, double amp) {
  BinTable t;
  for (int i = 0; i < 30; ++i) {
    const double x = std::pow(10.0, -1.0 + 0.1 * i);
    t.centers.push_back(x);
    t.values.push_back(amp * std::pow(x, -gamma));
    t.counts.push_back(100);
  }
  return t;
}

ReturnSeries white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> normal;
  ReturnSeries s;
  s.delta = 1.0 / 390.0;
  s.values.resize(n);
  for (double& v : s.values) v = normal(eng);
  return s;
}

}  // namespace

TEST_CASE("log_binned_pdf input checks") {
  const std::vector<double> few(9, 1.0);
  CHECK_THROWS_AS(log_binned_pdf(few), SizeError);
  std::vector<double> bad(20, 1.0);
  bad[3] = 0.0;
  CHECK_THROWS_AS(log_binned_pdf(bad), DomainError);
  bad[3] = -2.0;
  CHECK_THROWS_AS(log_binned_pdf(bad), DomainError);
  CHECK_THROWS_AS(log_binned_pdf(std::vector<double>(20, 1.0), 1), ConfigError);
}

TEST_CASE("identical samples occupy a single bin") {
  const LogBinnedPdf pdf = log_binned_pdf(std::vector<double>(50, 3.0));
  std::size_t occupied = 0;
  for (auto c : pdf.counts) occupied += c > 0;
  CHECK(occupied == 1);
  CHECK(integral(pdf) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("geometric bin edges") {
  const auto s = power_law_samples(1.5, 1.0, 1e4, 10000, 1);
  const LogBinnedPdf pdf = log_binned_pdf(s, 10);
  const double r = std::pow(10.0, 0.1);
  for (std::size_t i = 0; i < pdf.size(); ++i) {
    CHECK(pdf.bin_edges[i + 1] > pdf.bin_edges[i]);
    CHECK(pdf.bin_edges[i + 1] / pdf.bin_edges[i] == doctest::Approx(r).epsilon(1e-12));
    CHECK(pdf.bin_centers[i] == doctest::Approx(std::sqrt(pdf.bin_edges[i] * pdf.bin_edges[i + 1])));
  }
  CHECK(pdf.bin_edges.front() <= *std::min_element(s.begin(), s.end()));
  CHECK(pdf.bin_edges.back() > *std::max_element(s.begin(), s.end()));
}

TEST_CASE("PDF integrates to one") {
  const auto s = power_law_samples(1.5, 1.0, 1e4, 100000, 2);
  CHECK(std::abs(integral(log_binned_pdf(s, 10)) - 1.0) < 1e-12);
  CHECK(std::abs(integral(log_binned_pdf(s, 7)) - 1.0) < 1e-12);
  std::vector<double> lattice;
  for (double x : s) lattice.push_back(std::round(x) * 0.25);
  const LogBinnedPdf snapped = log_binned_pdf(lattice, 10, 0.25);
  CHECK(std::abs(integral(snapped) - 1.0) < 1e-12);
  CHECK(std::accumulate(snapped.counts.begin(), snapped.counts.end(), std::size_t{0}) == lattice.size());
}

TEST_CASE("lattice bins cover whole lattice points") {
  std::vector<double> d;
  for (int k = 1; k <= 500; ++k) d.insert(d.end(), 3, k * 0.1);
  const LogBinnedPdf pdf = log_binned_pdf(d, 10, 0.1);
  for (std::size_t i = 0; i < pdf.size(); ++i) {
    const double lo = pdf.bin_edges[i] / 0.1;
    const double hi = pdf.bin_edges[i + 1] / 0.1;
    CHECK(lo - std::floor(lo) == doctest::Approx(0.5));
    CHECK(hi - lo >= 1.0 - 1e-9);
    if (hi > 500.5) continue;  // last bin runs past the data
    // Every lattice point in the bin carries 3 samples.
    CHECK(pdf.counts[i] == static_cast<std::size_t>(std::llround(3.0 * (hi - lo))));
  }
}

TEST_CASE("uniform samples give a flat density") {
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  std::vector<double> s(1000000);
  for (double& x : s) x = u(eng);
  const LogBinnedPdf pdf = log_binned_pdf(s, 10);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < pdf.size(); ++i) {
    if (pdf.bin_edges[i + 1] > 2.0) continue;  // bin reaches past the support
    CHECK(std::abs(pdf.density[i] - 1.0) < 0.05);
    ++checked;
  }
  CHECK(checked >= 2);
}

TEST_CASE("power-law samples recover their exponent") {
  const auto s15 = power_law_samples(1.5, 1.0, 1e4, 1000000, 4);
  const PowerLawFit f15 = fit_powerlaw(to_table(log_binned_pdf(s15, 10)), {1.0, 5e3});
  CHECK(std::abs(f15.exponent - 1.5) <= 0.05);

  const auto s18 = power_law_samples(1.8, 1.0, 1e4, 1000000, 5);
  const PowerLawFit f18 = fit_powerlaw(to_table(log_binned_pdf(s18, 10)), {1.0, 5e3});
  CHECK(std::abs(f18.exponent - 1.8) <= 0.05);
}

TEST_CASE("binning refinement keeps the exponent within its standard error") {
  const auto s = power_law_samples(1.5, 1.0, 1e4, 1000000, 6);
  const PowerLawFit a = fit_powerlaw(to_table(log_binned_pdf(s, 10)), {1.0, 5e3});
  const PowerLawFit b = fit_powerlaw(to_table(log_binned_pdf(s, 20)), {1.0, 5e3});
  CHECK(std::abs(a.exponent - b.exponent) < std::max(a.standard_error, b.standard_error));
}

TEST_CASE("fit is unbiased over seeds") {
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = power_law_samples(1.5, 1.0, 1e4, 100000, 1000 + seed);
    sum += fit_powerlaw(to_table(log_binned_pdf(s, 10)), {1.0, 5e3}).exponent;
  }
  CHECK(std::abs(sum / 100.0 - 1.5) < 0.02);
}

TEST_CASE("exact tables are fitted exactly") {
  for (double g : {0.5, 1.5, 2.7}) {
    const PowerLawFit f = fit_powerlaw(exact_table(g, 3.0), {0.1, 100.0});
    CHECK(f.exponent == doctest::Approx(g).epsilon(1e-12));
    CHECK(f.standard_error < 1e-10);
    CHECK(f.n_bins_used == 30);
    CHECK(f.predict(2.0) == doctest::Approx(3.0 * std::pow(2.0, -g)).epsilon(1e-10));
  }
  BinTable holed = exact_table(1.5, 1.0);
  holed.values[7] = 0.0;
  holed.counts[7] = 0;
  const PowerLawFit f = fit_powerlaw(holed, {0.1, 100.0});
  CHECK(f.exponent == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(f.n_bins_used == 29);
}

TEST_CASE("sparse bins are excluded and too few bins are an error") {
  BinTable t = exact_table(1.5, 1.0);
  t.values[4] *= 50.0;
  t.counts[4] = kMinBinCount - 1;
  CHECK(fit_powerlaw(t, {0.1, 100.0}).exponent == doctest::Approx(1.5).epsilon(1e-12));
  try {
    fit_powerlaw(t, {1.0, 1.5});
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(e.usable_bins() == 2);
  }
}

TEST_CASE("sliding fits") {
  const auto fits = sliding_fits(exact_table(1.5, 1.0), {0.1, 100.0}, 1.0);
  CHECK(fits.size() >= 15);
  for (const auto& f : fits) {
    CHECK(f.exponent == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(f.fit_range.hi / f.fit_range.lo == doctest::Approx(10.0));
  }
}

TEST_CASE("hurst from beta") {
  CHECK(hurst_from_beta(1.4) == doctest::Approx(0.2));
  CHECK(hurst_from_beta(1.0) == 0.0);
  CHECK(hurst_from_beta(2.0) == 0.5);
}

TEST_CASE("ks distance") {
  CHECK(ks_distance({0.5}, [](double x) { return x; }) == doctest::Approx(0.5));
  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000.0);
  CHECK(ks_distance(grid, [](double x) { return x; }) == doctest::Approx(0.0005));
}

TEST_CASE("psd input checks") {
  const ReturnSeries s = white_noise(1000, 1);
  CHECK_THROWS_AS(psd(s, 1024), SizeError);
  CHECK_THROWS_AS(psd(s, 100), ConfigError);
  CHECK_THROWS_AS(psd(s, 2), ConfigError);
}

TEST_CASE("psd frequency axis") {
  const Spectrum sp = psd(white_noise(4096, 2), 1024);
  CHECK(sp.n_segments == 4);
  CHECK(sp.segment_length == 1024);
  CHECK(sp.size() == 512);
  CHECK(sp.frequencies.front() == doctest::Approx(390.0 / 1024.0));
  CHECK(sp.frequencies.back() == doctest::Approx(195.0));
  for (std::size_t k = 1; k < sp.size(); ++k) CHECK(sp.frequencies[k] > sp.frequencies[k - 1]);
  for (double p : sp.power) CHECK(p >= 0.0);
}

TEST_CASE("sinusoid concentrates in one bin") {
  ReturnSeries s;
  s.delta = 1.0 / 390.0;
  const std::size_t L = 4096;
  s.values.resize(4 * L);
  for (std::size_t i = 0; i < s.size(); ++i) s.values[i] = std::sin(2.0 * std::numbers::pi * 37.0 * i / L);
  const Spectrum sp = psd(s, L);
  const double total = std::accumulate(sp.power.begin(), sp.power.end(), 0.0);
  const auto peak = std::max_element(sp.power.begin(), sp.power.end());
  CHECK(*peak / total > 0.99);
  CHECK(sp.frequencies[static_cast<std::size_t>(peak - sp.power.begin())] == doctest::Approx(37.0 / (L * s.delta)));
}

TEST_CASE("white noise has a flat spectrum and obeys Parseval") {
  const ReturnSeries s = white_noise(1 << 20, 3);
  const Spectrum sp = psd(s, 1 << 14);
  const BinTable t = log_bin_spectrum(sp, 10);
  const PowerLawFit f = fit_powerlaw(t, {sp.frequencies.front(), sp.frequencies.back()});
  CHECK(std::abs(f.exponent) <= 0.05);

  const double df = sp.frequencies[1] - sp.frequencies[0];
  const double total = std::accumulate(sp.power.begin(), sp.power.end(), 0.0) * df;
  const double mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / s.size();
  double var = 0.0;
  for (double v : s.values) var += (v - mean) * (v - mean);
  var /= s.size();
  CHECK(std::abs(total - var) / var < 1e-2);
}

TEST_CASE("log binned spectrum counts ordinates") {
  const Spectrum sp = psd(white_noise(1 << 16, 4), 1 << 12);
  const BinTable t = log_bin_spectrum(sp, 10);
  CHECK(std::accumulate(t.counts.begin(), t.counts.end(), std::size_t{0}) == sp.size());
  for (std::size_t i = 1; i < t.centers.size(); ++i) CHECK(t.centers[i] > t.centers[i - 1]);
}

TEST_CASE("spectra average with segment weights") {
  Spectrum a, b;
  a.frequencies = b.frequencies = {1.0, 2.0};
  a.power = {1.0, 2.0};
  a.n_segments = 1;
  b.power = {4.0, 8.0};
  b.n_segments = 3;
  const std::vector<Spectrum> parts{a, b};
  const Spectrum m = average_spectra(parts);
  CHECK(m.power[0] == doctest::Approx(3.25));
  CHECK(m.power[1] == doctest::Approx(6.5));
  CHECK(m.n_segments == 4);
  b.frequencies = {1.0, 3.0};
  const std::vector<Spectrum> bad{a, b};
  CHECK_THROWS_AS(average_spectra(bad), ConfigError);
}

TEST_CASE("CSV writers") {
  LogBinnedPdf pdf = log_binned_pdf(std::vector<double>(20, 2.0));
  std::ostringstream a;
  write_pdf_csv(a, pdf);
  CHECK(a.str().rfind("bin_center,density,count\n", 0) == 0);
  std::ostringstream b;
  write_psd_csv(b, psd(white_noise(64, 1), 16));
  CHECK(b.str().rfind("freq_per_day,power\n", 0) == 0);
}
