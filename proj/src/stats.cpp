#include "consentaneous/stats.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <ostream>

#include "consentaneous/csv.hpp"
#include "consentaneous/error.hpp"

namespace consentaneous {

namespace {

void fill_centers_and_density(LogBinnedPdf& pdf) {
  const std::size_t n = pdf.bin_edges.size() - 1;
  pdf.bin_centers.resize(n);
  pdf.density.resize(n);
  const double total = static_cast<double>(pdf.n_total);
  for (std::size_t i = 0; i < n; ++i) {
    pdf.bin_centers[i] = std::sqrt(pdf.bin_edges[i] * pdf.bin_edges[i + 1]);
    pdf.density[i] = static_cast<double>(pdf.counts[i]) / (total * pdf.bin_width(i));
  }
}

// Index of the bin [edges[i], edges[i+1]) holding x; x must lie in range.
std::size_t locate(const std::vector<double>& edges, double x) {
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const auto i = static_cast<std::size_t>(std::distance(edges.begin(), it));
  return std::min(i == 0 ? 0 : i - 1, edges.size() - 2);
}

}  // namespace

LogBinnedPdf log_binned_pdf(std::span<const double> samples, int bins_per_decade,
                            double lattice_step) {
  if (bins_per_decade < 2) throw ConfigError("log_binned_pdf: bins_per_decade must be >= 2");
  if (samples.size() < 10) {
    throw SizeError("log_binned_pdf: need at least 10 samples, got " + std::to_string(samples.size()));
  }
  for (double x : samples) {
    if (!(x > 0.0)) throw DomainError("log_binned_pdf: samples must be positive");
  }
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double ratio = std::pow(10.0, 1.0 / bins_per_decade);

  LogBinnedPdf pdf;
  pdf.n_total = samples.size();
  if (lattice_step > 0.0) {
    // Edges at half-integer lattice positions following the geometric sequence.
    const double k_lo = std::round(lo / lattice_step);
    const double k_hi = std::round(hi / lattice_step);
    if (k_lo < 1.0) throw DomainError("log_binned_pdf: sample below one lattice step");
    std::vector<double> k_edges{k_lo - 0.5};
    double g = k_lo;
    while (k_edges.back() <= k_hi) {
      g *= ratio;
      const double e = std::max(std::round(g) - 0.5, k_edges.back() + 1.0);
      k_edges.push_back(e);
      g = std::max(g, e);
    }
    pdf.bin_edges.reserve(k_edges.size());
    for (double e : k_edges) pdf.bin_edges.push_back(e * lattice_step);
    pdf.counts.assign(k_edges.size() - 1, 0);
    for (double x : samples) ++pdf.counts[locate(k_edges, std::round(x / lattice_step))];
  } else {
    pdf.bin_edges.push_back(lo);
    for (int i = 1; pdf.bin_edges.back() <= hi; ++i) {
      pdf.bin_edges.push_back(lo * std::pow(10.0, static_cast<double>(i) / bins_per_decade));
    }
    pdf.counts.assign(pdf.bin_edges.size() - 1, 0);
    for (double x : samples) ++pdf.counts[locate(pdf.bin_edges, x)];
  }
  fill_centers_and_density(pdf);
  return pdf;
}

// ---------------------------------------------------------------------------

namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlan {
  fftw_plan plan = nullptr;
  double* in = nullptr;
  fftw_complex* out = nullptr;

  explicit FftwPlan(std::size_t n) {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  ~FftwPlan() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
};

}  // namespace

Spectrum psd(const ReturnSeries& series, std::size_t segment_length) {
  const std::size_t L = segment_length;
  if (L < 4 || (L & (L - 1)) != 0) throw ConfigError("psd: segment_length must be a power of two >= 4");
  if (series.size() < L) {
    throw SizeError("psd: series of " + std::to_string(series.size()) + " samples is shorter than segment " +
                    std::to_string(L));
  }
  const std::size_t n_seg = series.size() / L;
  const std::size_t half = L / 2;
  const double delta = series.delta;

  Spectrum s;
  s.segment_length = L;
  s.n_segments = n_seg;
  s.frequencies.resize(half);
  s.power.assign(half, 0.0);
  for (std::size_t k = 1; k <= half; ++k) {
    s.frequencies[k - 1] = static_cast<double>(k) / (static_cast<double>(L) * delta);
  }

  FftwPlan fft(L);
  const double norm = delta / static_cast<double>(L);
  for (std::size_t seg = 0; seg < n_seg; ++seg) {
    const double* x = series.values.data() + seg * L;
    double mean = 0.0;
    for (std::size_t i = 0; i < L; ++i) mean += x[i];
    mean /= static_cast<double>(L);
    for (std::size_t i = 0; i < L; ++i) fft.in[i] = x[i] - mean;
    fftw_execute(fft.plan);
    for (std::size_t k = 1; k <= half; ++k) {
      const double re = fft.out[k][0];
      const double im = fft.out[k][1];
      const double two_sided = (re * re + im * im) * norm;
      s.power[k - 1] += (k == half) ? two_sided : 2.0 * two_sided;
    }
  }
  for (double& p : s.power) p /= static_cast<double>(n_seg);
  return s;
}

Spectrum average_spectra(std::span<const Spectrum> parts) {
  if (parts.empty()) throw SizeError("average_spectra: nothing to average");
  Spectrum out;
  out.frequencies = parts.front().frequencies;
  out.segment_length = parts.front().segment_length;
  out.power.assign(out.frequencies.size(), 0.0);
  for (const Spectrum& p : parts) {
    if (p.frequencies != out.frequencies) throw ConfigError("average_spectra: frequency axes differ");
    const double w = static_cast<double>(p.n_segments);
    for (std::size_t k = 0; k < out.power.size(); ++k) out.power[k] += w * p.power[k];
    out.n_segments += p.n_segments;
  }
  for (double& v : out.power) v /= static_cast<double>(out.n_segments);
  return out;
}

// ---------------------------------------------------------------------------

BinTable to_table(const LogBinnedPdf& pdf) {
  return {pdf.bin_centers, pdf.density, pdf.counts};
}

BinTable log_bin_spectrum(const Spectrum& spectrum, int bins_per_decade) {
  if (bins_per_decade < 2) throw ConfigError("log_bin_spectrum: bins_per_decade must be >= 2");
  BinTable table;
  if (spectrum.frequencies.empty()) return table;
  const double f0 = spectrum.frequencies.front();
  const double step = 1.0 / bins_per_decade;
  std::size_t k = 0;
  for (int b = 0; k < spectrum.size(); ++b) {
    const double lo = f0 * std::pow(10.0, b * step);
    const double hi = f0 * std::pow(10.0, (b + 1) * step);
    double sum = 0.0;
    std::size_t count = 0;
    while (k < spectrum.size() && spectrum.frequencies[k] < hi) {
      sum += spectrum.power[k];
      ++count;
      ++k;
    }
    if (count == 0) continue;
    table.centers.push_back(std::sqrt(lo * hi));
    table.values.push_back(sum / static_cast<double>(count));
    table.counts.push_back(count);
  }
  return table;
}

double PowerLawFit::predict(double x) const {
  return std::pow(10.0, intercept - exponent * std::log10(x));
}

PowerLawFit fit_powerlaw(const BinTable& table, FitRange range) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < table.centers.size(); ++i) {
    const double c = table.centers[i];
    if (c < range.lo || c > range.hi) continue;
    if (table.counts[i] < kMinBinCount || !(table.values[i] > 0.0)) continue;
    xs.push_back(std::log10(c));
    ys.push_back(std::log10(table.values[i]));
  }
  const std::size_t n = xs.size();
  if (n < kMinFitBins) throw FitError("fit_powerlaw: too few usable bins", n);

  const double nd = static_cast<double>(n);
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= nd;
  my /= nd;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    rss += r * r;
  }
  PowerLawFit fit;
  fit.exponent = -slope;
  fit.standard_error = std::sqrt(rss / (nd - 2.0) / sxx);
  fit.intercept = intercept;
  fit.fit_range = range;
  fit.n_bins_used = n;
  return fit;
}

std::vector<PowerLawFit> sliding_fits(const BinTable& table, FitRange range, double decades) {
  std::vector<PowerLawFit> fits;
  const double span = std::pow(10.0, decades);
  for (double c : table.centers) {
    if (c < range.lo) continue;
    const FitRange window{c, c * span};
    if (window.hi > range.hi * (1.0 + 1e-12)) break;
    try {
      fits.push_back(fit_powerlaw(table, window));
    } catch (const FitError&) {
    }
  }
  return fits;
}

void write_pdf_csv(std::ostream& out, const LogBinnedPdf& pdf) {
  out << "bin_center,density,count\n";
  for (std::size_t i = 0; i < pdf.size(); ++i) {
    out << csv::format(pdf.bin_centers[i]) << ',' << csv::format(pdf.density[i]) << ',' << pdf.counts[i]
        << '\n';
  }
}

void write_psd_csv(std::ostream& out, const Spectrum& spectrum) {
  out << "freq_per_day,power\n";
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    out << csv::format(spectrum.frequencies[k]) << ',' << csv::format(spectrum.power[k]) << '\n';
  }
}

}  // namespace consentaneous
