#include "sawfilm/signal.hpp"

#include "sawfilm/errors.hpp"
#include "sawfilm/units.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>

namespace sawfilm {

namespace {

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

std::string to_string(Window w) { return w == Window::hann ? "hann" : "none"; }

Spectrum spectrum(const Waveform& w, Window window, int zero_pad_factor) {
  const std::size_t n = w.samples.size();
  if (n < 16) throw DomainError("spectrum needs at least 16 samples");
  if (zero_pad_factor < 1) throw DomainError("zero_pad_factor must be >= 1");
  if (!(w.sample_rate > 0.0)) throw DomainError("sample rate must be positive");
  const std::size_t len = n * static_cast<std::size_t>(zero_pad_factor);
  const std::size_t bins = len / 2 + 1;

  std::unique_ptr<double[], FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * len)));
  std::unique_ptr<fftw_complex[], FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in.get(), out.get(), FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < len; ++i) in[i] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double wt = 1.0;
    if (window == Window::hann) {
      wt = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                 static_cast<double>(n - 1)));
    }
    in[i] = wt * w.samples[i];
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  Spectrum s;
  s.window = window;
  s.fft_length = len;
  s.sample_rate = w.sample_rate;
  s.frequency.resize(bins);
  s.amplitude.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    s.frequency[k] = static_cast<double>(k) * w.sample_rate / static_cast<double>(len);
    s.amplitude[k] = std::hypot(out[k][0], out[k][1]);
  }
  return s;
}

double signal_energy(const Waveform& w) {
  double e = 0.0;
  for (double x : w.samples) e += x * x;
  return e;
}

double spectral_energy(const Spectrum& s) {
  const std::size_t len = s.fft_length;
  double e = 0.0;
  for (std::size_t k = 0; k < s.amplitude.size(); ++k) {
    const bool unpaired = k == 0 || (len % 2 == 0 && k == len / 2);
    e += (unpaired ? 1.0 : 2.0) * s.amplitude[k] * s.amplitude[k];
  }
  return e / static_cast<double>(len);
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  out << "frequency_hz,amplitude\n";
  for (std::size_t k = 0; k < s.amplitude.size(); ++k) {
    out << format_double(s.frequency[k]) << ',' << format_double(s.amplitude[k]) << '\n';
  }
}

}  // namespace sawfilm
