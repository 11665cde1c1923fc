#pragma once

#include "sawfilm/curve.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sawfilm {

enum class MaskKind { glass, slm };

/// Periodic line pattern projected on the sample.
struct MaskSpec {
  double period = 0.0;  // m, fundamental SAW wavelength
  double duty = 0.5;    // bar width / period
  int n_periods = 100;
  MaskKind kind = MaskKind::glass;

  void validate() const;
};

struct SlmSpec {
  double pixel_pitch = 32e-6;  // m
  int period_pixels = 10;
  double projection_ratio = 9.1;
  double ratio_sigma = 0.0;

  void validate() const;
};

/// (pixel_pitch * period_pixels) / projection_ratio.
double slm_wavelength(const SlmSpec& slm);
MaskSpec slm_mask(const SlmSpec& slm, int n_periods, double duty = 0.5);

/// Slope signal sampled from t = 0 at `sample_rate`.
struct Waveform {
  std::vector<double> samples;
  double sample_rate = 0.0;  // Hz
  double distance = 0.0;     // m, source to probe
  std::uint64_t seed = 0;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct SynthesisOptions {
  double distance = 5e-3;       // m
  double pulse_fwhm = 1.2e-9;   // s, Gaussian excitation pulse
  double sample_rate = 2e9;     // Hz
  std::optional<double> duration;  // s; default distance / v_min + longest burst, plus 20 %
  double noise_rms = 0.0;       // fraction of the peak signal amplitude
  std::optional<std::uint64_t> seed;  // required when noise_rms > 0
  /// Harmonics above this fraction of the sample rate are not synthesized.
  double bandwidth_fraction = 0.4;
  /// Harmonics weaker than this fraction of the fundamental are not synthesized.
  double harmonic_floor = 1e-3;
};

struct Harmonic {
  int n = 1;
  double frequency = 0.0;  // Hz, solves f = n v(f) / period
  double velocity = 0.0;   // m/s
  double amplitude = 0.0;  // grating coefficient times pulse spectrum
};

/// Harmonics that synthesize_slope_signal would generate. Throws
/// SynthesisError naming the missing band when `curve` does not cover them.
std::vector<Harmonic> mask_harmonics(const MaskSpec& mask, const DispersionCurve& curve,
                                     const SynthesisOptions& options = {});

/// Sum of rectangular tone bursts, one per harmonic, each n_periods cycles
/// long and delayed by distance / v(f_n), plus seeded Gaussian noise.
Waveform synthesize_slope_signal(const MaskSpec& mask, const DispersionCurve& curve,
                                 const SynthesisOptions& options = {});

enum class Window { none, hann };
std::string to_string(Window w);

/// One-sided magnitude spectrum |X_k|, k = 0 .. L/2, of the windowed record
/// zero-padded to L = zero_pad_factor * N samples.
struct Spectrum {
  std::vector<double> frequency;  // Hz
  std::vector<double> amplitude;
  Window window = Window::hann;
  std::size_t fft_length = 0;
  double sample_rate = 0.0;

  double bin_width() const { return sample_rate / static_cast<double>(fft_length); }
};

Spectrum spectrum(const Waveform& w, Window window = Window::hann, int zero_pad_factor = 4);

/// sum x^2 over the record.
double signal_energy(const Waveform& w);
/// Energy implied by the one-sided spectrum (equals signal_energy for an
/// unwindowed, unpadded transform).
double spectral_energy(const Spectrum& s);

struct Peak {
  int harmonic = 1;
  double frequency = 0.0;  // Hz, parabolic refinement on log amplitude
  double amplitude = 0.0;
  double width = 0.0;      // Hz, full width at -3 dB
  double sigma_f = 0.0;    // Hz, half of `width`
};

struct PeakReport {
  std::vector<Peak> peaks;
  std::vector<int> omitted;  // harmonics below the prominence or noise threshold
  std::string notes;
};

struct PeakOptions {
  double search_fraction = 0.2;  // +- fraction of the predicted harmonic frequency
  double min_snr = 10.0;         // peak / median spectrum amplitude
  /// Predicted frequency of harmonic n at index n - 1. Without it, harmonic
  /// positions are extrapolated from the velocity trend of accepted peaks.
  std::vector<double> expected_frequencies;
};

/// Fixed points of f = n v(f) / period for n = 1 .. n_max, with v linearly
/// extrapolated beyond the ends of `expected`.
std::vector<double> predicted_harmonics(double period, const DispersionCurve& expected, int n_max);

/// Throws ExtractionError when the fundamental is missing or buried in noise.
PeakReport pick_harmonic_peaks(const Spectrum& s, double fundamental_hint, int n_harmonics,
                               double min_prominence, const PeakOptions& options = {});

/// One point per peak with v = f * period / n and sigma_v = sigma_f * period / n.
DispersionCurve vph_points(const std::vector<Peak>& peaks, double period);

struct MaskRecording {
  MaskSpec mask;
  Waveform waveform;
};

struct ExtractionOptions {
  Window window = Window::hann;
  int zero_pad_factor = 4;
  int n_harmonics = 40;
  double min_prominence = 0.01;
  double velocity_guess = 5000.0;  // m/s, locates the first fundamental
  PeakOptions peaks;
};

struct ExtractionResult {
  DispersionCurve curve;            // merged over all recordings, with sigma
  std::vector<PeakReport> reports;  // in the order of the input recordings
};

/// Spectrum, peaks and V_ph = f * period / n for every recording. Recordings
/// are processed from the longest period down; each one's harmonics are
/// predicted from the curve accumulated so far (or from `expected`).
ExtractionResult extract_dispersion(const std::vector<MaskRecording>& recordings,
                                    const ExtractionOptions& options = {},
                                    const DispersionCurve* expected = nullptr);

// Waveform CSV: `time_s,amplitude` after `# sample_rate_hz=` and `# distance_m=` lines.
void write_waveform_csv(std::ostream& out, const Waveform& w);
Waveform read_waveform_csv(std::istream& in, std::string_view origin = "<stream>");
// Spectrum CSV: `frequency_hz,amplitude`.
void write_spectrum_csv(std::ostream& out, const Spectrum& s);

struct CalibrationPoint {
  int period_pixels = 0;
  double frequency = 0.0;  // Hz, measured fundamental
};

struct CalibrationResult {
  double ratio = 0.0;
  std::optional<double> sigma;  // sample standard deviation of the per-point ratios
  std::size_t n_points = 0;
};

/// Least-squares projection ratio from f_i = v_ref r / (pitch P_i).
CalibrationResult calibrate_projection_ratio(const std::vector<CalibrationPoint>& points,
                                             double pixel_pitch, double v_reference = 5080.0);

// Calibration CSV: `period_pixels,frequency_hz`.
std::vector<CalibrationPoint> read_calibration_csv(std::istream& in,
                                                   std::string_view origin = "<stream>");
void write_calibration_csv(std::ostream& out, const std::vector<CalibrationPoint>& points);

}  // namespace sawfilm
