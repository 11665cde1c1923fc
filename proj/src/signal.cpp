#include "sawfilm/signal.hpp"

#include "sawfilm/errors.hpp"
#include "sawfilm/units.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace sawfilm {

void MaskSpec::validate() const {
  if (!(period > 0.0) || !std::isfinite(period)) throw DomainError("mask period must be positive");
  if (!(duty > 0.0 && duty < 1.0)) throw DomainError("mask duty must lie in (0, 1)");
  if (n_periods < 2) throw DomainError("mask needs at least 2 periods");
}

void SlmSpec::validate() const {
  if (!(pixel_pitch > 0.0)) throw DomainError("SLM pixel pitch must be positive");
  if (period_pixels < 2) throw DomainError("SLM period must span at least 2 pixels");
  if (!(projection_ratio > 0.0)) throw DomainError("projection ratio must be positive");
  if (!(ratio_sigma >= 0.0)) throw DomainError("projection ratio sigma must be non-negative");
}

double slm_wavelength(const SlmSpec& slm) {
  slm.validate();
  return slm.pixel_pitch * slm.period_pixels / slm.projection_ratio;
}

MaskSpec slm_mask(const SlmSpec& slm, int n_periods, double duty) {
  MaskSpec m{slm_wavelength(slm), duty, n_periods, MaskKind::slm};
  m.validate();
  return m;
}

namespace {

double pulse_spectrum(double f, double fwhm) {
  const double pi = std::numbers::pi;
  return std::exp(-pi * pi * f * f * fwhm * fwhm / (4.0 * std::numbers::ln2));
}

double grating_coefficient(int n, double duty) {
  const double pi = std::numbers::pi;
  const double s = std::sin(n * pi * duty);
  return std::abs(s) < 1e-9 ? 0.0 : 2.0 / (n * pi) * s;
}

// Fixed point of f = n v(f) / period with v clamped to the sampled range.
double harmonic_frequency(int n, double period, const DispersionCurve& curve) {
  const double f_lo = curve[0].frequency;
  const double f_hi = curve[curve.size() - 1].frequency;
  auto v_of = [&](double f) { return curve.velocity_at(std::clamp(f, f_lo, f_hi)); };
  double f = n * curve[0].velocity / period;
  for (int it = 0; it < 200; ++it) {
    const double next = n * v_of(f) / period;
    if (std::abs(next - f) <= 1e-14 * f) return next;
    f = next;
  }
  return f;
}

std::string mhz(double f) {
  std::ostringstream os;
  os.precision(6);
  os << f / 1e6 << " MHz";
  return os.str();
}

}  // namespace

std::vector<Harmonic> mask_harmonics(const MaskSpec& mask, const DispersionCurve& curve,
                                     const SynthesisOptions& opt) {
  mask.validate();
  if (curve.empty()) throw SynthesisError("empty dispersion curve");
  if (!(opt.sample_rate > 0.0)) throw DomainError("sample rate must be positive");
  const double f_max = opt.bandwidth_fraction * opt.sample_rate;

  std::vector<Harmonic> out;
  double a1 = 0.0;
  for (int n = 1;; ++n) {
    const double f = harmonic_frequency(n, mask.period, curve);
    if (f > f_max) {
      if (n == 1) {
        throw SynthesisError("fundamental at " + mhz(f) + " exceeds the synthesis band (" +
                             mhz(f_max) + ")");
      }
      break;
    }
    const double a = grating_coefficient(n, mask.duty) * pulse_spectrum(f, opt.pulse_fwhm);
    if (n == 1) a1 = std::abs(a);
    if (a == 0.0 || std::abs(a) < opt.harmonic_floor * a1) continue;
    out.push_back(Harmonic{n, f, f * mask.period / n, a});
  }

  std::vector<int> missing;
  double lo = 0.0, hi = 0.0;
  for (const Harmonic& h : out) {
    if (curve.covers(h.frequency)) continue;
    if (missing.empty()) lo = hi = h.frequency;
    lo = std::min(lo, h.frequency);
    hi = std::max(hi, h.frequency);
    missing.push_back(h.n);
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << "dispersion curve (" << mhz(curve[0].frequency) << " to "
       << mhz(curve[curve.size() - 1].frequency) << ") does not cover " << mhz(lo) << " to "
       << mhz(hi) << " needed by harmonic";
    if (missing.size() > 1) os << 's';
    for (std::size_t i = 0; i < missing.size(); ++i) os << (i ? ", " : " ") << missing[i];
    throw SynthesisError(os.str());
  }
  return out;
}

Waveform synthesize_slope_signal(const MaskSpec& mask, const DispersionCurve& curve,
                                 const SynthesisOptions& opt) {
  if (!(opt.distance >= 0.0)) throw DomainError("distance must be non-negative");
  if (!(opt.noise_rms >= 0.0)) throw DomainError("noise_rms must be non-negative");
  if (opt.noise_rms > 0.0 && !opt.seed) throw DomainError("noise requires a seed");
  const std::vector<Harmonic> harmonics = mask_harmonics(mask, curve, opt);

  double t_end = 0.0;
  for (const Harmonic& h : harmonics) {
    t_end = std::max(t_end, opt.distance / h.velocity + mask.n_periods / h.frequency);
  }
  double duration = 1.2 * t_end;
  if (opt.duration) {
    if (*opt.duration < t_end) {
      throw SynthesisError("duration " + format_double(*opt.duration) +
                           " s ends before the wavetrain has passed (" + format_double(t_end) + " s)");
    }
    duration = *opt.duration;
  }

  Waveform w;
  w.sample_rate = opt.sample_rate;
  w.distance = opt.distance;
  w.seed = opt.seed.value_or(0);
  const auto n_samples = static_cast<std::size_t>(std::ceil(duration * opt.sample_rate));
  w.samples.assign(n_samples, 0.0);

  const double two_pi = 2.0 * std::numbers::pi;
  for (const Harmonic& h : harmonics) {
    const double t0 = opt.distance / h.velocity;
    const double t1 = t0 + mask.n_periods / h.frequency;
    const auto i0 = static_cast<std::size_t>(std::ceil(t0 * opt.sample_rate));
    for (std::size_t i = i0; i < n_samples; ++i) {
      const double t = static_cast<double>(i) / opt.sample_rate;
      if (t >= t1) break;
      w.samples[i] += h.amplitude * std::sin(two_pi * h.frequency * (t - t0));
    }
  }

  if (opt.noise_rms > 0.0) {
    double peak = 0.0;
    for (double s : w.samples) peak = std::max(peak, std::abs(s));
    std::mt19937_64 rng(*opt.seed);
    std::normal_distribution<double> normal(0.0, opt.noise_rms * peak);
    for (double& s : w.samples) s += normal(rng);
  }
  return w;
}

PeakReport pick_harmonic_peaks(const Spectrum& s, double fundamental_hint, int n_harmonics,
                               double min_prominence, const PeakOptions& opt) {
  const std::size_t nb = s.amplitude.size();
  if (nb < 3 || !(fundamental_hint > 0.0) || fundamental_hint >= s.frequency.back()) {
    throw ExtractionError("fundamental hint " + mhz(fundamental_hint) + " lies outside the spectrum");
  }
  std::vector<double> sorted(s.amplitude.begin() + 1, s.amplitude.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                   sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double df = s.bin_width();

  PeakReport report;
  std::ostringstream notes;
  double a1 = 0.0;
  for (int n = 1; n <= n_harmonics; ++n) {
    // Predicted position: u = f / n (proportional to the phase velocity) is
    // extrapolated linearly in f through the last two accepted peaks, and
    // f = n u(f) is solved for the new harmonic.
    double per_harmonic = fundamental_hint;
    double pred = n * per_harmonic;
    const auto& acc = report.peaks;
    if (static_cast<std::size_t>(n) <= opt.expected_frequencies.size()) {
      pred = opt.expected_frequencies[static_cast<std::size_t>(n - 1)];
      per_harmonic = pred / n;
    } else if (!acc.empty()) {
      const Peak& b = acc.back();
      const double ub = b.frequency / b.harmonic;
      double slope = 0.0;
      if (acc.size() >= 2) {
        const Peak& a = acc[acc.size() - 2];
        slope = (ub - a.frequency / a.harmonic) / (b.frequency - a.frequency);
      }
      pred = n * (ub - slope * b.frequency) / (1.0 - n * slope);
      if (!(pred > b.frequency)) pred = n * ub;
      per_harmonic = pred / n;
    }
    double lo = pred * (1.0 - opt.search_fraction);
    double hi = pred * (1.0 + opt.search_fraction);
    if (n > 1) {
      lo = std::max(lo, pred - 0.5 * per_harmonic);
      hi = std::min(hi, pred + 0.5 * per_harmonic);
    }
    const auto k_lo = static_cast<std::size_t>(std::max(1.0, std::ceil(lo / df)));
    const auto k_hi = std::min(nb - 2, static_cast<std::size_t>(std::floor(hi / df)));

    auto reject = [&](const std::string& why) {
      if (n == 1) throw ExtractionError("no fundamental peak near " + mhz(pred) + ": " + why);
      report.omitted.push_back(n);
      notes << "harmonic " << n << " near " << mhz(pred) << " omitted: " << why << '\n';
    };

    if (k_lo > k_hi) {
      if (n == 1) reject("search window outside the spectrum");
      notes << "harmonics " << n << " and above lie beyond the spectrum\n";
      break;
    }
    std::size_t k = k_lo;
    for (std::size_t j = k_lo; j <= k_hi; ++j) {
      if (s.amplitude[j] > s.amplitude[k]) k = j;
    }
    const double a = s.amplitude[k];
    if (!(a >= opt.min_snr * median) || a == 0.0) {
      reject("peak/median " + format_double(median > 0.0 ? a / median : 0.0) + " below " +
             format_double(opt.min_snr));
      continue;
    }
    if (n > 1 && a < min_prominence * a1) {
      reject("amplitude " + format_double(a / a1) + " of the fundamental, below " +
             format_double(min_prominence));
      continue;
    }
    if (!acc.empty() && s.frequency[k] <= acc.back().frequency + 0.5 * per_harmonic) {
      reject("strongest bin belongs to harmonic " + std::to_string(acc.back().harmonic));
      continue;
    }
    if (s.amplitude[k - 1] > a || s.amplitude[k + 1] > a) {
      reject("maximum at the edge of the search window");
      continue;
    }

    const double floor = std::numeric_limits<double>::min();
    const double la = std::log(std::max(s.amplitude[k - 1], floor));
    const double lb = std::log(std::max(a, floor));
    const double lc = std::log(std::max(s.amplitude[k + 1], floor));
    const double denom = la - 2.0 * lb + lc;
    const double delta = denom < 0.0 ? std::clamp(0.5 * (la - lc) / denom, -0.5, 0.5) : 0.0;
    Peak p;
    p.harmonic = n;
    p.frequency = (static_cast<double>(k) + delta) * df;
    p.amplitude = std::exp(lb - 0.25 * (la - lc) * delta);

    const double half = p.amplitude / std::numbers::sqrt2;
    std::size_t l = k;
    while (l > 0 && s.amplitude[l] >= half) --l;
    std::size_t r = k;
    while (r + 1 < nb && s.amplitude[r] >= half) ++r;
    auto crossing = [&](std::size_t inside, std::size_t outside) {
      const double ai = s.amplitude[inside], ao = s.amplitude[outside];
      const double t = ai != ao ? (ai - half) / (ai - ao) : 0.0;
      return s.frequency[inside] + t * (s.frequency[outside] - s.frequency[inside]);
    };
    const double f_left = s.amplitude[l] < half ? crossing(l + 1, l) : s.frequency[l];
    const double f_right = s.amplitude[r] < half ? crossing(r - 1, r) : s.frequency[r];
    p.width = f_right - f_left;
    p.sigma_f = 0.5 * p.width;

    if (n == 1) a1 = p.amplitude;
    report.peaks.push_back(p);
  }
  report.notes = notes.str();
  return report;
}

DispersionCurve vph_points(const std::vector<Peak>& peaks, double period) {
  if (!(period > 0.0)) throw DomainError("wavelength must be positive");
  std::vector<CurvePoint> pts;
  for (const Peak& p : peaks) {
    const double lambda = period / p.harmonic;
    pts.push_back(CurvePoint{p.frequency, p.frequency * lambda, p.sigma_f * lambda});
  }
  std::sort(pts.begin(), pts.end(),
            [](const CurvePoint& a, const CurvePoint& b) { return a.frequency < b.frequency; });
  return DispersionCurve(std::move(pts));
}

std::vector<double> predicted_harmonics(double period, const DispersionCurve& expected, int n_max) {
  if (expected.empty()) throw DomainError("empty expected curve");
  const std::size_t m = expected.size();
  auto v_of = [&](double f) {
    if (expected.covers(f) || m == 1) {
      return m == 1 ? expected[0].velocity : expected.velocity_at(f);
    }
    const bool below = f < expected[0].frequency;
    const CurvePoint& a = below ? expected[0] : expected[m - 2];
    const CurvePoint& b = below ? expected[1] : expected[m - 1];
    const double v = a.velocity + (f - a.frequency) * (b.velocity - a.velocity) / (b.frequency - a.frequency);
    // Keep the extrapolation within a factor of two of the sampled range.
    return std::clamp(v, 0.5 * std::min(a.velocity, b.velocity), 2.0 * std::max(a.velocity, b.velocity));
  };
  std::vector<double> out;
  for (int n = 1; n <= n_max; ++n) {
    double f = n * expected[0].velocity / period;
    for (int it = 0; it < 200; ++it) {
      const double next = n * v_of(f) / period;
      const bool done = std::abs(next - f) <= 1e-14 * f;
      f = 0.5 * (f + next);
      if (done) break;
    }
    out.push_back(f);
  }
  return out;
}

ExtractionResult extract_dispersion(const std::vector<MaskRecording>& recordings,
                                    const ExtractionOptions& options,
                                    const DispersionCurve* expected) {
  std::vector<std::size_t> order(recordings.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return recordings[a].mask.period > recordings[b].mask.period;
  });

  ExtractionResult result;
  result.reports.resize(recordings.size());
  std::vector<DispersionCurve> fragments;
  for (std::size_t i : order) {
    const MaskRecording& rec = recordings[i];
    rec.mask.validate();
    const Spectrum s = spectrum(rec.waveform, options.window, options.zero_pad_factor);
    PeakOptions po = options.peaks;
    double hint = options.velocity_guess / rec.mask.period;
    DispersionCurve so_far;
    if (!expected && !fragments.empty()) so_far = merge_curves(fragments);
    const DispersionCurve* prior = expected ? expected : (so_far.empty() ? nullptr : &so_far);
    if (prior) {
      po.expected_frequencies = predicted_harmonics(rec.mask.period, *prior, options.n_harmonics);
      hint = po.expected_frequencies.front();
    }
    if (hint >= s.frequency.back()) {
      throw ExtractionError("expected fundamental of the " + format_double(rec.mask.period * 1e6) +
                            " um mask lies above the spectrum");
    }
    try {
      result.reports[i] = pick_harmonic_peaks(s, hint, options.n_harmonics, options.min_prominence, po);
    } catch (const ExtractionError& e) {
      throw ExtractionError("recording " + std::to_string(i + 1) + " (" +
                            format_double(rec.mask.period * 1e6) + " um mask): " + e.what());
    }
    fragments.push_back(vph_points(result.reports[i].peaks, rec.mask.period));
  }
  result.curve = merge_curves(fragments);
  return result;
}

void write_waveform_csv(std::ostream& out, const Waveform& w) {
  out << "# sample_rate_hz=" << format_double(w.sample_rate) << '\n';
  out << "# distance_m=" << format_double(w.distance) << '\n';
  out << "# seed=" << w.seed << '\n';
  out << "time_s,amplitude\n";
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    out << format_double(static_cast<double>(i) / w.sample_rate) << ','
        << format_double(w.samples[i]) << '\n';
  }
}

Waveform read_waveform_csv(std::istream& in, std::string_view origin) {
  Waveform w;
  std::optional<double> rate;
  bool header = false;
  std::string line;
  std::size_t line_no = 0;
  double last_t = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body(line);
      body.remove_prefix(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string_view key = body.substr(0, eq);
      const std::string_view value = body.substr(eq + 1);
      if (key == "sample_rate_hz") rate = detail::parse_number(value, origin, line_no);
      else if (key == "distance_m") w.distance = detail::parse_number(value, origin, line_no);
      else if (key == "seed") w.seed = static_cast<std::uint64_t>(detail::parse_number(value, origin, line_no));
      continue;
    }
    if (!header) {
      if (line != "time_s,amplitude") {
        throw ParseError(detail::where(origin, line_no) + "expected header 'time_s,amplitude'");
      }
      header = true;
      continue;
    }
    const auto fields = detail::split_fields(line);
    if (fields.size() != 2) throw ParseError(detail::where(origin, line_no) + "expected 2 fields");
    const double t = detail::parse_number(fields[0], origin, line_no);
    if (!(t > last_t)) throw ParseError(detail::where(origin, line_no) + "time must increase");
    last_t = t;
    w.samples.push_back(detail::parse_number(fields[1], origin, line_no));
  }
  if (!header) throw ParseError(std::string(origin) + ": not a waveform CSV (missing header)");
  if (!rate || !(*rate > 0.0)) {
    throw ParseError(std::string(origin) + ": missing or invalid '# sample_rate_hz=' line");
  }
  w.sample_rate = *rate;
  return w;
}

}  // namespace sawfilm
