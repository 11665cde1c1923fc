#include "commands.hpp"

#include "config.hpp"
#include "svg.hpp"

#include "sawfilm/dispersion.hpp"
#include "sawfilm/errors.hpp"
#include "sawfilm/units.hpp"

#include <CLI11.hpp>
#include <yaml-cpp/exceptions.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sawfilm::cli {

namespace {

// Bad arguments or unreadable/unwritable files.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "run configuration (YAML)");
  if (config_required) opt->required();
  sub->add_option("--seed", c.seed, "noise seed, overrides the config");
  sub->add_option("--out", c.out, "output file (default: standard output)");
}

/// "50 MHz", "24um" or a bare number taken as SI.
double cli_quantity(const std::string& text, Dimension dim, const char* what) {
  double bare = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), bare);
  if (ec == std::errc{} && ptr == text.data() + text.size()) return bare;
  try {
    return parse_quantity(text, dim);
  } catch (const ParseError& e) {
    throw UsageError(std::string(what) + ": " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

DispersionCurve load_curve(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_curve_csv(in, path);
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw UsageError("cannot write '" + path + "'");
  f << text;
  if (!f) throw UsageError("error writing '" + path + "'");
}

std::string fmt(double v) { return format_double(v); }

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string mask_tag(const MaskSpec& m, std::optional<int> pixels) {
  if (pixels) return std::to_string(*pixels) + "px";
  std::string um = fmt(m.period * 1e6);
  for (char& c : um) {
    if (c == '.') c = 'p';
  }
  return um + "um";
}

// ---------------------------------------------------------------- dispersion

struct DispersionArgs {
  Common common;
  std::optional<std::string> f_min, f_max;
  std::optional<int> n_points;
};

int cmd_dispersion(const DispersionArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_run_config(a.common.config);
  Sampling s = cfg.dispersion;
  if (a.f_min) s.f_min = cli_quantity(*a.f_min, Dimension::frequency, "--f-min");
  if (a.f_max) s.f_max = cli_quantity(*a.f_max, Dimension::frequency, "--f-max");
  if (a.n_points) s.n_points = *a.n_points;
  if (s.n_points < 0) throw UsageError("--n-points must be >= 0");
  if (s.n_points > 0 && (!(s.f_min > 0.0) || s.f_max < s.f_min || (s.n_points > 1 && s.f_max == s.f_min))) {
    throw UsageError("need 0 < f_min < f_max");
  }

  DispersionCurve curve;
  if (s.n_points > 0) {
    const std::vector<double> f = s.frequencies();
    DispersionResult r = dispersion_curve(cfg.stack, f);
    for (std::size_t i : r.discontinuities) {
      err << "warning: velocity jumps by more than 5 % between " << fmt(f[i - 1]) << " Hz and " << fmt(f[i])
          << " Hz (possible mode hop)\n";
    }
    curve = std::move(r.curve);
  }
  std::ostringstream csv;
  write_curve_csv(csv, curve);
  write_output(a.common.out, csv.str(), out);
  return kExitOk;
}

// --------------------------------------------------------------------- synth

int cmd_synth(const Common& c, std::ostream& out, std::ostream&) {
  const RunConfig cfg = load_run_config(c.config);
  const SynthesisConfig& syn = cfg.synthesis;
  if (syn.masks.empty()) throw ParseError(c.config + ": synthesis needs at least one mask (synthesis.masks or synthesis.slm)");

  const std::optional<std::uint64_t> seed = c.seed ? c.seed : cfg.seed;
  if (syn.options.noise_rms > 0.0 && !seed) {
    throw ParseError(c.config + ": synthesis.noise_rms > 0 requires a seed (config 'seed' or --seed)");
  }
  if (syn.masks.size() > 1 && (c.out.empty() || c.out == "-")) {
    throw UsageError("several masks produce several waveforms: --out is required");
  }

  const DispersionCurve model = dispersion_curve(cfg.stack, syn.model_curve.frequencies()).curve;
  const std::size_t n_glass = syn.masks.size() - syn.slm_period_pixels.size();

  for (std::size_t i = 0; i < syn.masks.size(); ++i) {
    SynthesisOptions o = syn.options;
    if (seed) o.seed = *seed + i;
    const Waveform w = synthesize_slope_signal(syn.masks[i], model, o);
    std::ostringstream csv;
    write_waveform_csv(csv, w);

    std::string path = c.out;
    if (syn.masks.size() > 1) {
      const std::filesystem::path p(c.out);
      std::optional<int> pixels;
      if (i >= n_glass) pixels = syn.slm_period_pixels[i - n_glass];
      path = (p.parent_path() / (p.stem().string() + "_" + mask_tag(syn.masks[i], pixels) + p.extension().string()))
                 .string();
    }
    write_output(path, csv.str(), out);
  }
  return kExitOk;
}

// ------------------------------------------------------------------- extract

struct ExtractArgs {
  Common common;
  std::vector<std::string> inputs;
  std::vector<std::string> periods;
  std::optional<std::string> expected;
  std::optional<std::string> calibration;
  bool verbose = false;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> cfg;
  if (!a.common.config.empty()) cfg = load_run_config(a.common.config);

  std::vector<MaskSpec> masks;
  std::vector<std::optional<int>> pixels;
  if (!a.periods.empty()) {
    for (const auto& p : a.periods) {
      MaskSpec m;
      m.period = cli_quantity(p, Dimension::length, "--period");
      masks.push_back(m);
      pixels.emplace_back();
    }
  } else if (cfg) {
    masks = cfg->synthesis.masks;
    const std::size_t n_glass = masks.size() - cfg->synthesis.slm_period_pixels.size();
    for (std::size_t i = 0; i < masks.size(); ++i) {
      pixels.push_back(i < n_glass ? std::nullopt : std::optional<int>(cfg->synthesis.slm_period_pixels[i - n_glass]));
    }
  } else {
    throw UsageError("extract needs mask periods: --period or --config with synthesis masks");
  }
  if (masks.size() != a.inputs.size()) {
    throw UsageError("got " + std::to_string(a.inputs.size()) + " waveform(s) but " + std::to_string(masks.size()) +
                     " mask period(s); they are matched in order");
  }

  std::vector<MaskRecording> recordings;
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    std::istringstream in(read_file(a.inputs[i]));
    recordings.push_back({masks[i], read_waveform_csv(in, a.inputs[i])});
  }
  std::optional<DispersionCurve> expected;
  if (a.expected) expected = load_curve(*a.expected);

  const ExtractionOptions options = cfg ? cfg->extraction : ExtractionOptions{};
  const ExtractionResult r = extract_dispersion(recordings, options, expected ? &*expected : nullptr);

  for (std::size_t i = 0; i < r.reports.size(); ++i) {
    const PeakReport& rep = r.reports[i];
    if (a.verbose) {
      err << a.inputs[i] << ": " << rep.peaks.size() << " peak(s)";
      if (!rep.omitted.empty()) err << ", " << rep.omitted.size() << " harmonic(s) omitted";
      err << "\n" << rep.notes;
    }
  }

  if (a.calibration) {
    std::vector<CalibrationPoint> points;
    for (std::size_t i = 0; i < r.reports.size(); ++i) {
      if (!pixels[i]) continue;
      for (const Peak& p : r.reports[i].peaks) {
        if (p.harmonic == 1) points.push_back({*pixels[i], p.frequency});
      }
    }
    if (points.empty()) throw UsageError("--calibration needs SLM masks (synthesis.slm in the config)");
    std::ostringstream csv;
    write_calibration_csv(csv, points);
    write_output(*a.calibration, csv.str(), out);
  }

  std::ostringstream csv;
  write_curve_csv(csv, r.curve);
  write_output(a.common.out, csv.str(), out);
  return kExitOk;
}

// ----------------------------------------------------------------- calibrate

struct CalibrateArgs {
  Common common;
  std::string input;
  std::optional<std::string> pixel_pitch, v_reference;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream&) {
  double pitch = 32e-6, v_ref = 5080.0;
  if (!a.common.config.empty()) {
    const RunConfig cfg = load_run_config(a.common.config);
    pitch = cfg.pixel_pitch;
    v_ref = cfg.v_reference;
  }
  if (a.pixel_pitch) pitch = cli_quantity(*a.pixel_pitch, Dimension::length, "--pixel-pitch");
  if (a.v_reference) v_ref = cli_quantity(*a.v_reference, Dimension::velocity, "--v-reference");

  std::istringstream in(read_file(a.input));
  const std::vector<CalibrationPoint> points = read_calibration_csv(in, a.input);
  const CalibrationResult r = calibrate_projection_ratio(points, pitch, v_ref);

  std::ostringstream rep;
  rep << "projection_ratio: " << fmt(r.ratio) << "\n";
  if (r.sigma) {
    rep << "sigma: " << fmt(*r.sigma) << "\n";
  } else {
    rep << "sigma: undefined (single measurement)\n";
  }
  rep << "n_points: " << r.n_points << "\n";
  rep << "pixel_pitch_m: " << fmt(pitch) << "\n";
  rep << "v_reference_m_per_s: " << fmt(v_ref) << "\n";
  rep << "summary: r = " << fixed(r.ratio, 3);
  if (r.sigma) rep << " +- " << fixed(*r.sigma, 3);
  rep << "\n";
  write_output(a.common.out, rep.str(), out);
  return kExitOk;
}

// ----------------------------------------------------------------------- fit

struct FitArgs {
  Common common;
  std::string measured;
  std::optional<std::string> estimates;
};

std::string unit_of(const std::string& name) {
  const std::string field = name.substr(name.rfind('.') + 1);
  if (field == "thickness") return "m";
  if (field == "young_modulus") return "Pa";
  if (field == "density") return "kg/m3";
  return "1";
}

std::string fit_report(const RunConfig& cfg, const FitProblem& problem, const FitResult& r,
                       const std::string& measured_path) {
  std::ostringstream os;
  os << "# sawfilm fit report\n\n[inputs]\n";
  os << "config: " << cfg.path.string() << "\n";
  os << "materials: " << cfg.material_db.filename().string() << "\n";
  os << "measured: " << measured_path << " (" << problem.measured.size() << " points, "
     << fixed(problem.measured[0].frequency / 1e6, 3) << " to "
     << fixed(problem.measured[problem.measured.size() - 1].frequency / 1e6, 3) << " MHz)\n";
  os << "layers:";
  for (const auto& l : problem.stack.layers) os << " " << l.label << " (" << fmt(l.thickness * 1e6) << " um)";
  os << "\n";
  if (problem.coupling) {
    os << "coupled layer: " << problem.coupling->layer << ", c_ge = " << fmt(problem.coupling->c_ge)
       << ", poisson_ratio = " << fmt(problem.coupling->poisson_ratio) << "\n";
  }
  os << "free parameters:\n";
  for (const auto& p : problem.free) {
    os << "  " << p.name << " initial " << fmt(p.initial) << " bounds [" << fmt(p.lower) << ", " << fmt(p.upper)
       << "] " << (p.transform == Transform::log ? "log" : "linear") << "\n";
  }

  os << "\n[convergence]\n";
  os << "status: " << to_string(r.status) << "\n";
  os << "iterations: " << r.n_iterations << "\n";
  os << "cost: " << fmt(r.cost) << "\n";
  os << "gradient_norm_initial: " << fmt(r.gradient_norm_initial) << "\n";
  os << "gradient_norm_final: " << fmt(r.gradient_norm_final) << "\n";
  os << "residual_rms_m_per_s: " << fmt(r.residual_rms) << "\n";
  if (!r.at_bound.empty()) {
    os << "at_bound:";
    for (const auto& n : r.at_bound) os << " " << n;
    os << "\n";
  }

  os << "\n[estimates]\n";
  for (const auto& n : r.names) {
    os << n << " = " << fmt(r.estimates.at(n)) << " +- " << fmt(r.sigmas.at(n)) << " " << unit_of(n) << "\n";
  }
  if (problem.coupling) {
    const std::string c_name = problem.coupling->layer + ".c_ge";
    const double c = r.estimates.count(c_name) ? r.estimates.at(c_name) : problem.coupling->c_ge;
    const MixedProperties m = apply_coupling(c, problem.coupling->endpoints);
    os << problem.coupling->layer << ".young_modulus (from c_ge) = " << fmt(m.young_modulus) << " Pa\n";
    os << problem.coupling->layer << ".density (from c_ge) = " << fmt(m.density) << " kg/m3\n";
  }

  os << "\n[covariance]\n";
  for (const auto& n : r.names) os << "," << n;
  os << "\n";
  for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
    os << r.names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < r.covariance.cols(); ++j) os << "," << fmt(r.covariance(i, j));
    os << "\n";
  }

  os << "\n[identifiability]\n";
  os << "condition_number: " << fmt(r.identifiability.condition_number) << "\n";
  os << "singular_values:";
  for (Eigen::Index i = 0; i < r.identifiability.singular_values.size(); ++i) {
    os << " " << fmt(r.identifiability.singular_values[i]);
  }
  os << "\n";
  for (const auto& d : r.identifiability.parameters) {
    os << d.name << ": " << to_string(d.status);
    if (d.status != Determination::fixed) {
      os << " (relative_sensitivity " << fixed(d.relative_sensitivity, 4) << ", condition " << fmt(d.condition)
         << ", pivot " << d.pivot << ")";
    }
    os << "\n";
  }
  if (!r.identifiability.recommend_fixing.empty()) {
    os << "recommend_fixing:";
    for (const auto& n : r.identifiability.recommend_fixing) os << " " << n;
    os << "\n";
  }

  os << "\n[residuals]\n";
  os << "frequency_hz,measured_m_per_s,model_m_per_s,residual_m_per_s,sigma_m_per_s\n";
  for (std::size_t i = 0; i < problem.measured.size(); ++i) {
    const CurvePoint& p = problem.measured[i];
    const double model = r.model[i].velocity;
    os << fmt(p.frequency) << "," << fmt(p.velocity) << "," << fmt(model) << "," << fmt(model - p.velocity) << ","
       << fmt(p.sigma.value_or(1.0)) << "\n";
  }
  return os.str();
}

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_run_config(a.common.config);
  if (cfg.fit.free.empty()) throw ParseError(a.common.config + ": config has no 'fit' section with free parameters");

  FitProblem problem;
  problem.stack = cfg.stack;
  problem.free = cfg.fit.free;
  problem.coupling = cfg.coupling;
  problem.measured = load_curve(a.measured);
  problem.options = cfg.fit.options;
  if (problem.measured.empty()) throw ParseError(a.measured + ": no data rows");

  const FitResult r = fit_parameters(problem);
  write_output(a.common.out, fit_report(cfg, problem, r, a.measured), out);

  std::optional<std::string> est_path = a.estimates;
  if (!est_path && !a.common.out.empty() && a.common.out != "-") {
    const std::filesystem::path p(a.common.out);
    est_path = (p.parent_path() / (p.stem().string() + "_estimates.csv")).string();
  }
  if (est_path) {
    std::ostringstream csv;
    csv << "name,value,sigma,unit,status\n";
    for (const auto& n : r.names) {
      std::string status = "well_determined";
      for (const auto& d : r.identifiability.parameters) {
        if (d.name == n) status = to_string(d.status);
      }
      csv << n << "," << fmt(r.estimates.at(n)) << "," << fmt(r.sigmas.at(n)) << "," << unit_of(n) << "," << status
          << "\n";
    }
    write_output(*est_path, csv.str(), out);
  }

  if (!r.converged()) err << "warning: fit did not converge (" << to_string(r.status) << ")\n";
  if (!r.identifiability.all_determined()) {
    err << "warning: weakly determined parameter(s), consider fixing:";
    for (const auto& n : r.identifiability.recommend_fixing) err << " " << n;
    err << "\n";
  }
  if (!r.at_bound.empty()) {
    err << "warning: estimate(s) at a bound:";
    for (const auto& n : r.at_bound) err << " " << n;
    err << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------- plot

struct PlotArgs {
  Common common;
  std::vector<std::string> inputs;
  std::vector<std::string> models;
  std::string title;
};

int cmd_plot(const PlotArgs& a, std::ostream& out, std::ostream&) {
  std::vector<PlotSeries> series;
  for (const auto& path : a.inputs) {
    DispersionCurve c = load_curve(path);
    const SeriesStyle style = c.has_sigma() ? SeriesStyle::markers : SeriesStyle::line;
    series.push_back({std::filesystem::path(path).filename().string(), std::move(c), style});
  }
  for (const auto& path : a.models) {
    series.push_back({std::filesystem::path(path).filename().string() + " (model)", load_curve(path),
                      SeriesStyle::line});
  }
  for (const auto& s : series) {
    if (s.curve.empty()) throw UsageError("plot: '" + s.label + "' has no data rows");
  }
  PlotOptions opts;
  opts.title = a.title;
  std::ostringstream svg;
  write_dispersion_svg(svg, series, opts);
  write_output(a.common.out, svg.str(), out);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Surface acoustic wave dispersion of thin-film stacks: forward model, signal synthesis and analysis, "
               "and parameter fitting.",
               "sawfilm"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  DispersionArgs dis;
  auto* s_dis = app.add_subcommand("dispersion", "compute the model dispersion curve (CSV)");
  add_common(s_dis, dis.common, true);
  s_dis->add_option("--f-min", dis.f_min, "lowest frequency, e.g. 50MHz");
  s_dis->add_option("--f-max", dis.f_max, "highest frequency");
  s_dis->add_option("--n-points", dis.n_points, "number of evenly spaced frequencies");

  Common syn;
  auto* s_syn = app.add_subcommand("synth", "synthesize mask-excited slope signals (CSV per mask)");
  add_common(s_syn, syn, true);

  ExtractArgs ext;
  auto* s_ext = app.add_subcommand("extract", "extract phase velocities from waveform CSVs");
  add_common(s_ext, ext.common, false);
  s_ext->add_option("waveforms", ext.inputs, "waveform CSVs, matched in order to the mask periods")->required();
  s_ext->add_option("--period", ext.periods, "mask period per waveform, e.g. 24um (overrides the config)");
  s_ext->add_option("--expected", ext.expected, "dispersion CSV used to predict harmonic positions");
  s_ext->add_option("--calibration", ext.calibration, "also write SLM fundamentals as a calibration CSV");
  s_ext->add_flag("-v,--verbose", ext.verbose, "print peak-picking notes");

  CalibrateArgs cal;
  auto* s_cal = app.add_subcommand("calibrate", "projection ratio from SLM fundamental frequencies");
  add_common(s_cal, cal.common, false);
  s_cal->add_option("measurements", cal.input, "calibration CSV (period_pixels,frequency_hz)")->required();
  s_cal->add_option("--pixel-pitch", cal.pixel_pitch, "SLM pixel pitch, e.g. 32um");
  s_cal->add_option("--v-reference", cal.v_reference, "reference SAW velocity, e.g. 5080m/s");

  FitArgs fit;
  auto* s_fit = app.add_subcommand("fit", "fit film parameters to a measured dispersion CSV");
  add_common(s_fit, fit.common, true);
  s_fit->add_option("measured", fit.measured, "measured dispersion CSV")->required();
  s_fit->add_option("--estimates", fit.estimates, "estimates CSV (default: <out stem>_estimates.csv)");

  PlotArgs plot;
  auto* s_plot = app.add_subcommand("plot", "plot dispersion CSVs as SVG");
  add_common(s_plot, plot.common, false);
  s_plot->add_option("curves", plot.inputs, "dispersion CSVs; curves with sigma are drawn as markers")->required();
  s_plot->add_option("--model", plot.models, "model curve drawn as a line (repeatable)");
  s_plot->add_option("--title", plot.title, "plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (s_dis->parsed()) return cmd_dispersion(dis, out, err);
    if (s_syn->parsed()) return cmd_synth(syn, out, err);
    if (s_ext->parsed()) return cmd_extract(ext, out, err);
    if (s_cal->parsed()) return cmd_calibrate(cal, out, err);
    if (s_fit->parsed()) return cmd_fit(fit, out, err);
    if (s_plot->parsed()) return cmd_plot(plot, out, err);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const SynthesisError& e) {
    err << "error: synthesis: " << e.what() << "\n";
    return kExitInput;
  } catch (const YAML::Exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ModelError& e) {
    err << "error: forward model: " << e.what() << "\n";
    return kExitModel;
  } catch (const DegeneratePointError& e) {
    err << "error: forward model: " << e.what() << "\n";
    return kExitModel;
  } catch (const ExtractionError& e) {
    err << "error: extraction: " << e.what() << "\n";
    return kExitExtraction;
  } catch (const std::exception& e) {
    err << "error: unexpected: " << e.what() << "\n";
    return kExitUnexpected;
  }
  return kExitUnexpected;
}

}  // namespace sawfilm::cli
