#include "config.hpp"

#include "sawfilm/errors.hpp"
#include "sawfilm/units.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#ifndef SAWFILM_DATA_DIR
#define SAWFILM_DATA_DIR "data"
#endif

namespace sawfilm::cli {

std::vector<double> Sampling::frequencies() const {
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(std::max(n_points, 0)));
  for (int i = 0; i < n_points; ++i) {
    const double t = n_points == 1 ? 0.0 : static_cast<double>(i) / (n_points - 1);
    f.push_back(f_min + t * (f_max - f_min));
  }
  return f;
}

std::filesystem::path default_data_dir() { return SAWFILM_DATA_DIR; }

namespace {

// A YAML map with a fixed key set. Every access records the key; finish()
// rejects anything left over.
class Section {
public:
  Section(std::string_view origin, YAML::Node node, std::string name)
      : origin_(origin), node_(std::move(node)), name_(std::move(name)) {
    if (!node_.IsMap()) fail(node_, "'" + name_ + "' must be a map");
  }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    std::ostringstream os;
    os << origin_;
    const YAML::Mark mark = at.Mark();
    if (mark.line >= 0) os << ":" << mark.line + 1;
    os << ": " << what;
    throw ParseError(os.str());
  }

  YAML::Node get(const std::string& key) {
    known_.insert(key);
    return node_[key];
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return static_cast<bool>(node_[key]);
  }

  YAML::Node require(const std::string& key) {
    YAML::Node v = get(key);
    if (!v) fail(node_, "'" + name_ + "': missing key '" + key + "'");
    return v;
  }

  std::string scalar(const YAML::Node& v, const std::string& key) const {
    if (!v.IsScalar()) fail(v, "'" + name_ + "." + key + "' must be a scalar");
    return v.Scalar();
  }

  std::string text(const std::string& key) { return scalar(require(key), key); }

  double quantity(const YAML::Node& v, const std::string& key, Dimension dim) const {
    try {
      return parse_quantity(scalar(v, key), dim);
    } catch (const ParseError& e) {
      fail(v, "'" + name_ + "." + key + "': " + e.what());
    }
  }

  double quantity(const std::string& key, Dimension dim) {
    return quantity(require(key), key, dim);
  }

  void quantity_into(const std::string& key, Dimension dim, double& target) {
    if (YAML::Node v = get(key)) target = quantity(v, key, dim);
  }

  std::int64_t integer(const YAML::Node& v, const std::string& key) const {
    const std::string s = scalar(v, key);
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      fail(v, "'" + name_ + "." + key + "': expected an integer, got '" + s + "'");
    }
    return out;
  }

  void int_into(const std::string& key, int& target) {
    if (YAML::Node v = get(key)) target = static_cast<int>(integer(v, key));
  }

  Section child(const std::string& key) { return Section(origin_, require(key), name_ + "." + key); }

  void finish() const {
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!known_.count(key)) fail(kv.first, "'" + name_ + "': unknown key '" + key + "'");
    }
  }

  const YAML::Node& node() const { return node_; }
  std::string_view origin() const { return origin_; }
  const std::string& name() const { return name_; }

private:
  std::string_view origin_;
  YAML::Node node_;
  std::string name_;
  std::set<std::string> known_;
};

Eigen::Vector3d read_vector(Section& s, const std::string& key) {
  const YAML::Node v = s.require(key);
  if (!v.IsSequence() || v.size() != 3) s.fail(v, "'" + s.name() + "." + key + "' must be [x, y, z]");
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) out[i] = s.quantity(v[i], key, Dimension::dimensionless);
  return out;
}

Sampling read_sampling(Section s, Sampling defaults) {
  s.quantity_into("f_min", Dimension::frequency, defaults.f_min);
  s.quantity_into("f_max", Dimension::frequency, defaults.f_max);
  s.int_into("n_points", defaults.n_points);
  s.finish();
  if (defaults.n_points < 0) s.fail(s.node(), "'" + s.name() + ".n_points' must be >= 0");
  if (!(defaults.f_min > 0.0) || defaults.f_max < defaults.f_min) {
    s.fail(s.node(), "'" + s.name() + "' needs 0 < f_min <= f_max");
  }
  return defaults;
}

Dimension field_dimension(const std::string& name) {
  const auto dot = name.rfind('.');
  const std::string field = dot == std::string::npos ? name : name.substr(dot + 1);
  if (field == "thickness") return Dimension::length;
  if (field == "young_modulus") return Dimension::pressure;
  if (field == "density") return Dimension::density;
  return Dimension::dimensionless;
}

const MaterialEntry& lookup(const MaterialDb& db, Section& s, const std::string& key) {
  const YAML::Node v = s.require(key);
  const std::string name = s.scalar(v, key);
  if (!db.contains(name)) s.fail(v, "unknown material '" + name + "'");
  return db.at(name);
}

void read_stack(Section s, RunConfig& cfg) {
  if (s.has("geometry")) {
    Section g = s.child("geometry");
    cfg.stack.geometry.surface_normal = read_vector(g, "surface_normal");
    cfg.stack.geometry.propagation = read_vector(g, "propagation");
    g.finish();
  }
  cfg.stack.substrate = lookup(cfg.db, s, "substrate").material;

  if (YAML::Node layers = s.get("layers")) {
    if (!layers.IsSequence()) s.fail(layers, "'stack.layers' must be a list");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      Section l(s.origin(), layers[i], "stack.layers[" + std::to_string(i) + "]");
      Layer layer;
      layer.label = l.has("label") ? l.text("label") : "layer" + std::to_string(i);
      layer.thickness = l.quantity("thickness", Dimension::length);
      const bool by_name = l.has("material");
      const bool mixed = l.has("mixing");
      if (by_name == mixed) l.fail(l.node(), "layer needs exactly one of 'material' or 'mixing'");
      if (by_name) {
        layer.material = lookup(cfg.db, l, "material").material;
      } else {
        if (cfg.coupling) l.fail(l.node(), "only one layer may use 'mixing'");
        Section m = l.child("mixing");
        MixingCoupling c;
        c.layer = layer.label;
        c.c_ge = m.quantity("c_ge", Dimension::dimensionless);
        m.quantity_into("poisson_ratio", Dimension::dimensionless, c.poisson_ratio);
        const std::string si = m.has("si") ? m.text("si") : "polySi";
        const std::string ge = m.has("ge") ? m.text("ge") : "polyGe";
        try {
          c.endpoints = mixing_endpoints(cfg.db, si, ge);
        } catch (const ParseError& e) {
          m.fail(m.node(), e.what());
        }
        m.finish();
        if (c.c_ge < 0.0 || c.c_ge > 1.0) m.fail(m.node(), "c_ge must lie in [0, 1]");
        layer.material = IsotropicMaterial{
            mix_young_modulus(c.c_ge, c.endpoints.e_si, c.endpoints.e_ge), c.poisson_ratio,
            mix_density(c.c_ge, c.endpoints.rho_si, c.endpoints.rho_ge)};
        cfg.coupling = c;
      }
      l.finish();
      cfg.stack.layers.push_back(std::move(layer));
    }
  }
  s.finish();
  try {
    cfg.stack.validate();
  } catch (const DomainError& e) {
    s.fail(s.node(), std::string("invalid stack: ") + e.what());
  }
}

MaskSpec read_mask(Section m) {
  MaskSpec mask;
  mask.period = m.quantity("period", Dimension::length);
  m.quantity_into("duty", Dimension::dimensionless, mask.duty);
  m.int_into("n_periods", mask.n_periods);
  m.finish();
  try {
    mask.validate();
  } catch (const DomainError& e) {
    m.fail(m.node(), e.what());
  }
  return mask;
}

void read_synthesis(Section s, RunConfig& cfg) {
  SynthesisConfig& out = cfg.synthesis;
  SynthesisOptions& o = out.options;
  s.quantity_into("distance", Dimension::length, o.distance);
  s.quantity_into("pulse_fwhm", Dimension::time, o.pulse_fwhm);
  s.quantity_into("sample_rate", Dimension::frequency, o.sample_rate);
  if (YAML::Node d = s.get("duration")) o.duration = s.quantity(d, "duration", Dimension::time);
  s.quantity_into("noise_rms", Dimension::dimensionless, o.noise_rms);
  if (s.has("model_curve")) out.model_curve = read_sampling(s.child("model_curve"), out.model_curve);

  if (YAML::Node masks = s.get("masks")) {
    if (!masks.IsSequence()) s.fail(masks, "'synthesis.masks' must be a list");
    for (std::size_t i = 0; i < masks.size(); ++i) {
      out.masks.push_back(read_mask(Section(s.origin(), masks[i], "synthesis.masks[" + std::to_string(i) + "]")));
    }
  }
  if (s.has("slm")) {
    Section m = s.child("slm");
    SlmSpec slm;
    slm.pixel_pitch = cfg.pixel_pitch;
    m.quantity_into("pixel_pitch", Dimension::length, slm.pixel_pitch);
    m.quantity_into("projection_ratio", Dimension::dimensionless, slm.projection_ratio);
    int n_periods = 100;
    double duty = 0.5;
    m.int_into("n_periods", n_periods);
    m.quantity_into("duty", Dimension::dimensionless, duty);
    const YAML::Node pixels = m.require("period_pixels");
    if (!pixels.IsSequence() || pixels.size() == 0) m.fail(pixels, "'synthesis.slm.period_pixels' must be a non-empty list");
    m.finish();
    for (const auto& p : pixels) {
      slm.period_pixels = static_cast<int>(m.integer(p, "period_pixels"));
      try {
        out.masks.push_back(slm_mask(slm, n_periods, duty));
      } catch (const DomainError& e) {
        m.fail(p, e.what());
      }
      out.slm_period_pixels.push_back(slm.period_pixels);
    }
  }
  s.finish();
  if (!(o.distance > 0.0) || !(o.pulse_fwhm > 0.0) || !(o.sample_rate > 0.0) || o.noise_rms < 0.0 ||
      (o.duration && !(*o.duration > 0.0))) {
    s.fail(s.node(), "synthesis: distance, pulse_fwhm, sample_rate and duration must be positive, noise_rms >= 0");
  }
}

void read_extraction(Section s, ExtractionOptions& e) {
  if (YAML::Node w = s.get("window")) {
    const std::string name = s.scalar(w, "window");
    if (name == "hann") e.window = Window::hann;
    else if (name == "none") e.window = Window::none;
    else s.fail(w, "unknown window '" + name + "' (expected hann or none)");
  }
  s.int_into("zero_pad_factor", e.zero_pad_factor);
  s.int_into("n_harmonics", e.n_harmonics);
  s.quantity_into("min_prominence", Dimension::dimensionless, e.min_prominence);
  s.quantity_into("velocity_guess", Dimension::velocity, e.velocity_guess);
  s.quantity_into("search_fraction", Dimension::dimensionless, e.peaks.search_fraction);
  s.quantity_into("min_snr", Dimension::dimensionless, e.peaks.min_snr);
  s.finish();
  if (e.zero_pad_factor < 1 || e.n_harmonics < 1 || e.min_prominence < 0.0 || !(e.velocity_guess > 0.0) ||
      !(e.peaks.search_fraction > 0.0 && e.peaks.search_fraction < 1.0) || e.peaks.min_snr < 0.0) {
    s.fail(s.node(), "extraction: option out of range");
  }
}

void read_fit(Section s, RunConfig& cfg) {
  FitConfig& f = cfg.fit;
  const YAML::Node free = s.require("free");
  if (!free.IsSequence()) s.fail(free, "'fit.free' must be a list");
  for (std::size_t i = 0; i < free.size(); ++i) {
    Section p(s.origin(), free[i], "fit.free[" + std::to_string(i) + "]");
    FreeParameter fp;
    fp.name = p.text("name");
    const Dimension dim = field_dimension(fp.name);
    fp.initial = p.quantity("initial", dim);
    fp.lower = p.quantity("lower", dim);
    fp.upper = p.quantity("upper", dim);
    if (YAML::Node t = p.get("transform")) {
      const std::string name = p.scalar(t, "transform");
      if (name == "linear") fp.transform = Transform::linear;
      else if (name == "log") fp.transform = Transform::log;
      else p.fail(t, "unknown transform '" + name + "' (expected linear or log)");
    }
    p.finish();
    f.free.push_back(fp);
  }
  FitOptions& o = f.options;
  s.int_into("max_iterations", o.max_iterations);
  s.quantity_into("step_tolerance", Dimension::dimensionless, o.step_tolerance);
  s.quantity_into("cost_tolerance", Dimension::dimensionless, o.cost_tolerance);
  s.quantity_into("fd_relative_step", Dimension::dimensionless, o.fd_relative_step);
  if (s.has("identifiability")) {
    Section id = s.child("identifiability");
    id.quantity_into("min_relative_sensitivity", Dimension::dimensionless,
                     o.identifiability.min_relative_sensitivity);
    id.quantity_into("max_condition", Dimension::dimensionless, o.identifiability.max_condition);
    id.finish();
  }
  s.finish();
  if (o.max_iterations < 1 || !(o.step_tolerance > 0.0) || !(o.cost_tolerance > 0.0) ||
      !(o.fd_relative_step > 0.0 && o.fd_relative_step < 0.1)) {
    s.fail(s.node(), "fit: option out of range");
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view text, std::string_view origin,
                           const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string(origin) + ": " + e.what());
  }
  if (!root.IsMap()) throw ParseError(std::string(origin) + ": config must be a map of sections");

  RunConfig cfg;
  cfg.path = std::string(origin);
  Section top(origin, root, "config");

  cfg.material_db = default_data_dir() / "materials.yaml";
  if (YAML::Node m = top.get("materials")) {
    std::filesystem::path p = top.scalar(m, "materials");
    cfg.material_db = p.is_absolute() ? p : base_dir / p;
  }
  try {
    cfg.db = load_material_db(cfg.material_db);
  } catch (const ParseError& e) {
    top.fail(top.node()["materials"] ? top.node()["materials"] : root, e.what());
  }

  if (YAML::Node s = top.get("seed")) {
    const std::int64_t seed = top.integer(s, "seed");
    if (seed < 0) top.fail(s, "seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }

  if (top.has("calibration")) {
    Section c = top.child("calibration");
    c.quantity_into("pixel_pitch", Dimension::length, cfg.pixel_pitch);
    c.quantity_into("v_reference", Dimension::velocity, cfg.v_reference);
    c.finish();
    if (!(cfg.pixel_pitch > 0.0) || !(cfg.v_reference > 0.0)) {
      c.fail(c.node(), "calibration: pixel_pitch and v_reference must be positive");
    }
  }
  read_stack(top.child("stack"), cfg);
  if (top.has("dispersion")) cfg.dispersion = read_sampling(top.child("dispersion"), cfg.dispersion);
  if (top.has("synthesis")) read_synthesis(top.child("synthesis"), cfg);
  if (top.has("extraction")) read_extraction(top.child("extraction"), cfg.extraction);
  if (top.has("fit")) read_fit(top.child("fit"), cfg);
  top.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.string(), path.parent_path());
}

}  // namespace sawfilm::cli
