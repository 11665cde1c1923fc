#include "sawfilm/dispersion.hpp"

#include "sawfilm/errors.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace sawfilm {

namespace detail {

StackSolver::StackSolver(const LayerStack& stack) {
  stack.validate();
  const ElasticTensor substrate_tensor = tensor_in_frame(stack.substrate, stack.geometry);
  const double scale = substrate_tensor.voigt(2, 2);

  auto intern = [&](const ElasticTensor& tensor, double density) {
    Medium medium(tensor, density, scale);
    for (std::size_t i = 0; i < media_.size(); ++i) {
      if (media_[i].same_as(medium)) return static_cast<int>(i);
    }
    media_.push_back(std::move(medium));
    return static_cast<int>(media_.size() - 1);
  };

  for (const Layer& layer : stack.layers) {
    layer_medium_.push_back(
        intern(tensor_in_frame(layer.material, stack.geometry), density_of(layer.material)));
    thickness_.push_back(layer.thickness);
  }
  substrate_medium_ = intern(substrate_tensor, density_of(stack.substrate));

  slowest_shear_ = std::numeric_limits<double>::infinity();
  bool mirror = true;
  for (const Medium& m : media_) {
    slowest_shear_ = std::min(slowest_shear_, m.bulk_velocities().minCoeff());
    mirror = mirror && m.sagittal_mirror();
  }

  // Limiting velocity: slowest substrate bulk wave along x1 that couples to
  // the sagittal motion. Shear-horizontal branches are excluded only when
  // every medium has the x2 mirror symmetry.
  const Medium& sub = media_[static_cast<std::size_t>(substrate_medium_)];
  limit_velocity_ = std::numeric_limits<double>::infinity();
  for (int b = 0; b < 3; ++b) {
    const bool shear_horizontal = std::abs(sub.bulk_polarizations()(1, b)) > 1.0 - 1e-9;
    if (mirror && shear_horizontal) continue;
    limit_velocity_ = std::min(limit_velocity_, sub.bulk_velocities()(b));
  }
}

StackWaves StackSolver::waves(double velocity) const {
  StackWaves w;
  w.velocity = velocity;
  w.media.reserve(media_.size());
  for (const Medium& m : media_) w.media.push_back(partial_waves(m, velocity));

  const PartialWaveSet& sub = w.media[static_cast<std::size_t>(substrate_medium_)];
  int n = 0;
  for (int i = 0; i < 6; ++i) {
    const WaveKind kind = sub.waves[static_cast<std::size_t>(i)].kind;
    if (kind == WaveKind::decaying || kind == WaveKind::propagating_down) {
      if (n < 3) w.substrate_down[static_cast<std::size_t>(n)] = i;
      ++n;
    }
  }
  if (n != 3) {
    std::ostringstream os;
    os << "substrate carries " << n << " downgoing partial waves at v = " << velocity << " m/s";
    throw ModelError(os.str());
  }
  return w;
}

StackWaves StackSolver::waves_perturbed(double velocity) const {
  double v = velocity;
  for (int attempt = 0;; ++attempt) {
    try {
      return waves(v);
    } catch (const DegeneratePointError&) {
      if (attempt == 4) throw;
      v *= 1.0 + 1e-9;
    }
  }
}

namespace {

Complex phase_factor(const PartialWave& wave, double k, double depth) {
  return std::exp(Complex(0.0, k * depth) * wave.eigenvalue);
}

}  // namespace

Eigen::MatrixXcd StackSolver::assemble(const StackWaves& w, double k, Eigen::VectorXcd* rhs) const {
  const Eigen::Index n = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  const std::size_t layers = thickness_.size();

  // Places a wave's top-face contribution: traction rows at the free surface,
  // or minus the full field in the continuity rows of the interface above.
  auto place_top = [&](std::size_t layer, Eigen::Index col, const PartialWave& wave, Complex factor) {
    if (layer == 0) {
      m.block<3, 1>(0, col) = wave.traction() * factor;
    } else {
      m.block<6, 1>(static_cast<Eigen::Index>(3 + 6 * (layer - 1)), col) = -wave.field * factor;
    }
  };

  for (std::size_t j = 0; j < layers; ++j) {
    const PartialWaveSet& set = w.media[static_cast<std::size_t>(layer_medium_[j])];
    const double h = thickness_[j];
    for (std::size_t s = 0; s < 6; ++s) {
      const PartialWave& wave = set.waves[s];
      const Eigen::Index col = static_cast<Eigen::Index>(6 * j + s);
      Complex top{1.0, 0.0};
      Complex bottom{1.0, 0.0};
      // Reference each exponential to the face where it is largest.
      if (wave.kind == WaveKind::growing) top = phase_factor(wave, k, -h);
      else bottom = phase_factor(wave, k, h);
      place_top(j, col, wave, top);
      m.block<6, 1>(static_cast<Eigen::Index>(3 + 6 * j), col) = wave.field * bottom;
    }
  }
  const PartialWaveSet& sub = w.media[static_cast<std::size_t>(substrate_medium_)];
  for (std::size_t s = 0; s < 3; ++s) {
    const PartialWave& wave = sub.waves[static_cast<std::size_t>(w.substrate_down[s])];
    place_top(layers, static_cast<Eigen::Index>(6 * layers + s), wave, Complex{1.0, 0.0});
  }
  if (rhs) {
    *rhs = Eigen::VectorXcd::Zero(n);
    (*rhs)(2) = 1.0;
  }
  return m;
}

GreenFunction StackSolver::green(const StackWaves& w, double k) const {
  Eigen::VectorXcd rhs;
  const Eigen::MatrixXcd m = assemble(w, k, &rhs);
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
  GreenFunction g;
  g.determinant = lu.determinant();
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
  if (!(pivots.minCoeff() > 0.0) || !pivots.allFinite()) {
    g.at_pole = true;
    g.value = Complex(std::numeric_limits<double>::infinity(), 0.0);
    return g;
  }
  const Eigen::VectorXcd c = lu.solve(rhs);

  // u3 at the surface from the top medium's waves.
  Complex u3{0.0, 0.0};
  if (thickness_.empty()) {
    const PartialWaveSet& sub = w.media[static_cast<std::size_t>(substrate_medium_)];
    for (std::size_t s = 0; s < 3; ++s) {
      u3 += c(static_cast<Eigen::Index>(s)) *
            sub.waves[static_cast<std::size_t>(w.substrate_down[s])].field(2);
    }
  } else {
    const PartialWaveSet& set = w.media[static_cast<std::size_t>(layer_medium_[0])];
    for (std::size_t s = 0; s < 6; ++s) {
      const PartialWave& wave = set.waves[s];
      const Complex top =
          wave.kind == WaveKind::growing ? phase_factor(wave, k, -thickness_[0]) : Complex{1.0, 0.0};
      u3 += c(static_cast<Eigen::Index>(s)) * wave.field(2) * top;
    }
  }
  const double scale = media_.front().stiffness_scale();
  g.value = Complex(0.0, -1.0) * u3 / scale;
  if (!std::isfinite(g.value.real()) || !std::isfinite(g.value.imag())) {
    g.at_pole = true;
    g.value = Complex(std::numeric_limits<double>::infinity(), 0.0);
  }
  return g;
}

}  // namespace detail

namespace {

void check_omega_k(double omega, double k) {
  if (!(omega > 0.0) || !(k > 0.0) || !std::isfinite(omega) || !std::isfinite(k)) {
    throw DomainError("omega and k must be positive and finite");
  }
}

/// Lowest-mode search that reuses partial-wave solutions on the scan grid
/// across frequencies (they depend on velocity only).
class ModeSearch {
public:
  ModeSearch(const detail::StackSolver& solver, const ModeSearchOptions& options)
      : solver_(solver), options_(options) {
    if (!(options.step > 0.0) || !(options.lower_fraction > 0.0)) {
      throw DomainError("invalid mode-search options");
    }
    lower_ = options.lower_fraction * solver.slowest_shear();
    upper_ = solver.limit_velocity() * (1.0 - 1e-9);
    for (double v = lower_; v < upper_; v += options.step) grid_.push_back(v);
    if (!grid_.empty() && grid_.back() < upper_) grid_.push_back(upper_);
    cache_.resize(grid_.size());
  }

  double find(double frequency) {
    if (!(frequency > 0.0) || !std::isfinite(frequency)) {
      throw DomainError("frequency must be positive");
    }
    const double omega = 2.0 * std::numbers::pi * frequency;
    double min_det = std::numeric_limits<double>::infinity();
    double prev_v = 0.0;
    double prev_g = 0.0;
    double prev_abs = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const detail::StackWaves& w = at(i);
      const double k = omega / w.velocity;
      const GreenFunction gf = solver_.green(w, k);
      if (gf.at_pole) return w.velocity;
      const double g = 1.0 / gf.value.real();
      min_det = std::min(min_det, std::abs(gf.determinant));
      if (i > 0 && (g == 0.0 || std::signbit(g) != std::signbit(prev_g))) {
        const double root = refine(omega, prev_v, w.velocity, prev_g, g);
        const GreenFunction at_root = green_at(omega, root);
        if (at_root.at_pole || std::abs(at_root.value) > std::max(prev_abs, std::abs(gf.value))) {
          return root;
        }
      }
      prev_v = w.velocity;
      prev_g = g;
      prev_abs = std::abs(gf.value);
    }
    std::ostringstream os;
    os << "no surface mode at f = " << frequency << " Hz in the window [" << lower_ << ", "
       << upper_ << "] m/s (minimum |det| = " << min_det << ")";
    throw NoModeError(os.str());
  }

private:
  const detail::StackWaves& at(std::size_t i) {
    if (!cache_[i]) cache_[i] = solver_.waves_perturbed(grid_[i]);
    return *cache_[i];
  }

  GreenFunction green_at(double omega, double v) const {
    const detail::StackWaves w = solver_.waves_perturbed(v);
    return solver_.green(w, omega / w.velocity);
  }

  double refine(double omega, double a, double b, double fa, double fb) const {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    auto f = [&](double v) {
      const GreenFunction g = green_at(omega, v);
      return g.at_pole ? 0.0 : 1.0 / g.value.real();
    };
    const double rel = options_.relative_tolerance;
    auto tol = [rel](double x, double y) { return std::abs(y - x) <= rel * std::abs(x); };
    std::uintmax_t max_iter = 200;
    const auto bracket = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, max_iter);
    return 0.5 * (bracket.first + bracket.second);
  }

  const detail::StackSolver& solver_;
  ModeSearchOptions options_;
  double lower_ = 0.0;
  double upper_ = 0.0;
  std::vector<double> grid_;
  std::vector<std::optional<detail::StackWaves>> cache_;
};

}  // namespace

BoundaryMatrix boundary_matrix(const LayerStack& stack, double omega, double k) {
  check_omega_k(omega, k);
  const detail::StackSolver solver(stack);
  const detail::StackWaves w = solver.waves(omega / k);
  BoundaryMatrix out;
  out.matrix = solver.assemble(w, k, &out.rhs);
  out.determinant = Eigen::PartialPivLU<Eigen::MatrixXcd>(out.matrix).determinant();
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(out.matrix).singularValues();
  out.condition_number = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                                 : std::numeric_limits<double>::infinity();
  return out;
}

GreenFunction surface_green_g33(const LayerStack& stack, double omega, double k) {
  check_omega_k(omega, k);
  const detail::StackSolver solver(stack);
  return solver.green(solver.waves(omega / k), k);
}

double saw_phase_velocity(const LayerStack& stack, double frequency, const ModeSearchOptions& options) {
  const detail::StackSolver solver(stack);
  ModeSearch search(solver, options);
  return search.find(frequency);
}

DispersionResult dispersion_curve(const LayerStack& stack, std::span<const double> frequencies,
                                  const ModeSearchOptions& options) {
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    if (!(frequencies[i] > 0.0) || !std::isfinite(frequencies[i])) {
      throw DomainError("frequency " + std::to_string(i) + " is not positive");
    }
    if (i > 0 && !(frequencies[i] > frequencies[i - 1])) {
      throw DomainError("frequencies must be strictly increasing");
    }
  }
  DispersionResult result;
  if (frequencies.empty()) return result;

  const detail::StackSolver solver(stack);
  ModeSearch search(solver, options);
  std::vector<CurvePoint> points;
  std::ostringstream failures;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    try {
      points.push_back(CurvePoint{frequencies[i], search.find(frequencies[i]), std::nullopt});
    } catch (const NoModeError& e) {
      ++failed;
      failures << "\n  [" << i << "] " << e.what();
    }
  }
  if (failed > 0) {
    throw NoModeError("no surface mode at " + std::to_string(failed) + " of " +
                      std::to_string(frequencies.size()) + " frequencies:" + failures.str());
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (std::abs(points[i].velocity - points[i - 1].velocity) >= 0.05 * points[i - 1].velocity) {
      result.discontinuities.push_back(i);
    }
  }
  result.curve = DispersionCurve(std::move(points));
  return result;
}

double shear_velocity(const IsotropicMaterial& m) {
  m.validate();
  return std::sqrt(m.young_modulus / (2.0 * (1.0 + m.poisson_ratio)) / m.density);
}

double longitudinal_velocity(const IsotropicMaterial& m) {
  m.validate();
  const double nu = m.poisson_ratio;
  const double c11 = m.young_modulus * (1.0 - nu) / ((1.0 + nu) * (1.0 - 2.0 * nu));
  return std::sqrt(c11 / m.density);
}

double rayleigh_velocity_isotropic(const IsotropicMaterial& m) {
  const double vt = shear_velocity(m);
  const double vl = longitudinal_velocity(m);
  const double kappa = (vt * vt) / (vl * vl);
  // x = v^2 / vt^2. The secular function is negative just above the trivial
  // root x = 0 and equals 1 at x = 1, with a single crossing in between.
  auto secular = [kappa](double x) {
    return (2.0 - x) * (2.0 - x) - 4.0 * std::sqrt(1.0 - kappa * x) * std::sqrt(1.0 - x);
  };
  double lo = 0.05;
  double hi = 1.0;
  while (secular(lo) >= 0.0) lo *= 0.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (secular(mid) < 0.0 ? lo : hi) = mid;
  }
  return vt * std::sqrt(0.5 * (lo + hi));
}

}  // namespace sawfilm
