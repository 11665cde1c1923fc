#include "sawfilm/inversion.hpp"

#include "sawfilm/errors.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace sawfilm {

namespace {

enum class Field { thickness, young_modulus, density, poisson_ratio, c_ge };

struct Target {
  std::size_t layer = 0;
  Field field = Field::thickness;
};

std::string layer_key(const LayerStack& stack, std::size_t i) {
  const std::string& label = stack.layers[i].label;
  return label.empty() ? "layer" + std::to_string(i + 1) : label;
}

std::optional<std::size_t> find_layer(const LayerStack& stack, const std::string& key) {
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    if (layer_key(stack, i) != key) continue;
    if (found) throw DomainError("layer label '" + key + "' is not unique");
    found = i;
  }
  return found;
}

Target resolve(const FitProblem& p, const std::string& name) {
  const auto dot = name.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == name.size()) {
    throw DomainError("parameter '" + name + "' is not of the form <layer>.<field>");
  }
  const std::string key = name.substr(0, dot);
  const std::string field = name.substr(dot + 1);
  const auto layer = find_layer(p.stack, key);
  if (!layer) throw DomainError("parameter '" + name + "': no layer '" + key + "'");

  Target t{*layer, Field::thickness};
  if (field == "thickness") t.field = Field::thickness;
  else if (field == "young_modulus") t.field = Field::young_modulus;
  else if (field == "density") t.field = Field::density;
  else if (field == "poisson_ratio") t.field = Field::poisson_ratio;
  else if (field == "c_ge") t.field = Field::c_ge;
  else throw DomainError("parameter '" + name + "': unknown field '" + field + "'");

  const bool coupled = p.coupling && p.coupling->layer == key;
  if (t.field == Field::c_ge && !coupled) {
    throw DomainError("parameter '" + name + "' needs a mixing coupling on layer '" + key + "'");
  }
  if (coupled && (t.field == Field::young_modulus || t.field == Field::density)) {
    throw DomainError("parameter '" + name + "' is set by the mixing coupling");
  }
  if (t.field != Field::thickness &&
      !std::holds_alternative<IsotropicMaterial>(p.stack.layers[*layer].material)) {
    throw DomainError("parameter '" + name + "' requires an isotropic layer");
  }
  return t;
}

// Internal coordinate u of a physical value x.
double to_internal(const FreeParameter& fp, double x) {
  if (fp.transform == Transform::log) return std::log(x);
  return x / std::max(std::abs(fp.initial), std::numeric_limits<double>::min());
}

double to_physical(const FreeParameter& fp, double u) {
  if (fp.transform == Transform::log) return std::exp(u);
  return u * std::max(std::abs(fp.initial), std::numeric_limits<double>::min());
}

// dx/du at x.
double internal_scale(const FreeParameter& fp, double x) {
  if (fp.transform == Transform::log) return x;
  return std::max(std::abs(fp.initial), std::numeric_limits<double>::min());
}

// Size used for relative steps and relative sensitivities.
double magnitude(const FreeParameter& fp, double x) {
  if (x != 0.0) return std::abs(x);
  return fp.upper - fp.lower;
}

Eigen::VectorXd sigmas_of(const DispersionCurve& c) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) s(static_cast<Eigen::Index>(i)) = c[i].sigma.value_or(1.0);
  return s;
}

struct Evaluator {
  const FitProblem& problem;
  std::vector<double> frequencies;
  Eigen::VectorXd measured;
  Eigen::VectorXd sigma;

  explicit Evaluator(const FitProblem& p)
      : problem(p), frequencies(p.measured.frequencies()), sigma(sigmas_of(p.measured)) {
    const auto v = p.measured.velocities();
    measured = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  Eigen::VectorXd model(const ParameterValues& values) const {
    const LayerStack stack = apply_parameters(problem, values);
    DispersionResult r;
    try {
      r = dispersion_curve(stack, frequencies, problem.options.search);
    } catch (const NoModeError& e) {
      throw ModelError(std::string("residual evaluation failed: ") + e.what());
    }
    const auto v = r.curve.velocities();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  Eigen::VectorXd weighted(const Eigen::VectorXd& model_v) const {
    return ((model_v - measured).array() / sigma.array()).matrix();
  }
};

ParameterValues with_values(const FitProblem& p, const Eigen::VectorXd& x) {
  ParameterValues values;
  for (std::size_t i = 0; i < p.free.size(); ++i) values[p.free[i].name] = x(static_cast<Eigen::Index>(i));
  return values;
}

// Weighted Jacobian d r / d x (physical units) by central differences,
// clamped to the bounds.
Eigen::MatrixXd jacobian(const FitProblem& p, const Evaluator& ev, const Eigen::VectorXd& x) {
  const auto m = static_cast<Eigen::Index>(ev.frequencies.size());
  const auto n = static_cast<Eigen::Index>(p.free.size());
  Eigen::MatrixXd J(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const FreeParameter& fp = p.free[static_cast<std::size_t>(j)];
    const double h = p.options.fd_relative_step * magnitude(fp, x(j));
    Eigen::VectorXd xp = x, xm = x;
    xp(j) = std::min(x(j) + h, fp.upper);
    xm(j) = std::max(x(j) - h, fp.lower);
    const Eigen::VectorXd vp = ev.model(with_values(p, xp));
    const Eigen::VectorXd vm = ev.model(with_values(p, xm));
    J.col(j) = ((vp - vm).array() / ev.sigma.array()).matrix() / (xp(j) - xm(j));
  }
  return J;
}

std::vector<std::string> fixed_names(const FitProblem& p) {
  std::set<std::string> free;
  for (const auto& fp : p.free) free.insert(fp.name);
  std::vector<std::string> out;
  auto add = [&](const std::string& n) {
    if (!free.count(n)) out.push_back(n);
  };
  for (std::size_t i = 0; i < p.stack.layers.size(); ++i) {
    const std::string key = layer_key(p.stack, i);
    add(key + ".thickness");
    if (!std::holds_alternative<IsotropicMaterial>(p.stack.layers[i].material)) continue;
    if (p.coupling && p.coupling->layer == key) {
      add(key + ".c_ge");
    } else {
      add(key + ".young_modulus");
      add(key + ".density");
    }
    add(key + ".poisson_ratio");
  }
  return out;
}

IdentifiabilityReport report_from_jacobian(const FitProblem& p, const Eigen::VectorXd& x,
                                           const Eigen::MatrixXd& J) {
  IdentifiabilityReport report;
  const auto n = J.cols();
  Eigen::MatrixXd rel = J;
  for (Eigen::Index j = 0; j < n; ++j) rel.col(j) *= magnitude(p.free[static_cast<std::size_t>(j)], x(j));

  if (n > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rel);
    report.singular_values = svd.singularValues();
    const double smin = report.singular_values(report.singular_values.size() - 1);
    report.condition_number = smin > 0.0 ? report.singular_values(0) / smin
                                         : std::numeric_limits<double>::infinity();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rel);
    const Eigen::MatrixXd R = qr.matrixR().triangularView<Eigen::Upper>();
    const auto& perm = qr.colsPermutation().indices();
    const double r00 = std::abs(R(0, 0));
    std::vector<ParameterDiagnostic> diag(static_cast<std::size_t>(n));
    const auto& opt = p.options.identifiability;
    for (Eigen::Index k = 0; k < n && k < R.rows(); ++k) {
      const Eigen::Index j = perm(k);
      ParameterDiagnostic& d = diag[static_cast<std::size_t>(j)];
      d.name = p.free[static_cast<std::size_t>(j)].name;
      d.pivot = static_cast<int>(k);
      d.relative_sensitivity = r00 > 0.0 ? std::abs(R(k, k)) / r00 : 0.0;
      Eigen::MatrixXd lead(rel.rows(), k + 1);
      for (Eigen::Index c = 0; c <= k; ++c) lead.col(c) = rel.col(perm(c));
      Eigen::JacobiSVD<Eigen::MatrixXd> s(lead);
      const double lo = s.singularValues()(k);
      d.condition = lo > 0.0 ? s.singularValues()(0) / lo : std::numeric_limits<double>::infinity();
      const bool weak = !(d.relative_sensitivity >= opt.min_relative_sensitivity) ||
                        !(d.condition <= opt.max_condition) || r00 == 0.0;
      d.status = weak ? Determination::weakly_determined : Determination::well_determined;
    }
    // Fewer residuals than parameters: the trailing pivots carry no information.
    for (Eigen::Index k = R.rows(); k < n; ++k) {
      ParameterDiagnostic& d = diag[static_cast<std::size_t>(perm(k))];
      d.name = p.free[static_cast<std::size_t>(perm(k))].name;
      d.pivot = static_cast<int>(k);
      d.condition = std::numeric_limits<double>::infinity();
      d.status = Determination::weakly_determined;
    }
    for (auto& d : diag) {
      if (d.status == Determination::weakly_determined) report.recommend_fixing.push_back(d.name);
      report.parameters.push_back(std::move(d));
    }
  }
  for (const auto& name : fixed_names(p)) {
    report.parameters.push_back(ParameterDiagnostic{name, Determination::fixed, 0.0, 0.0, -1});
  }
  return report;
}

Eigen::MatrixXd pseudo_inverse_normal(const Eigen::MatrixXd& J) {
  const auto n = J.cols();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-12 * s(0)) inv(i) = 1.0 / (s(i) * s(i));
  }
  const Eigen::MatrixXd& V = svd.matrixV();
  Eigen::MatrixXd cov = V * inv.asDiagonal() * V.transpose();
  return 0.5 * (cov + cov.transpose());
}

}  // namespace

void FitProblem::validate() const {
  stack.validate();
  if (coupling) {
    const auto layer = find_layer(stack, coupling->layer);
    if (!layer) throw DomainError("coupling: no layer '" + coupling->layer + "'");
    if (!std::holds_alternative<IsotropicMaterial>(stack.layers[*layer].material)) {
      throw DomainError("coupling: layer '" + coupling->layer + "' is not isotropic");
    }
    if (!(coupling->c_ge >= 0.0 && coupling->c_ge <= 1.0)) {
      throw DomainError("coupling: c_ge must lie in [0, 1]");
    }
  }
  if (free.empty()) throw DomainError("no free parameters");
  std::set<std::string> seen;
  for (const FreeParameter& fp : free) {
    if (!seen.insert(fp.name).second) throw DomainError("parameter '" + fp.name + "' appears twice");
    const Target t = resolve(*this, fp.name);
    if (!(fp.lower < fp.upper)) throw DomainError("parameter '" + fp.name + "': bounds not ordered");
    if (!(fp.initial >= fp.lower && fp.initial <= fp.upper)) {
      throw DomainError("parameter '" + fp.name + "': initial value outside bounds");
    }
    if (fp.transform == Transform::log && !(fp.lower > 0.0)) {
      throw DomainError("parameter '" + fp.name + "': log transform needs a positive lower bound");
    }
    if (fp.transform == Transform::linear && fp.initial == 0.0) {
      throw DomainError("parameter '" + fp.name + "': linear transform needs a nonzero initial value");
    }
    if (t.field == Field::c_ge && (fp.lower < 0.0 || fp.upper > 1.0)) {
      throw DomainError("parameter '" + fp.name + "': bounds must lie in [0, 1]");
    }
  }
  for (const CurvePoint& pt : measured) {
    if (pt.sigma && !(*pt.sigma > 0.0)) throw DomainError("measured curve has a non-positive sigma");
  }
  if (measured.size() < free.size()) {
    throw DomainError("fewer measured points than free parameters");
  }
}

ParameterValues initial_values(const FitProblem& problem) {
  ParameterValues v;
  for (const auto& fp : problem.free) v[fp.name] = fp.initial;
  return v;
}

MixedProperties apply_coupling(double c_ge, const MixingEndpoints& e) {
  return {mix_young_modulus(c_ge, e.e_si, e.e_ge), mix_density(c_ge, e.rho_si, e.rho_ge)};
}

LayerStack apply_parameters(const FitProblem& problem, const ParameterValues& values) {
  LayerStack stack = problem.stack;
  std::optional<std::size_t> coupled;
  double c_ge = 0.0;
  double nu = 0.0;
  if (problem.coupling) {
    coupled = find_layer(stack, problem.coupling->layer);
    if (!coupled) throw DomainError("coupling: no layer '" + problem.coupling->layer + "'");
    c_ge = problem.coupling->c_ge;
    nu = problem.coupling->poisson_ratio;
  }
  for (const auto& [name, value] : values) {
    const Target t = resolve(problem, name);
    Layer& layer = stack.layers[t.layer];
    if (coupled && t.layer == *coupled) {
      if (t.field == Field::c_ge) { c_ge = value; continue; }
      if (t.field == Field::poisson_ratio) { nu = value; continue; }
    }
    if (t.field == Field::thickness) {
      layer.thickness = value;
      continue;
    }
    auto& iso = std::get<IsotropicMaterial>(layer.material);
    if (t.field == Field::young_modulus) iso.young_modulus = value;
    else if (t.field == Field::density) iso.density = value;
    else if (t.field == Field::poisson_ratio) iso.poisson_ratio = value;
  }
  if (coupled) {
    const MixedProperties mp = apply_coupling(c_ge, problem.coupling->endpoints);
    stack.layers[*coupled].material = IsotropicMaterial{mp.young_modulus, nu, mp.density};
  }
  stack.validate();
  return stack;
}

Eigen::VectorXd residuals(const FitProblem& problem, const ParameterValues& values) {
  for (const auto& fp : problem.free) {
    const auto it = values.find(fp.name);
    if (it != values.end() && !(it->second >= fp.lower && it->second <= fp.upper)) {
      throw DomainError("parameter '" + fp.name + "' outside its bounds");
    }
  }
  const Evaluator ev(problem);
  return ev.weighted(ev.model(values));
}

std::string to_string(Determination d) {
  switch (d) {
    case Determination::well_determined: return "well-determined";
    case Determination::weakly_determined: return "weakly-determined";
    case Determination::fixed: return "fixed";
  }
  return "?";
}

std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::iteration_limit: return "iteration limit reached";
    case FitStatus::stalled: return "stalled";
  }
  return "?";
}

IdentifiabilityReport identifiability_report(const FitProblem& problem,
                                             const ParameterValues& values) {
  problem.validate();
  const Evaluator ev(problem);
  Eigen::VectorXd x(static_cast<Eigen::Index>(problem.free.size()));
  for (std::size_t i = 0; i < problem.free.size(); ++i) {
    const auto it = values.find(problem.free[i].name);
    x(static_cast<Eigen::Index>(i)) = it != values.end() ? it->second : problem.free[i].initial;
  }
  return report_from_jacobian(problem, x, jacobian(problem, ev, x));
}

FitResult fit_parameters(const FitProblem& problem) {
  problem.validate();
  const FitOptions& opt = problem.options;
  const Evaluator ev(problem);
  const auto n = static_cast<Eigen::Index>(problem.free.size());

  Eigen::VectorXd x(n), lo(n), hi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const FreeParameter& fp = problem.free[static_cast<std::size_t>(i)];
    x(i) = fp.initial;
    lo(i) = to_internal(fp, fp.lower);
    hi(i) = to_internal(fp, fp.upper);
  }
  auto physical = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const FreeParameter& fp = problem.free[static_cast<std::size_t>(i)];
      out(i) = std::clamp(to_physical(fp, u(i)), fp.lower, fp.upper);
    }
    return out;
  };
  auto internal = [&](const Eigen::VectorXd& xp) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = to_internal(problem.free[static_cast<std::size_t>(i)], xp(i));
    return out;
  };
  auto internal_jacobian = [&](const Eigen::MatrixXd& Jx, const Eigen::VectorXd& xp) {
    Eigen::MatrixXd Ju = Jx;
    for (Eigen::Index i = 0; i < n; ++i) Ju.col(i) *= internal_scale(problem.free[static_cast<std::size_t>(i)], xp(i));
    return Ju;
  };

  Eigen::VectorXd model = ev.model(with_values(problem, x));
  Eigen::VectorXd r = ev.weighted(model);
  double cost = 0.5 * r.squaredNorm();
  Eigen::MatrixXd Jx = jacobian(problem, ev, x);
  Eigen::MatrixXd Ju = internal_jacobian(Jx, x);
  Eigen::VectorXd g = Ju.transpose() * r;

  FitResult result;
  result.gradient_norm_initial = n > 0 ? g.lpNorm<Eigen::Infinity>() : 0.0;
  result.status = FitStatus::iteration_limit;
  double lambda = opt.initial_damping;
  int iter = 0;

  if (n == 0 || cost == 0.0) result.status = FitStatus::converged;
  while (result.status == FitStatus::iteration_limit && iter < opt.max_iterations) {
    ++iter;
    const Eigen::MatrixXd A = Ju.transpose() * Ju;
    const double dmax = A.diagonal().maxCoeff();
    Eigen::MatrixXd M = A;
    for (Eigen::Index i = 0; i < n; ++i) M(i, i) += lambda * std::max(A(i, i), 1e-12 * dmax);
    const Eigen::VectorXd delta = M.ldlt().solve(-g);
    const Eigen::VectorXd u = internal(x);
    const Eigen::VectorXd u_new = (u + delta).cwiseMax(lo).cwiseMin(hi);
    const Eigen::VectorXd x_new = physical(u_new);

    double rel_step = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      rel_step = std::max(rel_step, std::abs(x_new(i) - x(i)) /
                                        magnitude(problem.free[static_cast<std::size_t>(i)], x(i)));
    }

    double cost_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd model_new, r_new;
    if (delta.allFinite() && rel_step > 0.0) {
      try {
        model_new = ev.model(with_values(problem, x_new));
        r_new = ev.weighted(model_new);
        cost_new = 0.5 * r_new.squaredNorm();
      } catch (const ModelError&) {
      } catch (const DomainError&) {
      }
    }

    if (cost_new < cost) {
      const double drop = (cost - cost_new) / cost;
      x = x_new;
      model = model_new;
      r = r_new;
      cost = cost_new;
      lambda = std::max(lambda / 10.0, 1e-12);
      Jx = jacobian(problem, ev, x);
      Ju = internal_jacobian(Jx, x);
      g = Ju.transpose() * r;
      if (rel_step < opt.step_tolerance || drop < opt.cost_tolerance || cost == 0.0) {
        result.status = FitStatus::converged;
      }
    } else if (rel_step < opt.step_tolerance) {
      // Even the damped step is below tolerance: the noise floor is reached.
      result.status = FitStatus::converged;
    } else {
      lambda *= 10.0;
      if (lambda > 1e16) result.status = FitStatus::stalled;
    }
  }

  result.n_iterations = iter;
  result.gradient_norm_final = n > 0 ? g.lpNorm<Eigen::Infinity>() : 0.0;
  result.cost = cost;
  result.residuals = r;
  result.covariance = pseudo_inverse_normal(Jx);
  for (Eigen::Index i = 0; i < n; ++i) {
    const FreeParameter& fp = problem.free[static_cast<std::size_t>(i)];
    result.names.push_back(fp.name);
    result.estimates[fp.name] = x(i);
    result.sigmas[fp.name] = std::sqrt(std::max(result.covariance(i, i), 0.0));
    const double tol = 1e-12 * magnitude(fp, x(i));
    if (x(i) - fp.lower <= tol || fp.upper - x(i) <= tol) result.at_bound.push_back(fp.name);
  }
  std::vector<CurvePoint> pts;
  double sq = 0.0;
  for (std::size_t i = 0; i < ev.frequencies.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    pts.push_back(CurvePoint{ev.frequencies[i], model(k), std::nullopt});
    sq += (model(k) - ev.measured(k)) * (model(k) - ev.measured(k));
  }
  result.model = DispersionCurve(std::move(pts));
  result.residual_rms = ev.frequencies.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(ev.frequencies.size()));
  result.identifiability = report_from_jacobian(problem, x, Jx);
  return result;
}

}  // namespace sawfilm
