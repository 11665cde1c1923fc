#pragma once

#include "sawfilm/curve.hpp"
#include "sawfilm/dispersion.hpp"
#include "sawfilm/materials.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sawfilm {

enum class Transform { linear, log };

/// Free parameter addressed as "<layer label>.<field>". Fields: thickness,
/// young_modulus, density, poisson_ratio (isotropic layers) and c_ge (the
/// coupled layer only).
struct FreeParameter {
  std::string name;
  double initial = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  Transform transform = Transform::linear;
};

/// Binds E and rho of one isotropic layer to a germanium fraction.
struct MixingCoupling {
  std::string layer;
  MixingEndpoints endpoints;
  double c_ge = 0.0;            // used when c_ge is not free
  double poisson_ratio = 0.22;  // used when poisson_ratio is not free
};

struct IdentifiabilityOptions {
  /// Minimum |R_jj| / |R_00| of the column-pivoted QR of the relative Jacobian.
  double min_relative_sensitivity = 0.05;
  /// Maximum condition number of the leading pivoted columns.
  double max_condition = 1e6;
};

struct FitOptions {
  int max_iterations = 200;
  double fd_relative_step = 1e-4;
  double step_tolerance = 1e-6;
  double cost_tolerance = 1e-10;
  double initial_damping = 1e-3;
  IdentifiabilityOptions identifiability;
  ModeSearchOptions search;
};

struct FitProblem {
  LayerStack stack;
  std::vector<FreeParameter> free;
  std::optional<MixingCoupling> coupling;
  /// Points without sigma are weighted with sigma = 1 m/s.
  DispersionCurve measured;
  FitOptions options;

  /// Throws DomainError for unknown or duplicate names, bad bounds or an
  /// unusable coupling.
  void validate() const;
};

using ParameterValues = std::map<std::string, double>;

ParameterValues initial_values(const FitProblem& problem);

/// Stack with `values` substituted (coupling applied). Throws DomainError on
/// invalid resulting materials.
LayerStack apply_parameters(const FitProblem& problem, const ParameterValues& values);

/// (v_model - v_meas) / sigma per measured point. Throws ModelError naming the
/// failing frequencies when the forward model has no mode.
Eigen::VectorXd residuals(const FitProblem& problem, const ParameterValues& values);

/// (E, rho) of a Si(1-c)Ge(c) film.
struct MixedProperties {
  double young_modulus;
  double density;
};
MixedProperties apply_coupling(double c_ge, const MixingEndpoints& endpoints);

enum class Determination { well_determined, weakly_determined, fixed };
std::string to_string(Determination d);

struct ParameterDiagnostic {
  std::string name;
  Determination status = Determination::well_determined;
  double relative_sensitivity = 0.0;
  double condition = 0.0;
  int pivot = -1;  // position in the pivoted QR, -1 for fixed parameters
};

struct IdentifiabilityReport {
  std::vector<ParameterDiagnostic> parameters;  // free first, then fixed
  Eigen::VectorXd singular_values;              // of the relative weighted Jacobian
  double condition_number = 0.0;
  std::vector<std::string> recommend_fixing;
  bool all_determined() const { return recommend_fixing.empty(); }
};

/// Column-pivoted QR of the weighted Jacobian with columns scaled to relative
/// parameter changes. Invariant under a common rescaling of all sigmas.
IdentifiabilityReport identifiability_report(const FitProblem& problem,
                                             const ParameterValues& values);

enum class FitStatus { converged, iteration_limit, stalled };
std::string to_string(FitStatus s);

struct FitResult {
  std::vector<std::string> names;
  ParameterValues estimates;
  ParameterValues sigmas;       // sqrt of the covariance diagonal
  Eigen::MatrixXd covariance;   // (J^T W J)^+ in the order of `names`
  Eigen::VectorXd residuals;    // weighted, at the estimates
  DispersionCurve model;        // forward model at the measured frequencies
  double residual_rms = 0.0;    // m/s, unweighted
  double cost = 0.0;            // 0.5 * |weighted residuals|^2
  double gradient_norm_initial = 0.0;
  double gradient_norm_final = 0.0;
  int n_iterations = 0;
  FitStatus status = FitStatus::converged;
  std::vector<std::string> at_bound;
  IdentifiabilityReport identifiability;

  bool converged() const { return status == FitStatus::converged; }
};

/// Levenberg-damped Gauss-Newton with central-difference Jacobians and box
/// bounds by clamping. Never throws for non-convergence: the best point seen is
/// returned with the status set.
FitResult fit_parameters(const FitProblem& problem);

}  // namespace sawfilm
