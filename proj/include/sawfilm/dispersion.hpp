#pragma once

#include "sawfilm/curve.hpp"
#include "sawfilm/materials.hpp"
#include "sawfilm/partial_waves.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace sawfilm {

/// Global boundary system at one (omega, k): free-surface traction rows with
/// the unit t33 source on the right-hand side, then six continuity rows per
/// interface. Columns: six partial waves per layer, then the three substrate
/// waves that decay (or radiate) into the depth.
struct BoundaryMatrix {
  Eigen::MatrixXcd matrix;
  Eigen::VectorXcd rhs;
  Complex determinant;
  double condition_number = 0.0;  // 2-norm, from the singular values
};

struct GreenFunction {
  /// k u3 / t33 at the surface (1/Pa). Real for lossless stacks.
  Complex value;
  /// Set when the boundary system is singular: (omega, k) sits on a mode.
  bool at_pole = false;
  /// Determinant of the boundary system (phase depends on wave normalization).
  Complex determinant;
};

struct ModeSearchOptions {
  double step = 5.0;              // m/s, scan spacing
  double lower_fraction = 0.5;    // window starts at this fraction of the slowest shear speed
  double relative_tolerance = 1e-13;  // root refinement, |dv| / v
};

namespace detail {

/// Shared per-velocity partial-wave solutions for every distinct medium in a stack.
struct StackWaves {
  double velocity = 0.0;
  std::vector<PartialWaveSet> media;
  std::array<int, 3> substrate_down{};
};

/// Precomputed media of a stack; evaluates the boundary system at (v, k).
class StackSolver {
public:
  explicit StackSolver(const LayerStack& stack);

  std::size_t layer_count() const { return thickness_.size(); }
  std::size_t dimension() const { return 6 * thickness_.size() + 3; }

  /// Throws DegeneratePointError at defective points, ModelError when the
  /// substrate does not carry exactly three downgoing waves.
  StackWaves waves(double velocity) const;
  /// waves(), retrying at v (1 + 1e-9)^n (k perturbed by one part in 1e9).
  StackWaves waves_perturbed(double velocity) const;

  Eigen::MatrixXcd assemble(const StackWaves& w, double k, Eigen::VectorXcd* rhs) const;
  GreenFunction green(const StackWaves& w, double k) const;

  /// Scan window for the lowest surface mode.
  double slowest_shear() const { return slowest_shear_; }
  double limit_velocity() const { return limit_velocity_; }

private:
  std::vector<Medium> media_;
  std::vector<int> layer_medium_;
  int substrate_medium_ = 0;
  std::vector<double> thickness_;
  double slowest_shear_ = 0.0;
  double limit_velocity_ = 0.0;
};

}  // namespace detail

BoundaryMatrix boundary_matrix(const LayerStack& stack, double omega, double k);
GreenFunction surface_green_g33(const LayerStack& stack, double omega, double k);

/// Velocity of the lowest surface mode at `frequency` (Hz). Throws NoModeError.
double saw_phase_velocity(const LayerStack& stack, double frequency,
                          const ModeSearchOptions& options = {});

struct DispersionResult {
  DispersionCurve curve;
  /// Indices i where |v_i - v_{i-1}| / v_{i-1} >= 5 %.
  std::vector<std::size_t> discontinuities;
};

/// Lowest mode at each frequency (strictly increasing, positive). Failing
/// points are collected and reported together in one NoModeError.
DispersionResult dispersion_curve(const LayerStack& stack, std::span<const double> frequencies,
                                  const ModeSearchOptions& options = {});

/// Root of (2 - v^2/vt^2)^2 = 4 sqrt(1 - v^2/vl^2) sqrt(1 - v^2/vt^2) below vt.
double rayleigh_velocity_isotropic(const IsotropicMaterial& m);

/// Shear and longitudinal bulk speeds of an isotropic material.
double shear_velocity(const IsotropicMaterial& m);
double longitudinal_velocity(const IsotropicMaterial& m);

}  // namespace sawfilm
