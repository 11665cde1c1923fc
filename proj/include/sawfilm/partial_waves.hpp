#pragma once

#include "sawfilm/materials.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>

namespace sawfilm {

using Complex = std::complex<double>;
using Vector3cd = Eigen::Vector3cd;
using Vector6cd = Eigen::Matrix<Complex, 6, 1>;

enum class WaveKind {
  decaying,          // Im p > 0: amplitude falls with depth
  growing,           // Im p < 0
  propagating_down,  // real p, energy flux into the solid
  propagating_up,
};

const char* to_string(WaveKind kind);

/// One depth-exponential solution u = a exp(i k (x1 + p x3 - v t)), x3 into
/// the solid. `field` holds (a, b / stiffness_scale) normalized to unit length,
/// where the traction on an x3 plane is i k b.
struct PartialWave {
  Complex eigenvalue;  // p, the ratio of vertical to horizontal wavenumber
  Vector6cd field;
  WaveKind kind = WaveKind::decaying;

  Eigen::Ref<const Vector3cd> displacement() const { return field.head<3>(); }
  Eigen::Ref<const Vector3cd> traction() const { return field.tail<3>(); }
  /// Vertical slowness p / v (s/m).
  Complex vertical_slowness(double velocity) const { return eigenvalue / velocity; }
};

/// Stiffness of one material sliced for the sagittal boundary-value problem.
class Medium {
public:
  /// `stiffness_scale` normalizes tractions; all media of one stack share it.
  Medium(const ElasticTensor& tensor, double density, double stiffness_scale);

  const ElasticTensor& tensor() const { return tensor_; }
  double density() const { return density_; }
  double stiffness_scale() const { return scale_; }

  /// Six-dimensional first-order operator L(v): L r = p r with r = (a, b / scale).
  Matrix6d stroh_operator(double velocity) const;
  /// Christoffel matrix Gamma(p) = Q - rho v^2 + p (R + R^T) + p^2 T.
  Eigen::Matrix3cd christoffel(Complex p, double velocity) const;
  /// b = (R^T + p T) a.
  Vector3cd traction_vector(const Vector3cd& a, Complex p) const;

  /// Bulk velocities along x1, ascending, with their polarizations as columns.
  const Eigen::Vector3d& bulk_velocities() const { return bulk_velocity_; }
  const Eigen::Matrix3d& bulk_polarizations() const { return bulk_polarization_; }
  /// True when x2 -> -x2 is a symmetry, so shear-horizontal motion decouples.
  bool sagittal_mirror() const { return mirror_; }

  bool same_as(const Medium& other) const {
    return density_ == other.density_ && tensor_ == other.tensor_;
  }

private:
  ElasticTensor tensor_;
  double density_;
  double scale_;
  Eigen::Matrix3d q_, r_, t_, t_inv_;
  Eigen::Vector3d bulk_velocity_;
  Eigen::Matrix3d bulk_polarization_;
  bool mirror_ = false;
};

/// All six partial waves of a medium at one phase velocity.
struct PartialWaveSet {
  double velocity = 0.0;  // omega / k
  Matrix6d stroh;         // L(v) in the field normalization
  std::array<PartialWave, 6> waves;

  /// ||L r - p r|| / ||r|| for wave i.
  double residual(std::size_t i) const;
};

/// Eigenvalues within this relative distance are treated as one repeated root.
inline constexpr double kClusterTolerance = 1e-8;

/// Waves ordered by imaginary part, then real part. Repeated roots get an
/// orthonormal basis of the Christoffel null space. Throws DegeneratePointError
/// when a repeated root is defective (e.g. exactly at a bulk velocity).
PartialWaveSet partial_waves(const Medium& medium, double velocity);
PartialWaveSet partial_waves(const ElasticTensor& tensor, double density, double omega, double k);

}  // namespace sawfilm
