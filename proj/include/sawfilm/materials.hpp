#pragma once

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

namespace sawfilm {

using Matrix6d = Eigen::Matrix<double, 6, 6>;

struct IsotropicMaterial {
  double young_modulus = 0.0;  // Pa
  double poisson_ratio = 0.0;
  double density = 0.0;  // kg/m^3

  void validate() const;
};

// Constants in the crystal axes.
struct CubicMaterial {
  double c11 = 0.0;  // Pa
  double c12 = 0.0;
  double c44 = 0.0;
  double density = 0.0;  // kg/m^3

  void validate() const;
};

using ElasticMaterial = std::variant<IsotropicMaterial, CubicMaterial>;

double density_of(const ElasticMaterial& m);
void validate(const ElasticMaterial& m);

/// Symmetric positive-definite 6x6 Voigt stiffness, Pa.
class ElasticTensor {
public:
  /// Throws DomainError unless `voigt` is symmetric and positive definite.
  explicit ElasticTensor(const Matrix6d& voigt);

  const Matrix6d& voigt() const { return voigt_; }
  double voigt(int i, int j) const { return voigt_(i, j); }

  /// c_ijkl with 0-based tensor indices.
  double operator()(int i, int j, int k, int l) const;

  /// Tensor in the frame whose axes are the rows of `rotation`
  /// (rotation(i, j) = e'_i . e_j).
  ElasticTensor rotated(const Eigen::Matrix3d& rotation) const;

  bool operator==(const ElasticTensor& other) const { return voigt_ == other.voigt_; }

private:
  Matrix6d voigt_;
};

/// Voigt index of the symmetric tensor pair (i, j), 0-based.
constexpr int voigt_index(int i, int j) { return i == j ? i : 6 - i - j; }

bool is_positive_definite(const Matrix6d& voigt);

ElasticTensor stiffness_from_isotropic(const IsotropicMaterial& m);
ElasticTensor stiffness_from_cubic(const CubicMaterial& m);
ElasticTensor stiffness_from_cubic(const CubicMaterial& m, const Eigen::Matrix3d& rotation);

/// Inverse of the Lame conversion: (E, nu) from c11 = lambda + 2 mu, c12 = lambda.
IsotropicMaterial isotropic_from_stiffness(double c11, double c12, double density);

// Linear Si/Ge mixing in the germanium fraction c_ge in [0, 1].
double mix_young_modulus(double c_ge, double e_si, double e_ge);
double mix_density(double c_ge, double rho_si, double rho_ge);

struct MixingEndpoints {
  double e_si = 160e9;
  double e_ge = 132e9;
  double rho_si = 2330.0;
  double rho_ge = 5320.0;
};

/// Propagation frame: x3 along the surface normal (into the solid), x1 along
/// the propagation direction. Both are given in crystal axes.
struct Geometry {
  Eigen::Vector3d surface_normal{0.0, 0.0, 1.0};
  Eigen::Vector3d propagation{1.0, 1.0, 0.0};

  void validate() const;
  /// Rows are the frame axes x1, x2, x3 expressed in crystal coordinates.
  Eigen::Matrix3d rotation() const;
};

struct Layer {
  std::string label;
  ElasticMaterial material;
  double thickness = 0.0;  // m
};

/// Finite layers (surface first) over a half-space substrate.
struct LayerStack {
  std::vector<Layer> layers;
  ElasticMaterial substrate;
  Geometry geometry;

  void validate() const;
};

/// Stiffness of `m` expressed in the propagation frame of `g`.
ElasticTensor tensor_in_frame(const ElasticMaterial& m, const Geometry& g);

}  // namespace sawfilm
