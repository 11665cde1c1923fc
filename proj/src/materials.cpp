#include "sawfilm/materials.hpp"

#include "sawfilm/errors.hpp"

#include <cmath>
#include <sstream>

namespace sawfilm {

void IsotropicMaterial::validate() const {
  if (!(young_modulus > 0.0) || !std::isfinite(young_modulus)) {
    throw DomainError("Young's modulus must be positive");
  }
  if (!(density > 0.0) || !std::isfinite(density)) {
    throw DomainError("density must be positive");
  }
  if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5)) {
    std::ostringstream os;
    os << "Poisson ratio " << poisson_ratio << " outside (-1, 0.5)";
    throw DomainError(os.str());
  }
}

void CubicMaterial::validate() const {
  if (!(density > 0.0) || !std::isfinite(density)) {
    throw DomainError("density must be positive");
  }
  if (!(c44 > 0.0) || !(c11 > std::abs(c12)) || !(c11 + 2.0 * c12 > 0.0)) {
    throw DomainError("cubic constants violate elastic stability");
  }
}

double density_of(const ElasticMaterial& m) {
  return std::visit([](const auto& x) { return x.density; }, m);
}

void validate(const ElasticMaterial& m) {
  std::visit([](const auto& x) { x.validate(); }, m);
}

bool is_positive_definite(const Matrix6d& voigt) {
  Eigen::LLT<Matrix6d> llt(voigt);
  return llt.info() == Eigen::Success;
}

ElasticTensor::ElasticTensor(const Matrix6d& voigt) : voigt_(voigt) {
  const double scale = voigt.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !voigt.allFinite()) {
    throw DomainError("stiffness matrix is zero or non-finite");
  }
  if ((voigt - voigt.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError("stiffness matrix is not symmetric");
  }
  voigt_ = 0.5 * (voigt + voigt.transpose());
  if (!is_positive_definite(voigt_)) {
    throw DomainError("stiffness matrix is not positive definite");
  }
}

double ElasticTensor::operator()(int i, int j, int k, int l) const {
  return voigt_(voigt_index(i, j), voigt_index(k, l));
}

ElasticTensor ElasticTensor::rotated(const Eigen::Matrix3d& a) const {
  // Bond transformation: C' = M C M^T.
  static constexpr int kPair[6][2] = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
  Matrix6d bond;
  for (int row = 0; row < 6; ++row) {
    const int i = kPair[row][0];
    const int j = kPair[row][1];
    for (int col = 0; col < 6; ++col) {
      const int k = kPair[col][0];
      const int l = kPair[col][1];
      bond(row, col) = a(i, k) * a(j, l) + (k != l ? a(i, l) * a(j, k) : 0.0);
    }
  }
  return ElasticTensor(bond * voigt_ * bond.transpose());
}

ElasticTensor stiffness_from_isotropic(const IsotropicMaterial& m) {
  m.validate();
  const double e = m.young_modulus;
  const double nu = m.poisson_ratio;
  const double lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = e / (2.0 * (1.0 + nu));
  Matrix6d c = Matrix6d::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) c(i, j) = lambda;
    c(i, i) = lambda + 2.0 * mu;
    c(i + 3, i + 3) = mu;
  }
  return ElasticTensor(c);
}

ElasticTensor stiffness_from_cubic(const CubicMaterial& m) {
  m.validate();
  Matrix6d c = Matrix6d::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) c(i, j) = m.c12;
    c(i, i) = m.c11;
    c(i + 3, i + 3) = m.c44;
  }
  return ElasticTensor(c);
}

ElasticTensor stiffness_from_cubic(const CubicMaterial& m, const Eigen::Matrix3d& rotation) {
  return stiffness_from_cubic(m).rotated(rotation);
}

IsotropicMaterial isotropic_from_stiffness(double c11, double c12, double density) {
  IsotropicMaterial m;
  m.poisson_ratio = c12 / (c11 + c12);
  m.young_modulus = (c11 - c12) * (c11 + 2.0 * c12) / (c11 + c12);
  m.density = density;
  m.validate();
  return m;
}

namespace {

void check_fraction(double c_ge) {
  if (!(c_ge >= 0.0 && c_ge <= 1.0)) {
    std::ostringstream os;
    os << "germanium fraction " << c_ge << " outside [0, 1]";
    throw DomainError(os.str());
  }
}

}  // namespace

double mix_young_modulus(double c_ge, double e_si, double e_ge) {
  check_fraction(c_ge);
  if (!(e_si > 0.0) || !(e_ge > 0.0)) throw DomainError("mixing endpoints must be positive");
  return e_si - c_ge * (e_si - e_ge);
}

double mix_density(double c_ge, double rho_si, double rho_ge) {
  check_fraction(c_ge);
  if (!(rho_si > 0.0) || !(rho_ge > 0.0)) throw DomainError("mixing endpoints must be positive");
  return rho_si + c_ge * (rho_ge - rho_si);
}

void Geometry::validate() const {
  const double n = surface_normal.norm();
  const double p = propagation.norm();
  if (!(n > 0.0) || !(p > 0.0)) throw DomainError("geometry axes must be non-zero");
  if (std::abs(surface_normal.dot(propagation)) > 1e-12 * n * p) {
    throw DomainError("propagation direction is not orthogonal to the surface normal");
  }
}

Eigen::Matrix3d Geometry::rotation() const {
  validate();
  const Eigen::Vector3d x3 = surface_normal.normalized();
  const Eigen::Vector3d x1 = propagation.normalized();
  const Eigen::Vector3d x2 = x3.cross(x1);
  Eigen::Matrix3d a;
  a.row(0) = x1.transpose();
  a.row(1) = x2.transpose();
  a.row(2) = x3.transpose();
  return a;
}

void LayerStack::validate() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& layer = layers[i];
    if (!(layer.thickness > 0.0) || !std::isfinite(layer.thickness)) {
      throw DomainError("layer " + std::to_string(i) + " (" + layer.label +
                        ") has non-positive thickness");
    }
    sawfilm::validate(layer.material);
  }
  sawfilm::validate(substrate);
  geometry.validate();
}

ElasticTensor tensor_in_frame(const ElasticMaterial& m, const Geometry& g) {
  if (const auto* iso = std::get_if<IsotropicMaterial>(&m)) {
    return stiffness_from_isotropic(*iso);
  }
  return stiffness_from_cubic(std::get<CubicMaterial>(m), g.rotation());
}

}  // namespace sawfilm
