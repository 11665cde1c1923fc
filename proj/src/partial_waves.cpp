#include "sawfilm/partial_waves.hpp"

#include "sawfilm/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sawfilm {

const char* to_string(WaveKind kind) {
  switch (kind) {
    case WaveKind::decaying: return "decaying";
    case WaveKind::growing: return "growing";
    case WaveKind::propagating_down: return "propagating-down";
    case WaveKind::propagating_up: return "propagating-up";
  }
  return "unknown";
}

Medium::Medium(const ElasticTensor& tensor, double density, double stiffness_scale)
    : tensor_(tensor), density_(density), scale_(stiffness_scale) {
  if (!(density > 0.0)) throw DomainError("density must be positive");
  if (!(stiffness_scale > 0.0)) throw DomainError("stiffness scale must be positive");
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      q_(i, k) = tensor(i, 0, k, 0);
      r_(i, k) = tensor(i, 0, k, 2);
      t_(i, k) = tensor(i, 2, k, 2);
    }
  }
  t_inv_ = t_.inverse();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> christoffel(q_ / density_);
  bulk_velocity_ = christoffel.eigenvalues().cwiseSqrt();
  bulk_polarization_ = christoffel.eigenvectors();

  const Matrix6d& c = tensor.voigt();
  const double tol = 1e-12 * c.cwiseAbs().maxCoeff();
  mirror_ = true;
  for (int a : {0, 1, 2, 4}) {
    for (int b : {3, 5}) {
      if (std::abs(c(a, b)) > tol) mirror_ = false;
    }
  }
}

Matrix6d Medium::stroh_operator(double velocity) const {
  const Eigen::Matrix3d n1 = -t_inv_ * r_.transpose();
  const Eigen::Matrix3d n3 = r_ * t_inv_ * r_.transpose() - q_ +
                             density_ * velocity * velocity * Eigen::Matrix3d::Identity();
  Matrix6d op;
  op.topLeftCorner<3, 3>() = n1;
  op.topRightCorner<3, 3>() = scale_ * t_inv_;
  op.bottomLeftCorner<3, 3>() = n3 / scale_;
  op.bottomRightCorner<3, 3>() = n1.transpose();
  return op;
}

Eigen::Matrix3cd Medium::christoffel(Complex p, double velocity) const {
  Eigen::Matrix3cd g = (q_ - density_ * velocity * velocity * Eigen::Matrix3d::Identity()).cast<Complex>();
  g += p * (r_ + r_.transpose()).cast<Complex>();
  g += p * p * t_.cast<Complex>();
  return g;
}

Vector3cd Medium::traction_vector(const Vector3cd& a, Complex p) const {
  return r_.transpose().cast<Complex>() * a + p * (t_.cast<Complex>() * a);
}

double PartialWaveSet::residual(std::size_t i) const {
  const PartialWave& w = waves.at(i);
  const Vector6cd lhs = stroh.cast<Complex>() * w.field;
  return (lhs - w.eigenvalue * w.field).norm() / w.field.norm();
}

namespace {

bool close(Complex a, Complex b) {
  return std::abs(a - b) <= kClusterTolerance * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

PartialWaveSet partial_waves(const Medium& medium, double velocity) {
  if (!(velocity > 0.0) || !std::isfinite(velocity)) {
    throw DomainError("phase velocity must be positive");
  }
  PartialWaveSet set;
  set.velocity = velocity;
  set.stroh = medium.stroh_operator(velocity);

  Eigen::EigenSolver<Matrix6d> solver(set.stroh, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw DegeneratePointError("partial-wave eigensolver failed");
  }
  std::array<Complex, 6> p;
  for (int i = 0; i < 6; ++i) p[i] = solver.eigenvalues()[i];

  // Group repeated roots (union by transitive closeness).
  std::array<int, 6> group;
  std::iota(group.begin(), group.end(), 0);
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) {
      if (close(p[i], p[j])) {
        const int from = group[j];
        const int to = group[i];
        for (int& g : group) {
          if (g == from) g = to;
        }
      }
    }
  }

  int out = 0;
  for (int g = 0; g < 6; ++g) {
    std::vector<int> members;
    for (int i = 0; i < 6; ++i) {
      if (group[i] == g) members.push_back(i);
    }
    if (members.empty()) continue;
    const int m = static_cast<int>(members.size());
    Complex mean{0.0, 0.0};
    for (int i : members) mean += p[i];
    mean /= static_cast<double>(m);

    const Eigen::Matrix3cd gamma = medium.christoffel(mean, velocity);
    Eigen::JacobiSVD<Eigen::Matrix3cd> svd(gamma, Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    const double small = 1e-7 * std::max(sv(0), medium.stiffness_scale());
    if (m > 3 || sv(3 - m) > small) {
      std::ostringstream os;
      os << "defective partial-wave root p = " << mean << " (multiplicity " << m
         << ") at v = " << velocity << " m/s";
      throw DegeneratePointError(os.str());
    }
    for (int c = 0; c < m; ++c) {
      const Vector3cd a = svd.matrixV().col(2 - c);
      const Vector3cd b = medium.traction_vector(a, mean) / medium.stiffness_scale();
      PartialWave& w = set.waves[out++];
      w.eigenvalue = mean;
      w.field << a, b;
      w.field.normalize();
      // Fix the arbitrary phase: largest component real and positive.
      Eigen::Index imax = 0;
      w.field.cwiseAbs().maxCoeff(&imax);
      w.field *= std::conj(w.field(imax)) / std::abs(w.field(imax));

      const double scale = std::max(1.0, std::abs(mean));
      if (mean.imag() > 1e-10 * scale) {
        w.kind = WaveKind::decaying;
      } else if (mean.imag() < -1e-10 * scale) {
        w.kind = WaveKind::growing;
      } else {
        // Depth component of the energy flux is proportional to Re(b . conj(a)).
        const double flux = (w.traction().dot(w.displacement())).real();
        w.kind = flux > 0.0 ? WaveKind::propagating_down : WaveKind::propagating_up;
      }
    }
  }

  std::stable_sort(set.waves.begin(), set.waves.end(), [](const PartialWave& a, const PartialWave& b) {
    if (a.eigenvalue.imag() != b.eigenvalue.imag()) return a.eigenvalue.imag() < b.eigenvalue.imag();
    return a.eigenvalue.real() < b.eigenvalue.real();
  });
  return set;
}

PartialWaveSet partial_waves(const ElasticTensor& tensor, double density, double omega, double k) {
  if (!(omega > 0.0) || !(k > 0.0)) throw DomainError("omega and k must be positive");
  const Medium medium(tensor, density, tensor.voigt(2, 2));
  return partial_waves(medium, omega / k);
}

}  // namespace sawfilm
