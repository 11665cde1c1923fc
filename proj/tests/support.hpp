#pragma once

// Shared fixtures, hand-rolled generators and independent oracles.

#include "sawfilm/dispersion.hpp"
#include "sawfilm/inversion.hpp"
#include "sawfilm/material_db.hpp"
#include "sawfilm/materials.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <tuple>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#ifndef SAWFILM_DATA_DIR
#define SAWFILM_DATA_DIR "data"
#endif

namespace testing {

using namespace sawfilm;

inline const MaterialDb& fixture_db() {
  static const MaterialDb db = load_material_db(std::string(SAWFILM_DATA_DIR) + "/materials.yaml");
  return db;
}

inline MixingEndpoints fixture_endpoints() { return mixing_endpoints(fixture_db(), "polySi", "polyGe"); }

inline IsotropicMaterial sige(double c_ge, double nu = 0.22) {
  const MixingEndpoints ep = fixture_endpoints();
  return {mix_young_modulus(c_ge, ep.e_si, ep.e_ge), nu, mix_density(c_ge, ep.rho_si, ep.rho_ge)};
}

/// SiGe film over optional thermal oxide on (001)[110] silicon.
inline LayerStack sige_stack(double c_ge, double thickness, bool oxide = true) {
  LayerStack s;
  s.substrate = fixture_db().at("Si").material;
  s.layers.push_back({"SiGe", sige(c_ge), thickness});
  if (oxide) s.layers.push_back({"SiO2", fixture_db().at("SiO2_thermal").material, 2.435e-6});
  return s;
}

inline LayerStack stack_1a() { return sige_stack(0.179, 1.02e-6); }
inline LayerStack stack_2() { return sige_stack(0.624, 0.71e-6); }
inline LayerStack stack_3() { return sige_stack(0.416, 0.9e-6, false); }

inline FitProblem sige_problem(const LayerStack& stack, double c_ge, DispersionCurve measured) {
  FitProblem p;
  p.stack = stack;
  p.coupling = MixingCoupling{"SiGe", fixture_endpoints(), c_ge, 0.22};
  p.measured = std::move(measured);
  return p;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// ------------------------------------------------------------------ generators

class Gen {
public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

  IsotropicMaterial isotropic(double nu_lo = -0.2, double nu_hi = 0.49) {
    return {log_uniform(20e9, 400e9), uniform(nu_lo, nu_hi), uniform(1500.0, 8000.0)};
  }

  CubicMaterial cubic() {
    CubicMaterial m;
    m.c44 = log_uniform(20e9, 150e9);
    m.c11 = log_uniform(80e9, 400e9);
    m.c12 = uniform(-0.3, 0.9) * m.c11;
    m.density = uniform(1500.0, 8000.0);
    return m;
  }

  /// Random proper rotation (QR of a Gaussian matrix, determinant fixed to +1).
  Eigen::Matrix3d rotation() {
    std::normal_distribution<double> n;
    Eigen::Matrix3d g;
    for (int i = 0; i < 9; ++i) g(i / 3, i % 3) = n(rng_);
    Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
    Eigen::Matrix3d q = qr.householderQ();
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return q;
  }

  /// 1-3 isotropic layers on silicon, each slower in shear than the substrate.
  LayerStack slow_film_stack() {
    LayerStack s;
    s.substrate = fixture_db().at("Si").material;
    const int n = integer(1, 3);
    for (int i = 0; i < n; ++i) {
      IsotropicMaterial m;
      m.poisson_ratio = uniform(0.1, 0.35);
      m.density = uniform(2000.0, 6000.0);
      const double vt = uniform(2000.0, 3800.0);
      m.young_modulus = 2.0 * m.density * vt * vt * (1.0 + m.poisson_ratio);
      s.layers.push_back({"L" + std::to_string(i), m, log_uniform(0.2e-6, 3e-6)});
    }
    return s;
  }

  std::mt19937_64& engine() { return rng_; }

private:
  std::mt19937_64 rng_;
};

// --------------------------------------------------------------------- oracles

/// c'_ijkl = a_ip a_jq a_kr a_ls c_pqrs by explicit summation over all 3^8 terms.
inline Matrix6d rotate_by_summation(const ElasticTensor& c, const Eigen::Matrix3d& a) {
  auto full = [&](int i, int j, int k, int l) {
    double s = 0.0;
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q)
        for (int r = 0; r < 3; ++r)
          for (int t = 0; t < 3; ++t) s += a(i, p) * a(j, q) * a(k, r) * a(l, t) * c(p, q, r, t);
    return s;
  };
  const int pairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
  Matrix6d out;
  for (int I = 0; I < 6; ++I)
    for (int J = 0; J < 6; ++J) out(I, J) = full(pairs[I][0], pairs[I][1], pairs[J][0], pairs[J][1]);
  return out;
}

/// Root in (0, 1) of x^3 - 8x^2 + (24 - 16 kappa) x - 16 (1 - kappa), x = (v_R / v_t)^2,
/// kappa = (v_t / v_l)^2, by plain bisection.
inline double rayleigh_ratio_by_bisection(double nu) {
  const double kappa = (1.0 - 2.0 * nu) / (2.0 * (1.0 - nu));
  auto f = [&](double x) { return ((x - 8.0) * x + (24.0 - 16.0 * kappa)) * x - 16.0 * (1.0 - kappa); };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return std::sqrt(0.5 * (lo + hi));
}

inline double shear_speed(const IsotropicMaterial& m) {
  return std::sqrt(m.young_modulus / (2.0 * (1.0 + m.poisson_ratio) * m.density));
}

inline double longitudinal_speed(const IsotropicMaterial& m) {
  const double nu = m.poisson_ratio;
  return std::sqrt(m.young_modulus * (1.0 - nu) / ((1.0 + nu) * (1.0 - 2.0 * nu) * m.density));
}

/// |sum_n x_n exp(-2 pi i k n / N)| for k = 0 .. N/2.
inline std::vector<double> naive_dft_magnitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ph = -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n);
      s += x[t] * std::complex<double>(std::cos(ph), std::sin(ph));
    }
    out.push_back(std::abs(s));
  }
  return out;
}

/// Self-consistent point of a harmonic: root of h(f) = f - v(f) / wavelength by secant steps.
inline CurvePoint point_at_wavelength(const LayerStack& s, double wavelength, double sigma_fraction = 0.0) {
  auto h = [&](double f) { return f - saw_phase_velocity(s, f) / wavelength; };
  double f0 = 4500.0 / wavelength, f1 = saw_phase_velocity(s, f0) / wavelength;
  double h0 = h(f0), h1 = h(f1);
  for (int it = 0; it < 30 && h1 != 0.0 && std::abs(f1 - f0) > 1e-15 * f1; ++it) {
    if (h1 == h0) break;
    const double f2 = f1 - h1 * (f1 - f0) / (h1 - h0);
    f0 = f1;
    h0 = h1;
    f1 = f2;
    h1 = h(f1);
  }
  const double f = f1;
  const double v = saw_phase_velocity(s, f);
  CurvePoint p{f, v, {}};
  if (sigma_fraction > 0.0) p.sigma = sigma_fraction * v;
  return p;
}

/// Wavelengths period / n >= min_wavelength from the five glass masks, duplicates dropped.
inline std::vector<double> mask_wavelengths(double min_wavelength = 6e-6) {
  std::vector<double> out;
  for (double p : {24e-6, 32e-6, 48e-6, 64e-6, 96e-6}) {
    for (int n = 1; p / n >= min_wavelength * (1.0 - 1e-9); ++n) {
      const double l = p / n;
      bool dup = false;
      for (double x : out) dup = dup || std::abs(x - l) < 1e-9 * l;
      if (!dup) out.push_back(l);
    }
  }
  return out;
}

/// Model curve sampled at the mask wavelengths, sorted by frequency.
inline DispersionCurve curve_at_wavelengths(const LayerStack& s, const std::vector<double>& wavelengths,
                                            double sigma_fraction = 0.0) {
  std::vector<CurvePoint> pts;
  for (double l : wavelengths) pts.push_back(point_at_wavelength(s, l, sigma_fraction));
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.frequency < b.frequency; });
  return DispersionCurve(std::move(pts));
}

/// Noise-free SiGe-stack data at the mask wavelengths with sigma = 0.1 % of v,
/// memoized per (c_ge, thickness, oxide).
inline const DispersionCurve& sige_mask_data(double c_ge, double thickness, bool oxide = true) {
  static std::map<std::tuple<double, double, bool>, DispersionCurve> cache;
  const auto key = std::make_tuple(c_ge, thickness, oxide);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, curve_at_wavelengths(sige_stack(c_ge, thickness, oxide), mask_wavelengths(), 1e-3)).first;
  }
  return it->second;
}

}  // namespace testing
