#include "support.hpp"

#include "sawfilm/errors.hpp"

#include <doctest.h>

#include <sstream>

using namespace sawfilm;
using testing::Gen;
using testing::rel;

namespace {

LayerStack bare(const ElasticMaterial& m) {
  LayerStack s;
  s.substrate = m;
  return s;
}

}  // namespace

TEST_CASE("isotropic partial waves match closed-form vertical slownesses") {
  Gen g(21);
  for (int i = 0; i < 40; ++i) {
    const IsotropicMaterial m = g.isotropic(0.0, 0.45);
    const double vt = testing::shear_speed(m), vl = testing::longitudinal_speed(m);
    const double v = g.uniform(0.3, 0.98) * vt;
    const Medium medium(stiffness_from_isotropic(m), m.density, m.young_modulus);
    const PartialWaveSet set = partial_waves(medium, v);

    const double qt = std::sqrt(1.0 - v * v / (vt * vt));
    const double ql = std::sqrt(1.0 - v * v / (vl * vl));
    std::vector<double> expected{-ql, -qt, -qt, qt, qt, ql};
    std::vector<double> got;
    for (const auto& w : set.waves) {
      CHECK(std::abs(w.eigenvalue.real()) < 1e-9);
      CHECK(w.eigenvalue.imag() != 0.0);
      got.push_back(w.eigenvalue.imag());
    }
    std::sort(got.begin(), got.end());
    for (int k = 0; k < 6; ++k) CHECK(std::abs(got[k] - expected[k]) < 1e-9);
    int decaying = 0;
    for (const auto& w : set.waves) decaying += w.kind == WaveKind::decaying;
    CHECK(decaying == 3);
    for (std::size_t k = 0; k < 6; ++k) CHECK(set.residual(k) < 1e-9);
  }
}

TEST_CASE("above the shear speed a pair of partial waves propagates") {
  const IsotropicMaterial m{100e9, 0.25, 3000};
  const Medium medium(stiffness_from_isotropic(m), m.density, m.young_modulus);
  const PartialWaveSet set = partial_waves(medium, 1.1 * testing::shear_speed(m));
  int propagating = 0;
  for (const auto& w : set.waves) {
    propagating += w.kind == WaveKind::propagating_down || w.kind == WaveKind::propagating_up;
  }
  CHECK(propagating >= 2);
}

TEST_CASE("Rayleigh velocity of an isotropic half-space") {
  for (double nu : {0.0, 0.1, 0.25, 0.34, 0.45}) {
    CAPTURE(nu);
    const IsotropicMaterial m{120e9, nu, 3300};
    const double vt = testing::shear_speed(m);
    const double oracle = testing::rayleigh_ratio_by_bisection(nu) * vt;
    CHECK(rel(rayleigh_velocity_isotropic(m), oracle) < 1e-9);
    CHECK(rel(saw_phase_velocity(bare(m), 100e6), oracle) < 1e-6);
    CHECK(rayleigh_velocity_isotropic(m) < shear_velocity(m));
    CHECK(shear_velocity(m) < longitudinal_velocity(m));
  }
  const IsotropicMaterial quarter{100e9, 0.25, 2500};
  CHECK(std::abs(rayleigh_velocity_isotropic(quarter) / shear_velocity(quarter) - 0.91940) < 1e-5);
  const IsotropicMaterial zero{100e9, 0.0, 2500};
  CHECK(std::abs(rayleigh_velocity_isotropic(zero) / shear_velocity(zero) - 0.87404) < 1e-5);
}

TEST_CASE("silicon (001)[110] anchor") {
  const LayerStack si = bare(testing::fixture_db().at("Si").material);
  for (double f : {1e6, 50e6, 211.7e6, 500e6, 2e9}) {
    CHECK(std::abs(saw_phase_velocity(si, f) / 5080.0 - 1.0) < 0.005);
  }
}

TEST_CASE("boundary system of a bare half-space is singular at the Rayleigh velocity") {
  const IsotropicMaterial m{100e9, 0.3, 2700};
  const LayerStack s = bare(m);
  const double vr = rayleigh_velocity_isotropic(m);
  const double k = 2 * std::numbers::pi / 20e-6;
  const BoundaryMatrix at = boundary_matrix(s, k * vr, k);
  const BoundaryMatrix off = boundary_matrix(s, k * 0.9 * vr, k);
  CHECK(at.matrix.rows() == 3);
  CHECK(at.matrix.cols() == 3);
  CHECK(std::abs(at.determinant) < 1e-6 * std::abs(off.determinant));
  CHECK(at.condition_number > 1e6 * off.condition_number);
}

TEST_CASE("surface Green's function") {
  const IsotropicMaterial m{100e9, 0.3, 2700};
  const LayerStack s = bare(m);
  const double vr = rayleigh_velocity_isotropic(m);

  SUBCASE("half-space response is invariant under common scaling of omega and k") {
    const double k = 1e5;
    for (double c : {0.01, 3.0, 1000.0}) {
      for (double v : {0.5 * vr, 0.97 * vr, 1.02 * vr}) {
        const Complex a = surface_green_g33(s, k * v, k).value;
        const Complex b = surface_green_g33(s, c * k * v, c * k).value;
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
      }
    }
  }
  SUBCASE("sharp pole at the surface wave velocity") {
    const double k = 1e5;
    const double near = std::abs(surface_green_g33(s, k * vr * (1 + 1e-7), k).value);
    const double far = std::abs(surface_green_g33(s, k * 0.8 * vr, k).value);
    CHECK(near > 1e4 * far);
  }
}

TEST_CASE("layer identical to the substrate is invisible") {
  Gen g(4);
  for (int i = 0; i < 5; ++i) {
    const IsotropicMaterial m = g.isotropic(0.05, 0.45);
    LayerStack s = bare(m);
    const double v0 = saw_phase_velocity(s, 100e6);
    s.layers.push_back({"same", m, g.log_uniform(0.1e-6, 20e-6)});
    const std::vector<double> f{10e6, 100e6, 300e6, 900e6};
    for (const auto& p : dispersion_curve(s, f).curve) CHECK(rel(p.velocity, v0) < 1e-9);
  }
  const ElasticMaterial si = testing::fixture_db().at("Si").material;
  LayerStack s = bare(si);
  const double v0 = saw_phase_velocity(s, 100e6);
  s.layers.push_back({"Si", si, 1.5e-6});
  for (double f : {50e6, 500e6}) CHECK(rel(saw_phase_velocity(s, f), v0) < 1e-9);
}

TEST_CASE("stack 1A dispersion") {
  const LayerStack s = testing::stack_1a();
  const double v_si = saw_phase_velocity(bare(s.substrate), 100e6);

  SUBCASE("low-frequency limit approaches the substrate") {
    CHECK(rel(saw_phase_velocity(s, 0.5e6), v_si) < 2e-3);
  }
  SUBCASE("velocity decreases from 50 to 500 MHz") {
    std::vector<double> f;
    for (int i = 0; i < 19; ++i) f.push_back(50e6 + 25e6 * i);
    const DispersionResult r = dispersion_curve(s, f);
    CHECK(r.discontinuities.empty());
    for (std::size_t i = 1; i < r.curve.size(); ++i) CHECK(r.curve[i].velocity < r.curve[i - 1].velocity);
  }
  SUBCASE("boundary system stays finite over the scan window at 200 MHz") {
    const double omega = 2 * std::numbers::pi * 200e6;
    for (double v = 2000.0; v < v_si * 0.999; v += 37.0) {
      const BoundaryMatrix b = boundary_matrix(s, omega, omega / v);
      CHECK(b.matrix.allFinite());
      CHECK(std::isfinite(b.condition_number));
    }
  }
  SUBCASE("stiffer top layer never slows the wave") {
    LayerStack stiff = s;
    std::get<IsotropicMaterial>(stiff.layers[0].material).young_modulus *= 1.1;
    std::vector<double> f;
    for (int i = 0; i < 10; ++i) f.push_back(50e6 + 50e6 * i);
    const DispersionCurve a = dispersion_curve(s, f).curve;
    const DispersionCurve b = dispersion_curve(stiff, f).curve;
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(b[i].velocity >= a[i].velocity);
  }
  SUBCASE("bitwise deterministic") {
    const std::vector<double> f{60e6, 260e6, 460e6};
    const DispersionCurve a = dispersion_curve(s, f).curve;
    const DispersionCurve b = dispersion_curve(s, f).curve;
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(a[i].velocity == b[i].velocity);
  }
}

TEST_CASE("dispersion_curve input handling") {
  const LayerStack s = testing::stack_1a();
  CHECK(dispersion_curve(s, std::vector<double>{}).curve.empty());
  CHECK_THROWS_AS(dispersion_curve(s, std::vector<double>{2e8, 1e8}), DomainError);
  CHECK_THROWS_AS(saw_phase_velocity(s, -1.0), DomainError);
}

TEST_CASE("fast film on a slow substrate loses the surface mode") {
  LayerStack s;
  s.substrate = IsotropicMaterial{30e9, 0.3, 3000};
  s.layers.push_back({"fast", IsotropicMaterial{400e9, 0.2, 3000}, 5e-6});
  CHECK_THROWS_AS(saw_phase_velocity(s, 2e9), NoModeError);
  try {
    dispersion_curve(s, std::vector<double>{1e9, 2e9});
    FAIL("expected NoModeError");
  } catch (const NoModeError& e) {
    CHECK(std::string(e.what()).find("Hz") != std::string::npos);
  }
}

TEST_CASE("curve container, CSV and merge") {
  const DispersionCurve c({{1e8, 5000.0, 2.0}, {2e8, 4900.0, 3.0}, {3e8, 4800.0, 1.0}});
  CHECK(c.has_sigma());
  CHECK(c.velocity_at(1.5e8) == doctest::Approx(4950.0));
  CHECK_THROWS_AS(c.velocity_at(5e8), DomainError);
  CHECK_THROWS_AS(DispersionCurve({{2e8, 5000.0, {}}, {1e8, 4900.0, {}}}), DomainError);
  CHECK_THROWS_AS(DispersionCurve({{1e8, 5000.0, 1.0}, {2e8, 4900.0, {}}}), DomainError);
  CHECK_THROWS_AS(DispersionCurve({{1e8, -5.0, {}}}), DomainError);

  std::stringstream io;
  write_curve_csv(io, c);
  const DispersionCurve back = read_curve_csv(io);
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(back[i].frequency == c[i].frequency);
    CHECK(back[i].velocity == c[i].velocity);
    CHECK(*back[i].sigma == *c[i].sigma);
  }

  std::istringstream bad("frequency_hz,phase_velocity_m_per_s\n1e8,5000\n2e8,oops\n");
  try {
    read_curve_csv(bad, "m.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("m.csv:3") != std::string::npos);
  }
  std::istringstream wrong_header("f,v\n1,2\n");
  CHECK_THROWS_AS(read_curve_csv(wrong_header), ParseError);
  std::istringstream ragged("frequency_hz,phase_velocity_m_per_s\n1e8,5000,1,2\n");
  CHECK_THROWS_AS(read_curve_csv(ragged), ParseError);

  const DispersionCurve d({{1.5e8, 4950.0, 2.0}, {3e8, 4802.0, 1.0}});
  const std::vector<DispersionCurve> parts{c, d};
  const DispersionCurve m = merge_curves(parts);
  CHECK(m.size() == 4);
  CHECK(m[3].velocity == doctest::Approx(4801.0));
}
