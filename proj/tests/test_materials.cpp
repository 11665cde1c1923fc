#include "support.hpp"

#include "sawfilm/errors.hpp"
#include "sawfilm/units.hpp"

#include <doctest.h>

#include <sstream>

using namespace sawfilm;
using testing::Gen;

TEST_CASE("parse_quantity converts unit suffixes to SI") {
  CHECK(parse_quantity("69.8 GPa", Dimension::pressure) == doctest::Approx(69.8e9));
  CHECK(parse_quantity("2.435um", Dimension::length) == doctest::Approx(2.435e-6));
  CHECK(parse_quantity("2200 kg/m3", Dimension::density) == 2200.0);
  CHECK(parse_quantity("2.87 g/cm3", Dimension::density) == doctest::Approx(2870.0));
  CHECK(parse_quantity("5080 m/s", Dimension::velocity) == 5080.0);
  CHECK(parse_quantity("211.7 MHz", Dimension::frequency) == doctest::Approx(211.7e6));
  CHECK(parse_quantity("1.2 ns", Dimension::time) == doctest::Approx(1.2e-9));
  CHECK(parse_quantity("17.9 %", Dimension::dimensionless) == doctest::Approx(0.179));
  CHECK(parse_quantity("0.22", Dimension::dimensionless) == 0.22);
}

TEST_CASE("parse_quantity rejects bad input") {
  CHECK_THROWS_AS(parse_quantity("12", Dimension::length), ParseError);
  CHECK_THROWS_AS(parse_quantity("12 GPa", Dimension::length), ParseError);
  CHECK_THROWS_AS(parse_quantity("12 furlongs", Dimension::length), ParseError);
  CHECK_THROWS_AS(parse_quantity("abc um", Dimension::length), ParseError);
  CHECK_THROWS_AS(parse_quantity("", Dimension::dimensionless), ParseError);
  CHECK_THROWS_AS(parse_quantity("inf m", Dimension::length), ParseError);
}

TEST_CASE("format_double round-trips") {
  Gen g(7);
  for (int i = 0; i < 500; ++i) {
    const double x = g.uniform(-1.0, 1.0) * std::pow(10.0, g.integer(-30, 30));
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(5080.0) == "5080");
}

TEST_CASE("mixing rules reproduce the tabulated film moduli and densities") {
  const MixingEndpoints ep = testing::fixture_endpoints();
  CHECK(ep.e_si == 160e9);
  CHECK(ep.e_ge == 132e9);
  CHECK(mix_young_modulus(0.18, ep.e_si, ep.e_ge) == doctest::Approx(154.96e9).epsilon(1e-12));
  CHECK(std::abs(mix_young_modulus(0.60, ep.e_si, ep.e_ge) - 143.2e9) < 0.3e9);
  CHECK(std::abs(mix_young_modulus(0.40, ep.e_si, ep.e_ge) - 148.8e9) < 0.3e9);
  CHECK(mix_young_modulus(0.0, ep.e_si, ep.e_ge) == ep.e_si);
  CHECK(mix_density(0.18, ep.rho_si, ep.rho_ge) == doctest::Approx(2868.2));
  CHECK(std::abs(mix_density(0.40, ep.rho_si, ep.rho_ge) - 3526.0) < 0.5);
  CHECK(mix_density(1.0, ep.rho_si, ep.rho_ge) == ep.rho_ge);
}

TEST_CASE("mixing rules are affine: midpoint equals the endpoint mean") {
  Gen g(11);
  for (int i = 0; i < 200; ++i) {
    // Whole-GPa and whole-kg/m3 endpoints, so the mean is exactly representable.
    const double a = g.integer(50, 300) * 1e9, b = g.integer(50, 300) * 1e9;
    CHECK(mix_young_modulus(0.5, a, b) == (a + b) / 2.0);
    const double ra = g.integer(1000, 9000), rb = g.integer(1000, 9000);
    CHECK(mix_density(0.5, ra, rb) == (ra + rb) / 2.0);
  }
  CHECK_THROWS_AS(mix_young_modulus(1.01, 160e9, 132e9), DomainError);
  CHECK_THROWS_AS(mix_density(-0.01, 2330, 5320), DomainError);
}

TEST_CASE("isotropic stiffness from oxide constants") {
  const ElasticTensor c = stiffness_from_isotropic({69.8e9, 0.15, 2200.0});
  CHECK(c.voigt(0, 0) == doctest::Approx(73.70e9).epsilon(1e-3));
  CHECK(c.voigt(0, 1) == doctest::Approx(13.01e9).epsilon(1e-3));
  CHECK(c.voigt(3, 3) == doctest::Approx(30.35e9).epsilon(1e-3));

  const ElasticTensor z = stiffness_from_isotropic({100e9, 0.0, 3000.0});
  CHECK(z.voigt(0, 0) == doctest::Approx(100e9));
  CHECK(z.voigt(0, 1) == 0.0);
  CHECK(z.voigt(5, 5) == doctest::Approx(50e9));
}

TEST_CASE("Lame round trip recovers E and nu") {
  Gen g(3);
  for (int i = 0; i < 500; ++i) {
    const IsotropicMaterial m = g.isotropic(-0.9, 0.499);
    const ElasticTensor c = stiffness_from_isotropic(m);
    CHECK(is_positive_definite(c.voigt()));
    const IsotropicMaterial back = isotropic_from_stiffness(c.voigt(0, 0), c.voigt(0, 1), m.density);
    CHECK(testing::rel(back.young_modulus, m.young_modulus) < 1e-12);
    CHECK(std::abs(back.poisson_ratio - m.poisson_ratio) < 1e-12);
  }
}

TEST_CASE("invalid materials are rejected") {
  CHECK_THROWS_AS(IsotropicMaterial({100e9, 0.5, 2000}).validate(), DomainError);
  CHECK_THROWS_AS(IsotropicMaterial({-1, 0.2, 2000}).validate(), DomainError);
  CHECK_THROWS_AS(IsotropicMaterial({100e9, 0.2, 0}).validate(), DomainError);
  CHECK_THROWS_AS(CubicMaterial({100e9, 120e9, 50e9, 2000}).validate(), DomainError);
  CHECK_THROWS_AS(CubicMaterial({100e9, 20e9, -5e9, 2000}).validate(), DomainError);
  Matrix6d bad = Matrix6d::Identity();
  bad(0, 1) = 2.0;
  CHECK_THROWS_AS(ElasticTensor{bad}, DomainError);
  bad(1, 0) = 2.0;
  CHECK_THROWS_AS(ElasticTensor{bad}, DomainError);  // symmetric but indefinite
}

TEST_CASE("cubic rotation matches direct fourth-rank summation") {
  const CubicMaterial si = std::get<CubicMaterial>(testing::fixture_db().at("Si").material);
  const ElasticTensor c = stiffness_from_cubic(si);

  SUBCASE("identity leaves constants in place") {
    const ElasticTensor r = c.rotated(Eigen::Matrix3d::Identity());
    CHECK(r.voigt(0, 0) == si.c11);
    CHECK(r.voigt(0, 1) == si.c12);
    CHECK(r.voigt(3, 3) == si.c44);
  }
  SUBCASE("45 degrees about [001]") {
    Geometry geo;  // (001) surface, [110] propagation
    const ElasticTensor r = c.rotated(geo.rotation());
    CHECK(r.voigt(0, 0) == doctest::Approx((si.c11 + si.c12 + 2 * si.c44) / 2).epsilon(1e-13));
    const Matrix6d oracle = testing::rotate_by_summation(c, geo.rotation());
    CHECK((r.voigt() - oracle).cwiseAbs().maxCoeff() < 1e-12 * si.c11);
  }
  SUBCASE("random rotations of random cubic crystals") {
    Gen g(5);
    for (int i = 0; i < 50; ++i) {
      const ElasticTensor t = stiffness_from_cubic(g.cubic());
      const Eigen::Matrix3d a = g.rotation();
      const Matrix6d oracle = testing::rotate_by_summation(t, a);
      const ElasticTensor r = t.rotated(a);
      CHECK((r.voigt() - oracle).cwiseAbs().maxCoeff() < 1e-12 * t.voigt().cwiseAbs().maxCoeff());
      CHECK(is_positive_definite(r.voigt()));
    }
  }
}

TEST_CASE("isotropic constants are rotation invariant") {
  Gen g(9);
  for (int i = 0; i < 50; ++i) {
    const IsotropicMaterial m = g.isotropic();
    const ElasticTensor c = stiffness_from_isotropic(m);
    const double mu = c.voigt(3, 3);
    const CubicMaterial cubic{c.voigt(0, 0), c.voigt(0, 1), mu, m.density};  // c11 - c12 = 2 c44
    const ElasticTensor r = stiffness_from_cubic(cubic, g.rotation());
    CHECK((r.voigt() - c.voigt()).cwiseAbs().maxCoeff() < 1e-12 * c.voigt(0, 0));
  }
}

TEST_CASE("geometry validation") {
  Geometry g;
  g.propagation = {1, 0, 1};
  CHECK_THROWS_AS(g.validate(), DomainError);
  g.propagation = {0, 0, 0};
  CHECK_THROWS_AS(g.validate(), DomainError);
  Geometry ok;
  const Eigen::Matrix3d a = ok.rotation();
  CHECK((a * a.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-15);
  CHECK(a.determinant() == doctest::Approx(1.0));
}

TEST_CASE("material database fixtures and errors") {
  const MaterialDb& db = testing::fixture_db();
  const auto& ox = std::get<IsotropicMaterial>(db.at("SiO2_thermal").material);
  CHECK(ox.young_modulus == 69.8e9);
  CHECK(ox.poisson_ratio == 0.15);
  CHECK(ox.density == 2200.0);
  CHECK(db.contains("Si"));
  CHECK_THROWS_AS(db.at("Unobtainium"), ParseError);

  CHECK(parse_material_db("").empty());
  CHECK(parse_material_db("# only a comment\n").empty());

  const std::string bad_nu =
      "Bad:\n  symmetry: isotropic\n  young_modulus: 100 GPa\n  poisson_ratio: 0.6\n  density: 2000 kg/m3\n";
  try {
    parse_material_db(bad_nu, "bad.yaml");
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("Bad") != std::string::npos);
    CHECK(msg.find("bad.yaml:") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_material_db("X:\n  symmetry: cubic\n  c11: 1 GPa\n"), ParseError);
  CHECK_THROWS_AS(parse_material_db("X:\n  symmetry: trigonal\n"), ParseError);
  CHECK_THROWS_AS(parse_material_db("X:\n  symmetry: isotropic\n  young_modulus: 100\n  poisson_ratio: 0.2\n"
                                    "  density: 2000 kg/m3\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_material_db("X:\n  symmetry: isotropic\n  young_modulus: 100 GPa\n  poisson_ratio: 0.2\n"
                                    "  density: 2000 kg/m3\n  colour: red\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_material_db("X: [1, 2\n"), ParseError);
  CHECK_THROWS_AS(load_material_db("/nonexistent/materials.yaml"), ParseError);
}

TEST_CASE("stack validation") {
  LayerStack s = testing::stack_1a();
  CHECK_NOTHROW(s.validate());
  s.layers[0].thickness = 0.0;
  CHECK_THROWS_AS(s.validate(), DomainError);
}
