#include <doctest.h>

#include <cmath>
#include <numbers>

#include "scatlab/domain.hpp"
#include "unit/helpers.hpp"

using namespace scatlab;

TEST_SUITE("domain") {
  TEST_CASE("grid rejects non-square cells and bad sizes") {
    CHECK_THROWS_AS(ImagingGrid(4, 4, 0.1, 0.2), ConfigError);
    CHECK_THROWS_AS(ImagingGrid(0, 4, 0.1, 0.1), ConfigError);
    CHECK_THROWS_AS(ImagingGrid(4, 4, -0.1, -0.1), ConfigError);
    const ImagingGrid g(8, 4, 0.2, 0.1);
    CHECK(g.cell_size() == doctest::Approx(0.025));
  }

  TEST_CASE("cell centres lie strictly inside the extent") {
    const ImagingGrid g(7, 5, 0.07, 0.05, {0.01, -0.02});
    const double hx = 0.035, hy = 0.025;
    for (const Point& c : g.cell_centers()) {
      CHECK(std::abs(c.x - 0.01) < hx);
      CHECK(std::abs(c.y + 0.02) < hy);
    }
    CHECK(g.cell_center(g.index(0, 0)).x < g.cell_center(g.index(1, 0)).x);
    CHECK(g.cell_center(g.index(0, 0)).y < g.cell_center(g.index(0, 1)).y);
  }

  TEST_CASE("fresnel geometry") {
    const SensorArray s = fresnel_geometry();
    CHECK(s.transmitters() == 8);
    CHECK(s.receivers() == 241);
    for (const auto* list : {&s.tx, &s.rx})
      for (const Point& p : *list) CHECK(std::abs(std::hypot(p.x, p.y) - 1.67) < 1e-12);
    CHECK(s.tx[0].x == doctest::Approx(1.67).epsilon(1e-15));
    CHECK(std::abs(s.tx[0].y) < 1e-15);

    // Each transmitter records 60..300 degrees from itself: the 119 degree arc
    // centred on the transmitter is blocked, and positions are shared.
    CHECK(s.positions() == 360);
    for (int p = 0; p < 8; ++p) {
      const double tx_angle = std::atan2(s.tx[std::size_t(p)].y, s.tx[std::size_t(p)].x);
      const std::vector<int> rows = s.receivers_of(p);
      REQUIRE(rows.size() == 241);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const Point r = s.rx[std::size_t(rows[i])];
        double rel = (std::atan2(r.y, r.x) - tx_angle) * 180.0 / std::numbers::pi;
        rel = std::fmod(rel + 720.0, 360.0);
        CHECK(std::abs(rel - (60.0 + double(i))) < 1e-9);
      }
    }
  }

  TEST_CASE("per-transmitter receiver lists") {
    const SensorArray s = per_transmitter_array(2.0, {0.0, 90.0}, {{30.0, 90.0}, {390.0, 180.0}});
    CHECK(s.positions() == 3);
    CHECK(s.receivers() == 2);
    CHECK(s.receivers_of(1)[0] == s.receivers_of(0)[0]);
    const CVec all = (CVec(3) << 1.0, 2.0, 3.0).finished();
    CHECK(s.recorded(0, all) == (CVec(2) << 1.0, 2.0).finished());
    CHECK(s.recorded(1, all) == (CVec(2) << 1.0, 3.0).finished());
    CHECK_THROWS_AS(s.recorded(0, CVec(2)), DomainError);

    const ImagingGrid g = ImagingGrid::square(4, 0.2);
    CHECK_NOTHROW(s.validate(g));
    SensorArray own = s;
    own.listens[1] = {1, 2};  // receiver 1 sits on transmitter 1
    CHECK_THROWS_AS(own.validate(g), GeometryError);
    SensorArray uneven = s;
    uneven.listens[1] = {0};
    CHECK_THROWS_AS(uneven.validate(g), GeometryError);
    SensorArray repeated = s;
    repeated.listens[0] = {0, 0};
    CHECK_THROWS_AS(repeated.validate(g), GeometryError);
  }

  TEST_CASE("sensor validation") {
    const ImagingGrid g = ImagingGrid::square(8, 0.2);
    CHECK_NOTHROW(fresnel_geometry().validate(g));
    SensorArray bad = fresnel_geometry();
    bad.rx[3] = {0.01, 0.0};
    CHECK_THROWS_AS(bad.validate(g), GeometryError);
    SensorArray empty;
    empty.tx = {{1.0, 0.0}};
    CHECK_THROWS_AS(empty.validate(g), GeometryError);
  }

  TEST_CASE("frequency set ordering") {
    CHECK_THROWS_AS(FrequencySet({2e9, 1e9}), ConfigError);
    CHECK_THROWS_AS(FrequencySet({0.0}), ConfigError);
    CHECK_THROWS_AS(FrequencySet({1e9, 1e9}), ConfigError);
    const FrequencySet f({1e9});
    CHECK(f.omega(0) == doctest::Approx(2 * std::numbers::pi * 1e9));
    CHECK(f.wavenumber(0) ==
          doctest::Approx(f.omega(0) * std::sqrt(kVacuum.mu0 * kVacuum.eps0)).epsilon(1e-14));
  }

  TEST_CASE("rasterize empty scene is background") {
    const ImagingGrid g = ImagingGrid::square(10, 0.1);
    const ContrastMap m = rasterize(SceneSpec{"empty", {}}, g);
    CHECK(m.values().cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.matches(g));
  }

  TEST_CASE("FoamDielExt rasterizes into two disks") {
    const ImagingGrid g = ImagingGrid::square(64, 0.16);
    const ContrastMap m = rasterize(foam_diel_ext(), g);
    int foam = 0, plastic = 0;
    for (int i = 0; i < m.size(); ++i) {
      CHECK(m[i].imag() == 0.0);
      if (std::abs(m[i] - cplx(0.45)) < 1e-15) ++foam;
      if (std::abs(m[i] - cplx(2.0)) < 1e-15) ++plastic;
    }
    const double cell = g.cell_area();
    CHECK(foam * cell == doctest::Approx(std::numbers::pi * 0.04 * 0.04).epsilon(0.05));
    CHECK(plastic * cell == doctest::Approx(std::numbers::pi * 0.0155 * 0.0155).epsilon(0.1));
    // Plastic sits on the -x side and the foam centre is foam.
    auto value_at = [&](double x, double y) {
      const int ix = int((x + 0.08) / g.cell_size()), iy = int((y + 0.08) / g.cell_size());
      return m[g.index(ix, iy)];
    };
    CHECK(std::abs(value_at(0.001, 0.001) - cplx(0.45)) < 1e-15);
    CHECK(value_at(-0.0555, 0.001) == cplx(2.0));
    CHECK(value_at(0.06, 0.06) == cplx(0.0));
  }

  TEST_CASE("disk area matches a supersampled oracle") {
    const ImagingGrid g = ImagingGrid::square(80, 0.2);
    const double r = 0.061;
    const SceneSpec s{"disk", {{Primitive::Kind::circle, {0.003, -0.002}, 0.0, r, 2.0, "d"}}};
    const ContrastMap m = rasterize(s, g);
    int count = 0;
    for (int i = 0; i < m.size(); ++i) count += m[i] != cplx(0.0);
    // Oracle: fraction of a fine sub-grid inside the circle.
    const int sub = 2000;
    const double h = 0.2 / sub;
    long inside = 0;
    for (int j = 0; j < sub; ++j)
      for (int i = 0; i < sub; ++i) {
        const double x = -0.1 + (i + 0.5) * h - 0.003, y = -0.1 + (j + 0.5) * h + 0.002;
        inside += x * x + y * y <= r * r;
      }
    const double oracle_cells = double(inside) * h * h / g.cell_area();
    CHECK(std::abs(count - oracle_cells) / oracle_cells < 0.02);
  }

  TEST_CASE("grid refinement changes disk area by less than the perimeter bound") {
    const SceneSpec s{"disk", {{Primitive::Kind::circle, {0.0, 0.0}, 0.0, 0.05, 2.0, "d"}}};
    for (int n : {20, 40, 80}) {
      const ImagingGrid coarse = ImagingGrid::square(n, 0.16), fine = ImagingGrid::square(2 * n, 0.16);
      auto area = [&](const ImagingGrid& g) {
        const ContrastMap m = rasterize(s, g);
        int c = 0;
        for (int i = 0; i < m.size(); ++i) c += m[i] != cplx(0.0);
        return c * g.cell_area();
      };
      CHECK(std::abs(area(coarse) - area(fine)) <= 2 * std::numbers::pi * 0.05 * coarse.cell_size());
    }
  }

  TEST_CASE("rasterize is pure and the last primitive wins") {
    const ImagingGrid g = ImagingGrid::square(32, 0.16);
    const ContrastMap a = rasterize(foam_diel_int(), g), b = rasterize(foam_diel_int(), g);
    CHECK(a.values() == b.values());
    const int centre = g.index(15, 16);  // near (-5 mm, 0): plastic drawn over foam
    CHECK(a[centre] == cplx(2.0));
  }

  TEST_CASE("rasterize rejects invalid primitives") {
    const ImagingGrid g = ImagingGrid::square(16, 0.1);
    CHECK_THROWS_AS(rasterize({"x", {{Primitive::Kind::circle, {0.0, 0.0}, 0.0, 0.2, 2.0, "big"}}}, g), ConfigError);
    CHECK_THROWS_AS(rasterize({"x", {{Primitive::Kind::circle, {0.0, 0.0}, 0.0, 0.02, 0.9, "low"}}}, g), ConfigError);
    CHECK_THROWS_AS(rasterize({"x", {{Primitive::Kind::annulus, {0.0, 0.0}, 0.03, 0.02, 2.0, "a"}}}, g), ConfigError);
  }

  TEST_CASE("annulus leaves its hole empty") {
    const ImagingGrid g = ImagingGrid::square(40, 0.1);
    const ContrastMap m = rasterize({"ring", {{Primitive::Kind::annulus, {0.0, 0.0}, 0.015, 0.04, 3.0, "r"}}}, g);
    CHECK(m[g.index(20, 20)] == cplx(0.0));
    CHECK(m[g.index(20 + 11, 20)] == cplx(2.0));
  }

  TEST_CASE("permittivity accessor") {
    CVec v(2);
    v << cplx(0.5, -0.1), cplx(0.0);
    const ContrastMap m(2, 1, v);
    CHECK(m.permittivity(0) == doctest::Approx(1.5));
    CHECK(m.permittivity()[1] == 1.0);
    CHECK_THROWS(ContrastMap(3, 1, v));
  }
}
