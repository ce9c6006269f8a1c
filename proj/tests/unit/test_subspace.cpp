#include <doctest.h>

#include <cmath>

#include "scatlab/subspace.hpp"
#include "unit/helpers.hpp"

using namespace scatlab;
using testing::rel;

namespace {

GreensOperators small_problem() {
  const ImagingGrid grid = ImagingGrid::square(12, 0.08);
  return build_greens(grid, testing::ring(4, 60, 1.2), FrequencySet({3e9}));
}

}  // namespace

TEST_SUITE("subspace") {
  TEST_CASE("diagonal matrix singular values are sorted magnitudes") {
    CMat d = CMat::Zero(4, 4);
    d(0, 0) = cplx(0.0, 2.0);
    d(1, 1) = -5.0;
    d(2, 2) = cplx(0.3, 0.4);
    d(3, 3) = 1.0;
    const FrequencySubspace s = decompose(d, {1e-6, {}});
    CHECK(s.sigma[0] == doctest::Approx(5.0));
    CHECK(s.sigma[1] == doctest::Approx(2.0));
    CHECK(s.sigma[2] == doctest::Approx(1.0));
    CHECK(s.sigma[3] == doctest::Approx(0.5));
    CHECK(s.rank == 4);
  }

  TEST_CASE("reconstruction and ordering") {
    const GreensOperators g = small_problem();
    const FrequencySubspace s = decompose(g.receiver[0]);
    const CMat rec = s.U * s.sigma.cast<cplx>().asDiagonal() * s.V.adjoint();
    CHECK((rec - g.receiver[0]).norm() / g.receiver[0].norm() < 1e-10);
    for (Eigen::Index i = 1; i < s.sigma.size(); ++i) CHECK(s.sigma[i] <= s.sigma[i - 1]);
    CHECK(s.sigma.minCoeff() >= 0.0);
    // Ratio rule: the last retained value passes, the next one fails.
    CHECK(s.sigma[s.rank - 1] / s.sigma[0] >= 1e-3);
    if (s.rank < s.sigma.size()) CHECK(s.sigma[s.rank] / s.sigma[0] < 1e-3);
  }

  TEST_CASE("spectrum decays past twice k0 times the domain radius") {
    const ImagingGrid grid = ImagingGrid::square(32, 0.16);
    const FrequencySet f({3e9});
    const GreensOperators g = build_greens(grid, fresnel_geometry(), f);
    const FrequencySubspace s = decompose(g.receiver[0]);
    const double radius = 0.08 * std::sqrt(2.0);
    const int knee = int(std::ceil(2 * f.wavenumber(0) * radius));
    const int limit = int(std::ceil(1.5 * knee));
    REQUIRE(limit < s.sigma.size());
    CHECK(s.sigma[limit] / s.sigma[0] <= 1e-3);
  }

  TEST_CASE("fixed rank and failure modes") {
    const GreensOperators g = small_problem();
    CHECK(decompose(g.receiver[0], {1e-3, 5}).rank == 5);
    CHECK_THROWS_AS(decompose(g.receiver[0], {1e-3, 0}), ConfigError);
    CHECK_THROWS_AS(decompose(g.receiver[0], {1e-3, 10000}), ConfigError);
    CHECK_THROWS_AS(decompose(CMat::Zero(3, 3)), NumericalError);
  }

  TEST_CASE("dominant current of a single singular vector") {
    const GreensOperators g = small_problem();
    const FrequencySubspace s = decompose(g.receiver[0]);
    CVec coeff;
    const CVec w = dominant_current(s, s.sigma[0] * s.U.col(0), &coeff);
    CVec e1 = CVec::Zero(s.rank);
    e1[0] = 1.0;
    CHECK((coeff - e1).norm() < 1e-12);
    CHECK((w - s.V.col(0)).norm() < 1e-12);
    CHECK(dominant_current(s, CVec::Zero(s.U.rows())).norm() == 0.0);
  }

  TEST_CASE("projection identity, minimum norm and noise robustness") {
    const GreensOperators g = small_problem();
    const FrequencySubspace s = decompose(g.receiver[0]);
    std::mt19937_64 rng(5);
    const CVec data = testing::random_cvec(g.receivers(), rng);
    const CVec wplus = dominant_current(s, data);
    const CMat up = s.U.leftCols(s.rank);
    const CVec projection = up * (up.adjoint() * data);
    CHECK(rel(g.receiver[0] * wplus, projection) < 1e-10);

    // Adding null-space components keeps the data fit and only grows the norm.
    const CMat null_projector = CMat::Identity(g.cells(), g.cells()) - s.V * s.V.adjoint();
    for (int t = 0; t < 20; ++t) {
      const CVec w = wplus + null_projector * testing::random_cvec(g.cells(), rng);
      CHECK(rel(g.receiver[0] * w, projection) < 1e-10);
      CHECK(wplus.norm() <= w.norm());
    }

    const CVec raw = testing::random_cvec(g.receivers(), rng);
    const CVec noise = raw - up * (up.adjoint() * raw);
    CHECK(rel(dominant_current(s, data + noise), wplus) < 1e-10);
  }

  TEST_CASE("dominant current per (k, p)") {
    const GreensOperators g = small_problem();
    const SubspaceDecomposition d = decompose(g);
    std::mt19937_64 rng(9);
    KPArray<CVec> data(1, 4, CVec::Zero(g.receivers()));
    data(0, 0) = testing::random_cvec(g.receivers(), rng);
    const DominantCurrent dc = dominant_current(d, data);
    CHECK(dc.current(0, 0).norm() > 0.0);
    CHECK(dc.current(0, 1).norm() == 0.0);
    CHECK(dc.coefficients(0, 0).size() == d.at(0, 0).rank);
    CHECK_THROWS_AS(dominant_current(d, KPArray<CVec>(1, 2)), DomainError);
  }

  TEST_CASE("per-transmitter receiver lists get their own decomposition") {
    const ImagingGrid grid = ImagingGrid::square(8, 0.08);
    const SensorArray arr = per_transmitter_array(1.0, {0.0, 180.0}, {
                                                               {60.0, 90.0, 120.0, 150.0, 180.0, 210.0},
                                                               {240.0, 270.0, 300.0, 330.0, 0.0, 30.0}});
    const GreensOperators g = build_greens(grid, arr, FrequencySet({2e9, 3e9}));
    const SubspaceDecomposition d = decompose(g, {}, Execution::serial);
    CHECK(d.blocks.size() == 4);
    for (int k = 0; k < 2; ++k)
      for (int p = 0; p < 2; ++p) {
        const std::vector<int> rows = arr.receivers_of(p);
        CMat sub(6, g.cells());
        for (int i = 0; i < 6; ++i) sub.row(i) = g.receiver[std::size_t(k)].row(rows[std::size_t(i)]);
        const FrequencySubspace ref = decompose(sub);
        CHECK((d.at(k, p).sigma - ref.sigma).norm() < 1e-12 * ref.sigma[0]);
        CHECK(d.at(k, p).U.rows() == 6);
      }
    CHECK(&d.at(0, 0) != &d.at(0, 1));
  }
}
