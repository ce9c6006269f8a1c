#include <doctest.h>

#include <cmath>

#include "scatlab/calibration.hpp"
#include "unit/helpers.hpp"

using namespace scatlab;

namespace {

struct Instance {
  CVec chi, current, domain_field, inc, sim, meas;
  double n_plus = 1.0;
};

Instance random_instance(std::mt19937_64& rng, int n = 12, int q = 9) {
  Instance s;
  s.chi = 0.3 * testing::random_cvec(n, rng);
  s.current = testing::random_cvec(n, rng);
  s.domain_field = testing::random_cvec(n, rng);
  s.inc = testing::random_cvec(n, rng);
  s.sim = testing::random_cvec(q, rng);
  s.meas = testing::random_cvec(q, rng);
  s.n_plus = 0.5 + std::uniform_real_distribution<double>(0.0, 2.0)(rng);
  return s;
}

LambdaQuadratic quad(const Instance& s) {
  return lambda_quadratic(s.chi, s.current, s.domain_field, s.inc, s.sim, s.meas, s.n_plus);
}

// Cost evaluated straight from the fields, independent of the inner products.
double direct_cost(const Instance& s, cplx lambda, double beta) {
  const CVec state = s.current - s.chi.cwiseProduct(lambda * s.inc + s.domain_field);
  const CVec calib = lambda * s.sim - s.meas;
  return 0.5 * (state.squaredNorm() / s.n_plus + calib.squaredNorm() / s.meas.squaredNorm() +
                beta * std::norm(lambda));
}

}  // namespace

TEST_SUITE("calibration") {
  TEST_CASE("cost from inner products matches the fields") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 10; ++t) {
      const Instance s = random_instance(rng);
      const cplx lambda = testing::random_cplx(rng);
      CHECK(lambda_cost(quad(s), lambda, 0.3) == doctest::Approx(direct_cost(s, lambda, 0.3)).epsilon(1e-12));
    }
  }

  TEST_CASE("gradient matches central finite differences on 50 random instances") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
      const Instance s = random_instance(rng);
      const double beta = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
      const cplx lambda = testing::random_cplx(rng);
      const double h = 1e-5;
      const double d_re = (direct_cost(s, lambda + h, beta) - direct_cost(s, lambda - h, beta)) / (2 * h);
      const double d_im =
          (direct_cost(s, lambda + cplx(0, h), beta) - direct_cost(s, lambda - cplx(0, h), beta)) / (2 * h);
      const cplx g = gradient(quad(s), lambda, beta);
      CHECK(std::abs(g - cplx(d_re, d_im)) / std::abs(g) < 1e-6);
    }
  }

  TEST_CASE("gradient vanishes at the analytic minimizer when the contrast is zero") {
    std::mt19937_64 rng(3);
    Instance s = random_instance(rng);
    s.chi.setZero();
    const double beta = 0.25;
    const double ee = s.meas.squaredNorm();
    const cplx star = s.sim.dot(s.meas) / (s.sim.squaredNorm() + beta * ee);
    CHECK(std::abs(gradient(quad(s), star, beta)) < 1e-12);
  }

  TEST_CASE("regularizer-only gradient") {
    const LambdaQuadratic q{};
    CHECK(gradient(q, cplx(0.3, -2.0), 0.7) == 0.7 * cplx(0.3, -2.0));
  }

  TEST_CASE("direction rules") {
    const cplx g(1.0, -0.5), g_prev(0.2, 0.4), d_prev(-0.3, 0.1);
    CHECK(direction(g, g_prev, d_prev, false) == -g);
    CHECK(direction(g, g, d_prev, true) == -g);
    const cplx d = direction(g, g_prev, d_prev, true);
    CHECK((std::conj(d) * g).real() < 0.0);
    const double pr = std::max(0.0, (std::conj(g) * (g - g_prev)).real() / std::norm(g_prev));
    CHECK(std::abs(d - (-g + pr * d_prev)) < 1e-15);
  }

  TEST_CASE("exact step beats 100 random probes") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 5; ++t) {
      const Instance s = random_instance(rng);
      const LambdaQuadratic q = quad(s);
      const double beta = 0.1;
      const cplx lambda = testing::random_cplx(rng);
      const cplx d = testing::random_cplx(rng);
      const cplx alpha = step_size(q, lambda, d, beta);
      const double best = direct_cost(s, lambda + alpha * d, beta);
      for (int i = 0; i < 100; ++i) {
        const cplx probe = alpha + testing::random_cplx(rng) * std::pow(10.0, double(i % 7) - 4.0);
        CHECK(best <= direct_cost(s, lambda + probe * d, beta) + 1e-12);
      }
    }
  }

  TEST_CASE("regularizer-only step lands on zero") {
    const LambdaQuadratic q{};
    CHECK(step_size(q, 1.0, -1.0, 2.0) == cplx(1.0));
  }

  TEST_CASE("zero-contrast step reaches the analytic minimizer from any start") {
    std::mt19937_64 rng(5);
    Instance s = random_instance(rng);
    s.chi.setZero();
    const double beta = 1e-3;
    const LambdaQuadratic q = quad(s);
    const cplx star = s.sim.dot(s.meas) / (s.sim.squaredNorm() + beta * s.meas.squaredNorm());
    for (int t = 0; t < 10; ++t) {
      const cplx lambda = 3.0 * testing::random_cplx(rng);
      const cplx d = -gradient(q, lambda, beta);
      CHECK(std::abs(lambda + step_size(q, lambda, d, beta) * d - star) < 1e-12 * std::abs(star));
    }
  }

  TEST_CASE("zero curvature gives a zero step and a warning") {
    testing::WarningCapture w;
    const LambdaQuadratic q{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0};
    CHECK(step_size(q, 1.0, cplx(0.5, 0.5), 0.0) == cplx(0.0));
    REQUIRE(w.messages.size() == 1);
    CHECK(w.messages[0].find("zero curvature") != std::string::npos);
  }

  TEST_CASE("one-variable quadratic converges within two updates") {
    std::mt19937_64 rng(6);
    const Instance s = random_instance(rng);
    KPArray<LambdaQuadratic> q(1, 1);
    q(0, 0) = quad(s);
    CalibrationState st = CalibrationState::initial(1, 1, CalibrationMode::per_tx, LambdaDomain::complex);
    update(st, q, 0.2, 2);
    CHECK(std::abs(gradient(q(0, 0), st.lambda(0, 0), 0.2)) < 1e-14 * curvature(q(0, 0), 0.2));
  }

  TEST_CASE("update never increases the cost") {
    std::mt19937_64 rng(7);
    for (CalibrationMode mode : {CalibrationMode::joint, CalibrationMode::per_tx})
      for (LambdaDomain dom : {LambdaDomain::real, LambdaDomain::complex}) {
        KPArray<LambdaQuadratic> q(2, 3);
        for (auto& x : q) x = quad(random_instance(rng));
        CalibrationState st = CalibrationState::initial(2, 3, mode, dom);
        auto total = [&] {
          double c = 0.0;
          for (int k = 0; k < 2; ++k)
            for (int p = 0; p < 3; ++p) c += lambda_cost(q(k, p), st.lambda(k, p), 0.05);
          return c;
        };
        double prev = total();
        for (int i = 0; i < 5; ++i) {
          update(st, q, 0.05);
          const double now = total();
          CHECK(now <= prev + 1e-12);
          prev = now;
        }
        for (int k = 0; k < 2; ++k)
          for (int p = 0; p < 3; ++p) {
            if (dom == LambdaDomain::real) CHECK(st.lambda(k, p).imag() == 0.0);
            if (mode == CalibrationMode::joint) CHECK(st.lambda(k, p) == st.lambda(k, 0));
          }
      }
  }

  TEST_CASE("joint and per-transmitter agree when every transmitter sees the same data") {
    std::mt19937_64 rng(8);
    const LambdaQuadratic one = quad(random_instance(rng));
    KPArray<LambdaQuadratic> q(1, 4, one);
    CalibrationState joint = CalibrationState::initial(1, 4, CalibrationMode::joint, LambdaDomain::complex);
    CalibrationState per = CalibrationState::initial(1, 4, CalibrationMode::per_tx, LambdaDomain::complex);
    for (int i = 0; i < 3; ++i) {
      update(joint, q, 0.1);
      update(per, q, 0.1);
    }
    for (int p = 0; p < 4; ++p) CHECK(std::abs(joint.lambda(0, p) - per.lambda(0, p)) < 1e-14);
  }

  TEST_CASE("calibration off leaves lambda at one") {
    std::mt19937_64 rng(9);
    KPArray<LambdaQuadratic> q(1, 2);
    for (auto& x : q) x = quad(random_instance(rng));
    CalibrationState st = CalibrationState::initial(1, 2, CalibrationMode::none, LambdaDomain::complex);
    CHECK(update(st, q, 0.1) == 0);
    CHECK(st.lambda(0, 0) == cplx(1.0));
    CHECK(st.lambda(0, 1) == cplx(1.0));
  }

  TEST_CASE("real calibration leaves a larger receiver residual on phase-shifted data") {
    std::mt19937_64 rng(10);
    Instance s = random_instance(rng);
    s.chi.setZero();
    s.meas = std::polar(2.0, 1.1) * s.sim;
    KPArray<LambdaQuadratic> q(1, 1, quad(s));
    CalibrationState re = CalibrationState::initial(1, 1, CalibrationMode::per_tx, LambdaDomain::real);
    CalibrationState cx = CalibrationState::initial(1, 1, CalibrationMode::per_tx, LambdaDomain::complex);
    update(re, q, 0.0, 3);
    update(cx, q, 0.0, 3);
    auto residual = [&](cplx l) { return (l * s.sim - s.meas).squaredNorm(); };
    CHECK(residual(re.lambda(0, 0)) > residual(cx.lambda(0, 0)));
    CHECK(residual(cx.lambda(0, 0)) < 1e-20 * s.meas.squaredNorm());
  }

  TEST_CASE("scaling the simulated field scales the fitted factor inversely") {
    std::mt19937_64 rng(11);
    Instance s = random_instance(rng);
    s.chi.setZero();
    const cplx c(0.4, -1.7);
    Instance scaled = s;
    scaled.sim *= c;
    KPArray<LambdaQuadratic> qa(1, 1, quad(s)), qb(1, 1, quad(scaled));
    CalibrationState a = CalibrationState::initial(1, 1, CalibrationMode::per_tx, LambdaDomain::complex);
    CalibrationState b = a;
    update(a, qa, 0.0);
    update(b, qb, 0.0);
    CHECK(std::abs(b.lambda(0, 0) * c - a.lambda(0, 0)) < 1e-12 * std::abs(a.lambda(0, 0)));
    CHECK(testing::rel(b.lambda(0, 0) * scaled.sim, a.lambda(0, 0) * s.sim) < 1e-12);
  }
}
