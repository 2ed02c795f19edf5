#include <cmath>
#include <numbers>
#include <random>

#include "catch_amalgamated.hpp"
#include "effham/field.hpp"
#include "support/random_models.hpp"

using namespace effham;
using Catch::Matchers::WithinAbs;

TEST_CASE("zero field evaluates to zero everywhere") {
  const auto f = PeriodicScalarField::zero(2);
  const double y[2] = {0.3, -1.7};
  CHECK(f.value(y) == 0.0);
  CHECK(f.gradient(y) == std::vector<double>{0.0, 0.0});
  CHECK(f.laplacian(y) == 0.0);
}

TEST_CASE("cosine at the origin") {
  const PeriodicScalarField f(1, {{{1}, 1.0, 0.0}});
  const double y[1] = {0.0};
  CHECK(f.value(y) == 1.0);
  CHECK_THAT(f.gradient(y)[0], WithinAbs(0.0, 1e-15));
}

TEST_CASE("cosine gradient matches a central difference") {
  const PeriodicScalarField f(1, {{{1}, 1.0, 0.0}});
  const double h = 1e-5;
  const double y[1] = {0.3}, yp[1] = {0.3 + h}, ym[1] = {0.3 - h};
  const double fd = (f.value(yp) - f.value(ym)) / (2 * h);
  CHECK_THAT(f.gradient(y)[0], WithinAbs(fd, 1e-8));
}

TEST_CASE("derivatives converge to finite differences at second order") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int dim = 1 + trial % 2;
    const auto f = testing::random_potential(rng, dim, 0.7, trial % 3 == 0 ? 0.4 : 0.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> y(dim);
    for (double& c : y) c = u(rng);
    auto errors = [&](double h) {
      double grad_err = 0.0, lap_fd = 0.0;
      const auto g = f.gradient(y);
      for (int a = 0; a < dim; ++a) {
        auto yp = y, ym = y;
        yp[a] += h;
        ym[a] -= h;
        grad_err = std::max(grad_err, std::abs((f.value(yp) - f.value(ym)) / (2 * h) - g[a]));
        lap_fd += (f.value(yp) - 2 * f.value(y) + f.value(ym)) / (h * h);
      }
      return std::pair{grad_err, std::abs(lap_fd - f.laplacian(y))};
    };
    const auto [g3, l3] = errors(1e-3);
    const auto [g4, l4] = errors(1e-4);
    const auto [g2, l2] = errors(1e-2);
    // Step 10x smaller, error 100x smaller: second order. The Laplacian uses
    // larger steps since its round-off grows like 1/h^2.
    if (g3 > 1e-9) CHECK(g3 / g4 == Catch::Approx(100.0).epsilon(0.05));
    if (l2 > 1e-4) CHECK(l2 / l3 == Catch::Approx(100.0).epsilon(0.05));
    (void)l4;
  }
}

TEST_CASE("periodicity holds without a tilt") {
  const PeriodicScalarField f(1, {{{1}, 0.3, -0.2}, {{3}, 0.1, 0.05}}, {}, 2.0);
  const double a[1] = {0.37}, b[1] = {0.37 + 2.0}, c[1] = {0.37 - 6.0};
  CHECK_THAT(f.value(a), WithinAbs(f.value(b), 1e-13));
  CHECK_THAT(f.value(a), WithinAbs(f.value(c), 1e-13));
}

TEST_CASE("affine slope adds a linear term") {
  const auto f = PeriodicScalarField::affine({-1.5});
  const double y[1] = {2.0};
  CHECK(f.value(y) == -3.0);
  CHECK(f.gradient(y)[0] == -1.5);
  CHECK(f.has_slope());
  CHECK(std::isinf(f.upper_bound()));
}

TEST_CASE("dimension mismatch is rejected") {
  const auto f = PeriodicScalarField::zero(2);
  const double y[1] = {0.0};
  CHECK_THROWS_AS(f.value(y), std::invalid_argument);
  CHECK_THROWS_AS(f.gradient(y), std::invalid_argument);
}

TEST_CASE("exponential form evaluates exp of the series") {
  const PeriodicScalarField s(1, {{{1}, 0.4, 0.1}});
  const auto e = PeriodicScalarField::exp_of(s);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const double y[1] = {u(rng)};
    CHECK_THAT(e.value(y), WithinAbs(std::exp(s.value(y)), 1e-14));
    CHECK_THAT(e.gradient(y)[0], WithinAbs(std::exp(s.value(y)) * s.gradient(y)[0], 1e-12));
    CHECK(e.value(y) <= e.upper_bound() * (1 + 1e-12));
    CHECK(e.value(y) >= e.lower_bound() * (1 - 1e-12));
  }
  const auto scaled = e.scaled(2.5);
  const double y[1] = {0.2};
  CHECK_THAT(scaled.value(y), WithinAbs(2.5 * e.value(y), 1e-13));
  CHECK(e.scaled(0.0).value(y) == 0.0);
  CHECK_THROWS(e.scaled(-1.0));
}

TEST_CASE("coefficient bounds enclose sampled values") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = testing::random_potential(rng, 2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
      const double y[2] = {u(rng), u(rng)};
      CHECK(f.value(y) <= f.upper_bound() + 1e-12);
      CHECK(f.value(y) >= f.lower_bound() - 1e-12);
    }
  }
}
