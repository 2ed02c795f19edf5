#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "effham/error.hpp"
#include "effham/hamiltonian.hpp"
#include "effham/io.hpp"
#include "support/random_models.hpp"

using namespace effham;
using Catch::Matchers::WithinAbs;

namespace {

double drift_h(double p, double f) { return 0.5 * (p + f) * (p + f) - 0.5 * f * f; }

// Exact eigenvalue of the fitted scheme for an affine potential: constant
// eigenvector, one cosh term per axis.
double fitted_drift_h(std::span<const double> p, std::span<const double> f, int n) {
  const double h = 1.0 / n;
  double s = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    s += (std::cosh((f[a] + p[a]) * h) - std::cosh(f[a] * h)) / (h * h);
  }
  return s;
}

DiscreteModel constant_lattice(double plus, double minus, int length = 4,
                               Regime regime = Regime::kI) {
  const double rp[1] = {plus};
  const double rm[1] = {minus};
  return DiscreteModel::uniform(length, rp, rm, Eigen::MatrixXd::Zero(1, 1), regime);
}

double closed_lattice(double p, double plus, double minus) {
  return plus * (std::exp(p) - 1) + minus * (std::exp(-p) - 1);
}

SolverParams coarse(int n = 128) {
  SolverParams s;
  s.resolution = n;
  return s;
}

}  // namespace

TEST_CASE("H(0) vanishes on every path") {
  std::mt19937_64 rng(31);
  const SolverParams params = coarse(64);
  for (int trial = 0; trial < 8; ++trial) {
    const Regime regime = trial % 2 ? Regime::kII : Regime::kI;
    const std::vector<Model> models{testing::random_continuous(rng, 1 + trial % 3, regime),
                                    testing::random_discrete(rng, 3 + trial, 2, regime)};
    for (const auto& m : models) {
      REQUIRE(validate(m).valid());
      CHECK(std::abs(hamiltonian_at(m, 0.0, params).value) <= 10 * params.tol);
    }
  }
}

TEST_CASE("closed-form values") {
  const auto drift = preset("constant_drift(1)");
  CHECK_THAT(hamiltonian_at(drift, 1.0).value, WithinAbs(1.5, 1e-3));

  const auto lattice = constant_lattice(2, 1);
  const auto h = hamiltonian_at(lattice, 1.0);
  CHECK_THAT(h.value, WithinAbs(2 * (std::exp(1.0) - 1) + (std::exp(-1.0) - 1), 1e-10));
  CHECK(h.certificate.residual <= 1e-10);
}

TEST_CASE("constant drift sweep follows the quadratic") {
  const auto table = sweep(preset("constant_drift(1)"), -3, 3, 61);
  REQUIRE(table.complete());
  REQUIRE(table.samples.size() == 61);
  double worst = 0.0;
  for (const auto& s : table.samples) {
    worst = std::max(worst, std::abs(s.value - drift_h(s.momentum[0], 1.0)));
    CHECK_THAT(s.value, WithinAbs(fitted_drift_h(s.momentum, std::vector<double>{1.0}, 256), 1e-9));
  }
  CHECK(worst <= 1e-3);
  CHECK(convexity_report(table).passes(1e-6));
  CHECK_FALSE(table.provenance.grid_augmented);

  const auto sym = symmetry_check(table);
  CHECK_THAT(sym.max_asymmetry, WithinAbs(6.0, 2e-3));
  REQUIRE(sym.location.size() == 1);
  CHECK(std::abs(sym.location[0]) == 3.0);

  const auto co = coercivity_check(table, preset("constant_drift(1)"));
  CHECK(co.holds);
}

TEST_CASE("grid gets a zero sample and failures are recorded, not thrown") {
  const auto t = sweep(constant_lattice(2, 1), -1, 1, 4);
  CHECK(t.provenance.grid_augmented);
  REQUIRE(t.find(0.0) != nullptr);
  CHECK(t.samples.size() == 5);

  SolverParams central = coarse(64);
  central.scheme = Discretization::kCentralDifference;
  const auto bad = sweep(preset("constant_drift(1)"), -300, 300, 5, central);
  CHECK(bad.failures() == 4);
  CHECK_FALSE(bad.complete());
  REQUIRE(bad.find(0.0) != nullptr);
  CHECK(bad.find(0.0)->ok());
  CHECK(bad.find(300.0)->error.find("N >=") != std::string::npos);
}

TEST_CASE("solver tolerance changes values only within tolerance") {
  const auto m = preset("tilted_cosine(0.5)");
  SolverParams loose = coarse();
  loose.tol = 1e-8;
  const auto a = sweep(m, -2, 2, 9, loose);
  const auto b = sweep(m, -2, 2, 9, coarse());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    CHECK_THAT(a.samples[k].value, WithinAbs(b.samples[k].value, 1e-7));
  }
}

TEST_CASE("sweeps are independent of the thread count") {
  const auto m = preset("two_state_flashing");
  const auto a = sweep(m, -1, 1, 9, coarse(64), {false, 1});
  const auto b = sweep(m, -1, 1, 9, coarse(64), {false, 4});
  for (std::size_t k = 0; k < a.samples.size(); ++k) CHECK(a.samples[k].value == b.samples[k].value);
}

TEST_CASE("velocity examples") {
  const auto drift = velocity(sweep_points(preset("constant_drift(1)"), {-2e-3, -1e-3, 0, 1e-3, 2e-3}));
  CHECK_THAT(drift.velocity[0], WithinAbs(1.0, 1e-4));
  CHECK(drift.delta == Catch::Approx(1e-3));

  const auto db = velocity_probe(preset("detailed_balance_pair"), coarse());
  CHECK_THAT(db.velocity[0], WithinAbs(0.0, 1e-6));

  const auto lattice = velocity_probe(constant_lattice(2, 1));
  CHECK_THAT(lattice.velocity[0], WithinAbs(1.0, 1e-8));
  CHECK(lattice.error_estimate[0] <= 1e-5);

  CHECK_THROWS_AS(velocity(sweep(constant_lattice(2, 1), -1, 1, 3)), ConfigError);
}

TEST_CASE("detailed balance and constant averaged rates give symmetric tables") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 4; ++trial) {
    const auto db = testing::random_detailed_balance(rng, 2 + trial % 2);
    CHECK(symmetry_check(sweep(db, -2, 2, 9, coarse())).max_asymmetry <= 1e-6);
    const auto avg = testing::random_continuous(rng, 3, Regime::kII, true);
    CHECK(symmetry_check(sweep(avg, -2, 2, 9, coarse())).max_asymmetry <= 1e-6);
  }
  CHECK(symmetry_check(sweep(testing::random_imbalanced(rng), -2, 2, 9, coarse())).max_asymmetry > 1e-3);
}

TEST_CASE("swept random models are convex and coercive") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 6; ++trial) {
    const Regime regime = trial % 2 ? Regime::kII : Regime::kI;
    const std::vector<Model> models{testing::random_continuous(rng, 2, regime),
                                    testing::random_discrete(rng, 5, 2, regime)};
    for (const auto& m : models) {
      const auto t = sweep(m, -3, 3, 25, coarse());
      REQUIRE(t.complete());
      CHECK(convexity_report(t).passes(1e-6));
      CHECK(coercivity_check(t, m).holds);
    }
  }
}

TEST_CASE("lattice bound is saturated by constant rates") {
  const auto m = constant_lattice(2, 1);
  const auto t = sweep(m, -3, 3, 13);
  const auto co = coercivity_check(t, m);
  CHECK(co.holds);
  CHECK(std::abs(co.min_margin) <= 1e-8);
  const double p[1] = {1.5};
  CHECK_THAT(coercivity_bound(m, p, 0), WithinAbs(closed_lattice(1.5, 2, 1), 1e-14));
}

TEST_CASE("Legendre transform of tabulated p^2/2") {
  const auto t = tabulate(1, uniform_grid(-4, 4, 161),
                          [](std::span<const double> p) { return 0.5 * p[0] * p[0]; });
  CHECK(convexity_report(t).max_violation <= 1e-12);
  const auto l = legendre(t, uniform_grid(-2, 2, 41));
  for (const auto& s : l.samples) {
    CHECK_THAT(s.value, WithinAbs(0.5 * s.velocity[0] * s.velocity[0], 1e-6));
    CHECK_FALSE(s.boundary);
  }
  const auto edge = legendre(t, {5.0});
  CHECK(edge.samples[0].boundary);
}

TEST_CASE("Lagrangian of constant drift") {
  const auto m = preset("constant_drift(1)");
  const auto t = sweep(m, -3, 3, 61);
  const auto v = velocity(t).velocity[0];
  const auto l = legendre(t, uniform_grid(0, 2, 41));
  for (const auto& s : l.samples) {
    CHECK_THAT(s.value, WithinAbs(0.5 * (1 - s.velocity[0]) * (1 - s.velocity[0]), 2e-3));
    CHECK(s.value >= -10 * 1e-10);
  }
  const auto lv = legendre(t, {v});
  CHECK(lv.samples[0].value <= 1e-6);

  const auto wide = legendre(t, uniform_grid(-1, 3, 81));
  CHECK(std::abs(path_rate({{0, {0}}, {1, {v}}}, wide)) <= 1e-5);
  CHECK_THAT(path_rate({{0, {0}}, {1, {0}}}, wide), WithinAbs(0.5, 3e-3));
  CHECK_THAT(path_rate({{0, {0}}, {1, {0}}}, wide, 0.25), WithinAbs(0.75, 3e-3));

  const double r1 = path_rate({{0, {0}}, {1, {0.3}}}, wide);
  const double r2 = path_rate({{0, {0}}, {1, {1.8}}}, wide);
  const double both = path_rate({{0, {0}}, {0.5, {0.15}}, {1, {1.05}}}, wide);
  CHECK_THAT(both, WithinAbs(0.5 * (r1 + r2), 1e-12));

  CHECK_THROWS_AS(path_rate({{0, {0}}, {1, {10}}}, wide), NumericalError);
  CHECK_THROWS(path_rate({{0, {0}}, {0, {1}}}, wide));
}

TEST_CASE("Young inequality on sampled pairs") {
  const auto m = preset("two_state_flashing");
  const auto t = sweep(m, -3, 3, 31, coarse());
  const auto l = legendre(t, uniform_grid(-1, 1, 21));
  for (const auto& ls : l.samples) {
    if (ls.boundary) continue;
    CHECK(ls.value >= -1e-9);
    for (const auto& hs : t.samples) {
      CHECK(hs.momentum[0] * ls.velocity[0] <= ls.value + hs.value + 1e-6);
    }
  }
}

TEST_CASE("fast switching approaches the averaged lattice") {
  std::mt19937_64 rng(34);
  const auto m = testing::random_discrete(rng, 4, 2);
  const double p = 0.7;
  const double averaged = hamiltonian_at(m.with_regime(Regime::kII), p).value;
  double previous = std::numeric_limits<double>::infinity();
  for (double gamma : {10.0, 100.0, 1000.0}) {
    const double d = std::abs(hamiltonian_at(m.with_switching_scaled(gamma), p).value - averaged);
    CHECK(d < previous);
    previous = d;
  }
  CHECK(previous < 1e-2);
}

TEST_CASE("grid refinement is second order") {
  const double p[1] = {0.7};
  const auto r = refine(preset("tilted_cosine(0.5)"), p, 64, 3);
  REQUIRE(r.values.size() == 3);
  CHECK(r.observed_order >= 1.9);
  CHECK(r.error_estimate <= std::abs(r.values[2] - r.values[1]));
  CHECK_THROWS_AS(refine(constant_lattice(2, 1), p, 64), ConfigError);
}

TEST_CASE("two-dimensional constant drift") {
  const std::vector<double> f{1.0, -0.5};
  const ContinuousModel m({PeriodicScalarField::affine({-f[0], -f[1]})},
                          SwitchingRateMatrix::none(2));
  const SolverParams params = coarse(64);
  for (const auto& p : std::vector<std::vector<double>>{{0.5, 1.0}, {-1.0, 0.3}}) {
    const double h = hamiltonian_at(m, p, params).value;
    CHECK_THAT(h, WithinAbs(fitted_drift_h(p, f, 64), 1e-9));
    CHECK_THAT(h, WithinAbs(drift_h(p[0], f[0]) + drift_h(p[1], f[1]), 1e-3));
  }
  const auto lines = sweep(m, -1, 1, 5, params);
  CHECK(lines.lines.size() == 2);
  CHECK(lines.samples.size() == 9);
  const auto v = velocity(sweep_points(m, {-2e-3, -1e-3, 0, 1e-3, 2e-3}, params));
  CHECK_THAT(v.velocity[0], WithinAbs(1.0, 1e-4));
  CHECK_THAT(v.velocity[1], WithinAbs(-0.5, 1e-4));
  CHECK_THROWS(legendre(lines, {0.0}));
}

TEST_CASE("lattice Legendre transform in two dimensions") {
  const auto t = tabulate(2, uniform_grid(-3, 3, 61),
                          [](std::span<const double> p) { return 0.5 * (p[0] * p[0] + p[1] * p[1]); },
                          true);
  CHECK(convexity_report(t).max_violation <= 1e-12);
  const auto l = legendre(t, uniform_grid(-1, 1, 21));
  REQUIRE(l.samples.size() == 441);
  for (const auto& s : l.samples) {
    const double expected = 0.5 * (s.velocity[0] * s.velocity[0] + s.velocity[1] * s.velocity[1]);
    CHECK_THAT(s.value, WithinAbs(expected, 1e-6));
  }
  // Multilinear interpolation of |v|^2/2 on a 0.1 grid errs by at most h^2/8 per axis;
  // this point sits mid-cell on both axes, where the bound is attained.
  const double v[2] = {0.25, -0.55};
  CHECK_THAT(lagrangian_at(l, v), WithinAbs(0.5 * (0.0625 + 0.3025), 2.5e-3 + 1e-12));
}

TEST_CASE("fine grids converge at the rounding floor") {
  SolverParams fine = coarse(2048);
  for (auto method : {EigenMethod::kShiftInvert, EigenMethod::kShiftedPower}) {
    fine.method = method;
    const auto h = hamiltonian_at(preset("quadratic"), 1.3, fine);
    const double step = 1.0 / 2048;
    CHECK_THAT(h.value, WithinAbs((std::cosh(1.3 * step) - 1) / (step * step), 1e-8));
    CHECK(h.certificate.gap() <= 1e-8 * (1 + std::abs(h.value)));
  }
}
