#include <random>

#include "catch_amalgamated.hpp"
#include "effham/error.hpp"
#include "effham/io.hpp"
#include "effham/model.hpp"
#include "support/random_models.hpp"

using namespace effham;
using nlohmann::json;

namespace {

DiscreteModel two_state_discrete(double r12, double r21) {
  const double plus[2] = {1.0, 2.0};
  const double minus[2] = {1.5, 0.5};
  Eigen::MatrixXd s(2, 2);
  s << 0.0, r12, r21, 0.0;
  return DiscreteModel::uniform(4, plus, minus, s);
}

}  // namespace

TEST_CASE("single-state continuous model is valid") {
  std::mt19937_64 rng(1);
  const ContinuousModel m({testing::random_potential(rng)}, SwitchingRateMatrix::none());
  CHECK(validate(m).valid());
}

TEST_CASE("decoupled discrete states are reducible") {
  const auto report = validate(two_state_discrete(0.0, 0.0));
  CHECK_FALSE(report.valid());
  CHECK(report.has(Violation::Kind::kReducibleCoupling));
}

TEST_CASE("a zero hop rate is reported with its location") {
  DiscreteModel::SiteRates plus{{1, 1, 0, 1}, {1, 1, 1, 1}};
  DiscreteModel::SiteRates minus{{1, 1, 1, 1}, {1, 1, 1, 1}};
  DiscreteModel::Switching sw(2, std::vector<std::vector<double>>(2, std::vector<double>(4, 1.0)));
  const DiscreteModel m(4, plus, minus, sw);
  const auto report = validate(m);
  REQUIRE(report.has(Violation::Kind::kNonpositiveHopRate));
  const auto& v = report.violations.front();
  CHECK(v.location.find("state 0") != std::string::npos);
  CHECK(v.location.find("site 2") != std::string::npos);
}

TEST_CASE("negative sampled rate is reported") {
  std::vector<std::vector<PeriodicScalarField>> r(2, std::vector<PeriodicScalarField>(2, PeriodicScalarField::zero(1)));
  r[0][1] = PeriodicScalarField(1, {{{1}, 1.0, 0.0}});  // cos 2 pi y < 0 near y = 1/2
  r[1][0] = PeriodicScalarField::constant(1, 1.0);
  const ContinuousModel m({PeriodicScalarField::zero(1), PeriodicScalarField::zero(1)},
                          SwitchingRateMatrix(r));
  CHECK(validate(m).has(Violation::Kind::kNegativeRate));
}

TEST_CASE("regime II needs irreducibility at every point") {
  std::vector<std::vector<PeriodicScalarField>> r(2, std::vector<PeriodicScalarField>(2, PeriodicScalarField::zero(1)));
  r[0][1] = PeriodicScalarField(1, {{{0}, 1.0, 0.0}, {{1}, 1.0, 0.0}});  // vanishes at y = 1/2
  r[1][0] = PeriodicScalarField::constant(1, 1.0);
  const ContinuousModel m({PeriodicScalarField::zero(1), PeriodicScalarField::zero(1)},
                          SwitchingRateMatrix(r));
  CHECK(validate(m).valid());
  CHECK(validate(m.with_regime(Regime::kII)).has(Violation::Kind::kReducibleAtPoint));
}

TEST_CASE("validation is pure and idempotent") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 5; ++k) {
    const Model m = testing::random_discrete(rng, 3 + k, 2);
    CHECK(validate(m).to_string() == validate(m).to_string());
  }
  const Model bad = two_state_discrete(0.0, 0.0);
  CHECK(validate(bad).to_string() == validate(bad).to_string());
}

TEST_CASE("structural errors are thrown at construction") {
  CHECK_THROWS_AS(ContinuousModel({PeriodicScalarField::zero(1)}, SwitchingRateMatrix::none(2)),
                  ModelError);
  CHECK_THROWS_AS(ContinuousModel({PeriodicScalarField::zero(1), PeriodicScalarField::zero(2)},
                                  SwitchingRateMatrix::constant(Eigen::MatrixXd::Ones(2, 2))),
                  ModelError);
  const double one[1] = {1.0};
  CHECK_THROWS_AS(DiscreteModel::uniform(1, one, one, Eigen::MatrixXd::Zero(1, 1)), ModelError);
}

TEST_CASE("model JSON round-trips") {
  std::mt19937_64 rng(9);
  std::vector<Model> models{testing::random_continuous(rng, 3), testing::random_discrete(rng, 5, 2),
                            preset("detailed_balance_pair"), preset("two_state_flashing"),
                            preset("discrete_asymmetric(2,1)")};
  for (const auto& m : models) {
    const json j = model_to_json(m);
    const Model back = model_from_json(j);
    CHECK(model_to_json(back) == j);
  }
}

TEST_CASE("model JSON rejects unknown keys and bad shapes") {
  const json good = {{"kind", "continuous"},
                     {"dim", 1},
                     {"J", 1},
                     {"regime", "I"},
                     {"potentials", {{{"coeffs", {{1, 0.5, 0.0}}}, {"slope", {0.0}}}}}};
  CHECK_NOTHROW(model_from_json(good));
  json extra = good;
  extra["colour"] = "blue";
  CHECK_THROWS_AS(model_from_json(extra), ConfigError);
  json bad_field = good;
  bad_field["potentials"][0]["amplitude"] = 1;
  CHECK_THROWS_AS(model_from_json(bad_field), ConfigError);
  json bad_coeff = good;
  bad_coeff["potentials"][0]["coeffs"] = {{1, 0.5}};
  CHECK_THROWS_AS(model_from_json(bad_coeff), ConfigError);
  json bad_regime = good;
  bad_regime["regime"] = "III";
  CHECK_THROWS_AS(model_from_json(bad_regime), ConfigError);
  CHECK_THROWS_AS(model_from_json(json{{"kind", "lattice"}}), ConfigError);
}

TEST_CASE("presets parse and validate") {
  for (const auto* name : {"constant_drift(1)", "constant_drift(-0.5)", "tilted_cosine(0.3)",
                           "two_state_flashing", "discrete_asymmetric(2, 1)",
                           "detailed_balance_pair", "quadratic", "constant_drift"}) {
    INFO(name);
    const Model m = preset(name);
    CHECK(validate(m).valid());
  }
  CHECK(name_of(preset("constant_drift(1)")) == "constant_drift(1)");
  CHECK_THROWS_AS(preset("no_such_model"), ConfigError);
  CHECK_THROWS_AS(preset("constant_drift(1,2)"), ConfigError);
  CHECK_THROWS_AS(preset("constant_drift(x)"), ConfigError);
}

TEST_CASE("grid iteration visits every point once with axis 0 fastest") {
  std::vector<std::vector<double>> seen;
  for_each_grid_point(2, 3, 1.0, [&](std::span<const double> y) {
    seen.emplace_back(y.begin(), y.end());
  });
  REQUIRE(seen.size() == 9);
  CHECK(seen[1][0] == Catch::Approx(1.0 / 3));
  CHECK(seen[1][1] == 0.0);
  CHECK(seen[3][1] == Catch::Approx(1.0 / 3));
}
