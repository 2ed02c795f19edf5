#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "effham/field.hpp"

namespace effham {

// Regime I: switching on the same time scale as the spatial motion.
// Regime II: switching infinitely faster, coefficients averaged over the
// stationary measure of the chemical states.
enum class Regime { kI, kII };

const char* to_string(Regime regime);

/// J x J matrix of switching-rate fields r_ij(y). Diagonal entries are
/// ignored and always report zero.
class SwitchingRateMatrix {
 public:
  SwitchingRateMatrix() = default;
  explicit SwitchingRateMatrix(std::vector<std::vector<PeriodicScalarField>> entries);

  // Constant rates from the off-diagonal of `rates`.
  static SwitchingRateMatrix constant(const Eigen::MatrixXd& rates, int dim = 1,
                                      double period = 1.0);
  // Single chemical state, nothing to switch.
  static SwitchingRateMatrix none(int dim = 1, double period = 1.0);

  int states() const { return static_cast<int>(entries_.size()); }
  const PeriodicScalarField& entry(int i, int j) const { return entries_[i][j]; }
  double rate(int i, int j, std::span<const double> y) const;
  // Off-diagonal rates at y, zero diagonal.
  Eigen::MatrixXd rates_at(std::span<const double> y) const;
  bool is_constant() const;
  SwitchingRateMatrix scaled(double c) const;

 private:
  std::vector<std::vector<PeriodicScalarField>> entries_;
};

/// Switching diffusion on the d-torus: in chemical state i the particle
/// drifts along -grad psi^i with unit-strength noise (in the fast variable)
/// and switches to j at rate r_ij(y).
class ContinuousModel {
 public:
  ContinuousModel(std::vector<PeriodicScalarField> potentials,
                  SwitchingRateMatrix rates, Regime regime = Regime::kI,
                  std::string name = {});

  int dim() const { return dim_; }
  double period() const { return period_; }
  int states() const { return static_cast<int>(potentials_.size()); }
  const std::vector<PeriodicScalarField>& potentials() const { return potentials_; }
  const PeriodicScalarField& potential(int i) const { return potentials_[i]; }
  const SwitchingRateMatrix& rates() const { return rates_; }
  Regime regime() const { return regime_; }
  const std::string& name() const { return name_; }

  // -grad psi^i(y)
  std::vector<double> drift(int state, std::span<const double> y) const;

  ContinuousModel with_regime(Regime regime) const;
  ContinuousModel with_rates_scaled(double gamma) const;

 private:
  int dim_;
  double period_;
  std::vector<PeriodicScalarField> potentials_;
  SwitchingRateMatrix rates_;
  Regime regime_;
  std::string name_;
};

/// Random walk on the discrete torus {0, ..., l-1} with state-dependent hop
/// rates r_+^i(k), r_-^i(k) and site-dependent switching rates r_ij(k).
class DiscreteModel {
 public:
  using SiteRates = std::vector<std::vector<double>>;        // [state][site]
  using Switching = std::vector<std::vector<std::vector<double>>>;  // [i][j][site]

  DiscreteModel(int length, SiteRates hop_plus, SiteRates hop_minus,
                Switching switching, Regime regime = Regime::kI,
                std::string name = {});

  // Site-independent rates; `switching` is J x J (diagonal ignored).
  static DiscreteModel uniform(int length, std::span<const double> hop_plus,
                               std::span<const double> hop_minus,
                               const Eigen::MatrixXd& switching,
                               Regime regime = Regime::kI, std::string name = {});

  int length() const { return length_; }
  int states() const { return static_cast<int>(hop_plus_.size()); }
  double hop_plus(int state, int site) const { return hop_plus_[state][wrap(site)]; }
  double hop_minus(int state, int site) const { return hop_minus_[state][wrap(site)]; }
  double switching(int i, int j, int site) const {
    return i == j ? 0.0 : switching_[i][j][wrap(site)];
  }
  // Off-diagonal switching rates at a site, zero diagonal.
  Eigen::MatrixXd switching_at(int site) const;
  Regime regime() const { return regime_; }
  const std::string& name() const { return name_; }
  int wrap(int site) const { return ((site % length_) + length_) % length_; }

  DiscreteModel with_regime(Regime regime) const;
  // Switching rates multiplied by gamma (finite time-scale separation).
  DiscreteModel with_switching_scaled(double gamma) const;

 private:
  int length_;
  SiteRates hop_plus_;
  SiteRates hop_minus_;
  Switching switching_;
  Regime regime_;
  std::string name_;
};

using Model = std::variant<ContinuousModel, DiscreteModel>;

Regime regime_of(const Model& model);
const std::string& name_of(const Model& model);
int dim_of(const Model& model);

struct Violation {
  enum class Kind {
    kNegativeRate,
    kReducibleCoupling,
    kReducibleAtPoint,
    kNonpositiveHopRate,
    kNonFiniteRate,
    kTiltedRate,
  };
  Kind kind;
  std::string location;
  std::string message;
};

const char* to_string(Violation::Kind kind);

struct ValidationReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
  bool has(Violation::Kind kind) const;
  std::string to_string() const;
};

struct ValidationOptions {
  // Sample points per axis for the rate sign checks; 0 picks 4x the finest
  // default solver grid for the dimension.
  int samples_per_axis = 0;
};

int default_sample_resolution(int dim);

ValidationReport validate(const ContinuousModel& model,
                          const ValidationOptions& options = {});
ValidationReport validate(const DiscreteModel& model);
ValidationReport validate(const Model& model, const ValidationOptions& options = {});

// Calls f(point) for every point of the uniform N^d grid on [0, period)^d,
// axis 0 varying fastest.
template <typename F>
void for_each_grid_point(int dim, int n, double period, F&& f) {
  std::vector<int> idx(dim, 0);
  std::vector<double> y(dim, 0.0);
  const double h = period / n;
  long total = 1;
  for (int a = 0; a < dim; ++a) total *= n;
  for (long s = 0; s < total; ++s) {
    for (int a = 0; a < dim; ++a) y[a] = h * idx[a];
    f(std::span<const double>(y));
    for (int a = 0; a < dim; ++a) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
  }
}

}  // namespace effham
