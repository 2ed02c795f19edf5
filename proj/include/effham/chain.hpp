#pragma once

#include <Eigen/Core>
#include <span>
#include <utility>
#include <vector>

#include "effham/model.hpp"

namespace effham {

// True when the digraph with an edge i -> j for every positive off-diagonal
// entry is strongly connected. A 1x1 matrix is irreducible.
bool is_irreducible(const Eigen::MatrixXd& matrix);

/// Generator Q of the chemical jump chain at a frozen position:
/// Q_ij = r_ij for i != j and Q_ii = -sum_{j != i} r_ij.
class GeneratorMatrix {
 public:
  // Off-diagonal part of `rates` is used; throws ModelError on negative or
  // non-finite entries.
  explicit GeneratorMatrix(const Eigen::MatrixXd& rates);

  const Eigen::MatrixXd& matrix() const { return q_; }
  int states() const { return static_cast<int>(q_.rows()); }
  bool irreducible() const { return is_irreducible(q_); }

 private:
  Eigen::MatrixXd q_;
};

GeneratorMatrix generator_at(const SwitchingRateMatrix& rates,
                             std::span<const double> y);
GeneratorMatrix generator_at_site(const DiscreteModel& model, int site);

struct StationaryMeasure {
  Eigen::VectorXd probabilities;
  double residual = 0.0;  // ||mu^T Q||_inf
};

// Unique invariant probability of an irreducible generator. Throws
// ModelError for reducible Q.
StationaryMeasure stationary_measure(const GeneratorMatrix& q);

struct DetailedBalanceReport {
  bool holds = true;
  double max_violation = 0.0;
  double scale = 0.0;  // largest |r_ij e^{-2 psi^i}| seen
  std::vector<double> location;
  int state_i = -1;
  int state_j = -1;
};

// Samples |r_ij(x) e^{-2 psi^i(x)} - r_ji(x) e^{-2 psi^j(x)}| on a grid^d
// lattice of one period. Holds when the maximum is within 1e-10 of the term
// scale.
DetailedBalanceReport detailed_balance_report(const ContinuousModel& model,
                                              int grid = 256);

// Fbar(y) = sum_i mu_y(i) grad psi^i(y). The averaged process drifts along
// -Fbar.
std::vector<double> averaged_drift(const ContinuousModel& model,
                                   std::span<const double> y);

// (rbar_+(k), rbar_-(k)) averaged over the stationary measure at site k.
std::pair<double, double> averaged_hop_rates(const DiscreteModel& model, int site);

}  // namespace effham
