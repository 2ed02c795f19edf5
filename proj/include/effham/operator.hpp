#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "effham/error.hpp"
#include "effham/model.hpp"

namespace effham {

// How the continuous cell problem is put on a grid.
enum class Discretization {
  // Exponentially fitted edge rates w = exp(-(psi(y') - psi(y))) / (2h^2),
  // tilted by exp(p.(y' - y)). Always Metzler; keeps H(0) = 0, convexity
  // and the detailed-balance symmetry exact at every resolution.
  kExponentialFitting,
  // Second-order central differences of 1/2 Lap + (p - grad psi).grad +
  // 1/2 p^2 - p.grad psi. Metzler only under the Peclet condition.
  kCentralDifference,
};

const char* to_string(Discretization scheme);

struct OperatorMetadata {
  std::string model_name;
  std::vector<double> momentum;
  int resolution = 0;  // grid points per axis (continuous) or sites (discrete)
  Regime regime = Regime::kI;
  Discretization scheme = Discretization::kExponentialFitting;
};

/// Finite cell-problem operator. Rows are indexed by (site, state) with
/// index = site * states + state. The constructor rejects matrices with a
/// negative off-diagonal entry or a reducible positive-entry graph.
class AssembledOperator {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  AssembledOperator(Sparse matrix, int sites, int states, OperatorMetadata metadata = {});
  static AssembledOperator from_dense(const Eigen::MatrixXd& matrix);

  const Sparse& matrix() const { return matrix_; }
  int size() const { return static_cast<int>(matrix_.rows()); }
  int sites() const { return sites_; }
  int states() const { return states_; }
  int index(int site, int state) const { return site * states_ + state; }
  std::pair<int, int> site_state(int index) const { return {index / states_, index % states_}; }
  const OperatorMetadata& metadata() const { return metadata_; }

  Eigen::MatrixXd to_dense() const;
  // One "row col value" line per stored entry, preceded by a size header.
  void write_triplets(std::ostream& os) const;

 private:
  Sparse matrix_;
  int sites_;
  int states_;
  OperatorMetadata metadata_;
};

// Central differences need 1/(2h^2) >= |b_a|/(2h) for every drift component.
class PecletError : public ModelError {
 public:
  PecletError(const std::string& what, int minimal_resolution)
      : ModelError(what), minimal_resolution_(minimal_resolution) {}
  int minimal_resolution() const { return minimal_resolution_; }

 private:
  int minimal_resolution_;
};

AssembledOperator assemble_discrete_I(const DiscreteModel& model, double p);
AssembledOperator assemble_discrete_II(const DiscreteModel& model, double p);
AssembledOperator assemble_continuous_I(
    const ContinuousModel& model, std::span<const double> p, int resolution,
    Discretization scheme = Discretization::kExponentialFitting);
AssembledOperator assemble_continuous_II(
    const ContinuousModel& model, std::span<const double> p, int resolution,
    Discretization scheme = Discretization::kExponentialFitting);

// Regime dispatch; `resolution` is ignored for discrete models.
AssembledOperator assemble(const Model& model, std::span<const double> p, int resolution,
                           Discretization scheme = Discretization::kExponentialFitting);

}  // namespace effham
