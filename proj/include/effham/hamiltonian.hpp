#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "effham/model.hpp"
#include "effham/operator.hpp"
#include "effham/principal.hpp"

namespace effham {

struct SolverParams {
  int resolution = 256;  // grid points per axis; ignored for discrete models
  double tol = 1e-10;
  Discretization scheme = Discretization::kExponentialFitting;
  EigenMethod method = EigenMethod::kShiftInvert;
  long max_iterations = 1'000'000;

  EigenOptions eigen_options() const { return {tol, max_iterations, method}; }
};

struct HamiltonianValue {
  double value = 0.0;
  EigenCertificate certificate;
};

// H(p) as the principal eigenvalue of the regime-appropriate cell problem.
HamiltonianValue hamiltonian_at(const Model& model, std::span<const double> p,
                                const SolverParams& params = {});
HamiltonianValue hamiltonian_at(const Model& model, double p, const SolverParams& params = {});

struct HamiltonianSample {
  std::vector<double> momentum;
  double value = std::numeric_limits<double>::quiet_NaN();
  EigenCertificate certificate;
  std::string error;  // non-empty when the solve failed

  bool ok() const { return error.empty() && std::isfinite(value); }
};

struct TableProvenance {
  std::string model_name;
  Regime regime = Regime::kI;
  bool discrete = false;
  int resolution = 0;
  double tol = 0.0;
  Discretization scheme = Discretization::kExponentialFitting;
  bool grid_augmented = false;  // p = 0 was inserted into the requested grid
};

class HamiltonianTable {
 public:
  int dim = 1;
  std::vector<double> axis_grid;  // sorted, contains 0
  bool lattice = false;           // full tensor grid instead of axis lines
  std::vector<HamiltonianSample> samples;
  // Every grid line as sample indices ordered along the line.
  std::vector<std::vector<int>> lines;
  std::vector<int> line_axis;  // the momentum component that varies along each line
  TableProvenance provenance;

  const HamiltonianSample* find(std::span<const double> p, double tol = 1e-12) const;
  const HamiltonianSample* find(double p, double tol = 1e-12) const;
  bool complete() const;
  int failures() const;
};

struct SweepOptions {
  bool lattice = false;
  int threads = 1;
};

// Uniform axis grid p_k = (p_min (count-1-k) + p_max k) / (count-1), written
// so a symmetric range yields an exactly symmetric grid; 0 is inserted if
// missing. Failed solves are recorded per sample, not thrown.
HamiltonianTable sweep(const Model& model, double p_min, double p_max, int count,
                       const SolverParams& params = {}, const SweepOptions& options = {});
HamiltonianTable sweep_points(const Model& model, std::vector<double> axis_grid,
                              const SolverParams& params = {}, const SweepOptions& options = {});

// Table of a known function on the same layout as a sweep; certificates are
// empty. Used to exercise the downstream transforms on exact data.
HamiltonianTable tabulate(int dim, std::vector<double> axis_grid,
                          const std::function<double(std::span<const double>)>& h,
                          bool lattice = false);

std::vector<double> uniform_grid(double lo, double hi, int count);

struct VelocityEstimate {
  std::vector<double> velocity;
  std::vector<double> error_estimate;  // |Richardson - plain central difference|
  double delta = 0.0;
};

// DH(0) from table samples at +-delta e_a and +-2 delta e_a (smallest such delta).
VelocityEstimate velocity(const HamiltonianTable& table);
// DH(0) from fresh solves at +-delta, +-2 delta along each axis.
VelocityEstimate velocity_probe(const Model& model, const SolverParams& params = {},
                                double delta = 1e-3);

struct LagrangianSample {
  std::vector<double> velocity;
  double value = 0.0;
  std::vector<double> pstar;
  bool boundary = false;  // sup attained on the p-grid edge: value is a lower bound
};

struct LagrangianTable {
  int dim = 1;
  std::vector<double> axis_grid;  // v grid per axis; d > 1 uses the full lattice
  std::vector<LagrangianSample> samples;
};

LagrangianTable legendre(const HamiltonianTable& table, const std::vector<double>& v_axis_grid);

struct PathKnot {
  double t = 0.0;
  std::vector<double> x;
};

// I0 + sum over segments of dt * L(dx/dt), with L interpolated from the table.
double path_rate(const std::vector<PathKnot>& knots, const LagrangianTable& lagrangian,
                 double initial_rate = 0.0);
double lagrangian_at(const LagrangianTable& lagrangian, std::span<const double> v);

struct ConvexityReport {
  double max_violation = -std::numeric_limits<double>::infinity();
  std::vector<double> location;
  int triples = 0;
  bool passes(double tolerance = 1e-6) const { return max_violation <= tolerance; }
};

ConvexityReport convexity_report(const HamiltonianTable& table);

struct SymmetryReport {
  double max_asymmetry = 0.0;
  std::vector<double> location;  // the p of the worst pair
  int pairs = 0;
};

SymmetryReport symmetry_check(const HamiltonianTable& table);

struct CoercivityReport {
  bool holds = true;
  double min_margin = std::numeric_limits<double>::infinity();  // min H(p) - bound(p)
  std::vector<double> location;
};

// Continuous: H(p) >= |p|^2/4 - max_{grid,i} |grad psi^i|^2.
// Discrete:   H(p) >= min_{k,i} [r+(e^p - 1) + r-(e^-p - 1)] (averaged rates in regime II).
double coercivity_bound(const Model& model, std::span<const double> p, int grid);
CoercivityReport coercivity_check(const HamiltonianTable& table, const Model& model);

struct RefinementReport {
  std::vector<int> resolutions;
  std::vector<double> values;
  double extrapolated = 0.0;    // Richardson value from the two finest levels, order 2
  double error_estimate = 0.0;  // |extrapolated - finest value|
  double observed_order = std::numeric_limits<double>::quiet_NaN();
};

// H(p) at N_base * 2^k, k < levels (continuous models only).
RefinementReport refine(const Model& model, std::span<const double> p, int base_resolution,
                        int levels = 3, const SolverParams& params = {});

}  // namespace effham
