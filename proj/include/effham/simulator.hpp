#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "effham/hamiltonian.hpp"
#include "effham/model.hpp"

namespace effham {

struct SimulationOptions {
  double T = 1.0;
  double dt_factor = 0.05;  // Euler-Maruyama step dt = dt_factor * epsilon
  double gamma = 1.0;       // switching-rate multiplier; rates enter as (gamma/scale-parameter) r_ij
  std::vector<double> x0;   // start position (default: origin)
  int i0 = 0;               // start state
  bool record_path = false;
  bool freeze_position = false;  // test mode: pin x and sample only the switching
};

struct Trajectory {
  std::uint64_t seed = 0;
  int dim = 1;
  double scale = 0.0;  // epsilon (continuous) or n (discrete)
  std::vector<double> times;
  std::vector<double> positions;  // times.size() * dim, lifted coordinates
  std::vector<int> states;
  std::vector<double> start;
  std::vector<double> end;
  double duration = 0.0;
  long switch_count = 0;
  long hop_count = 0;
  std::vector<double> occupancy;  // time spent in each state
  std::vector<long> departures;   // switches out of each state

  std::vector<double> velocity() const;  // (X_T - X_0) / T
};

// Per-trajectory stream seed derived from (base seed, index) by splitmix64, so
// batches are reproducible and independent of execution order.
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index);

// Euler-Maruyama on the lifted space, x <- x - grad psi^i(x/eps) dt + sqrt(eps dt) xi,
// with switching by thinning against Lambda = (gamma/eps) max_i sum_j sup r_ij.
Trajectory simulate_continuous(const ContinuousModel& model, double epsilon, std::uint64_t seed,
                               const SimulationOptions& options = {});

// Exact jump simulation with rates n r+, n r-, n gamma r_ij; position m/n.
Trajectory simulate_discrete(const DiscreteModel& model, int n, std::uint64_t seed,
                             const SimulationOptions& options = {});

struct BatchSummary {
  long paths = 0;
  std::vector<double> mean;  // per axis
  std::vector<double> sd;    // sample standard deviation (n - 1)
  std::vector<double> se;    // sd / sqrt(paths)
};

struct TrajectoryBatch {
  double scale = 0.0;
  std::uint64_t base_seed = 0;
  std::vector<Trajectory> trajectories;
  BatchSummary summary;
};

// `scale` is epsilon for continuous models and n for discrete ones.
TrajectoryBatch simulate_batch(const Model& model, double scale, long paths,
                               std::uint64_t base_seed, const SimulationOptions& options = {},
                               int threads = 1);

BatchSummary summarize(const std::vector<std::vector<double>>& velocities);

struct ConcentrationOptions {
  SimulationOptions simulation;
  long paths = 1000;
  std::uint64_t base_seed = 1;
  int threads = 1;
  SolverParams solver;
  std::optional<std::vector<double>> predicted_velocity;  // default: eigen pipeline
  double velocity_floor = 0.0;  // verdict: |mean - v| <= max(3 SE, floor)
};

struct ConcentrationRow {
  double scale = 0.0;
  BatchSummary summary;
  bool verdict = false;
};

struct SdRatioCheck {
  double observed = 0.0;   // sd(scale_k) / sd(scale_k+1)
  double predicted = 0.0;  // sqrt of the noise-parameter ratio
  bool within = false;     // |observed / predicted - 1| <= 0.5
};

struct ConcentrationReport {
  std::vector<double> predicted_velocity;
  std::vector<ConcentrationRow> rows;
  bool sd_monotone = true;
  std::vector<SdRatioCheck> sd_ratios;

  bool all_verdicts() const;
};

// Scales must shrink the noise: epsilon strictly decreasing, or n strictly increasing.
ConcentrationReport concentration_experiment(const Model& model, const std::vector<double>& scales,
                                             const ConcentrationOptions& options = {});

}  // namespace effham
