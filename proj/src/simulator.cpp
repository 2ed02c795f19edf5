#include "effham/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "effham/error.hpp"
#include "effham/parallel.hpp"

namespace effham {

std::vector<double> Trajectory::velocity() const {
  std::vector<double> v(dim);
  for (int a = 0; a < dim; ++a) v[a] = (end[a] - start[a]) / duration;
  return v;
}

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(base ^ mix(index));
}

namespace {

void record(Trajectory& tr, double t, std::span<const double> x, int i) {
  tr.times.push_back(t);
  tr.positions.insert(tr.positions.end(), x.begin(), x.end());
  tr.states.push_back(i);
}

void check_common(const SimulationOptions& options, int states, int dim) {
  if (!(options.T > 0.0) || !std::isfinite(options.T)) throw ConfigError("T must be positive");
  if (options.i0 < 0 || options.i0 >= states) throw ConfigError("initial state out of range");
  if (!options.x0.empty() && static_cast<int>(options.x0.size()) != dim) {
    throw ConfigError("initial position has the wrong dimension");
  }
  if (!(options.gamma >= 0.0) || !std::isfinite(options.gamma)) {
    throw ConfigError("gamma must be finite and nonnegative");
  }
}

}  // namespace

Trajectory simulate_continuous(const ContinuousModel& model, double epsilon, std::uint64_t seed,
                               const SimulationOptions& options) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  const int d = model.dim();
  const int states = model.states();
  check_common(options, states, d);
  const double dt = options.dt_factor * epsilon;
  if (!(dt > 0.0) || dt > epsilon / 10.0 * (1.0 + 1e-12)) {
    throw ConfigError("time step dt = " + std::to_string(dt) +
                      " must be positive and at most epsilon/10 to resolve the fast variable");
  }

  // Dominating switching rate for thinning.
  const double speed = options.gamma / epsilon;
  double bound = 0.0;
  for (int i = 0; i < states; ++i) {
    double out = 0.0;
    for (int j = 0; j < states; ++j) {
      if (j != i) out += model.rates().entry(i, j).upper_bound();
    }
    bound = std::max(bound, out);
  }
  const double lambda = states > 1 ? speed * bound : 0.0;
  if (!std::isfinite(lambda)) throw ModelError("switching rates are unbounded; cannot thin");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  std::exponential_distribution<double> expo(lambda > 0.0 ? lambda : 1.0);

  Trajectory tr;
  tr.seed = seed;
  tr.dim = d;
  tr.scale = epsilon;
  tr.duration = options.T;
  tr.occupancy.assign(states, 0.0);
  tr.departures.assign(states, 0);
  std::vector<double> x = options.x0.empty() ? std::vector<double>(d, 0.0) : options.x0;
  std::vector<double> y(d);
  int i = options.i0;
  tr.start = x;
  if (options.record_path) record(tr, 0.0, x, i);

  const double noise = std::sqrt(epsilon);
  auto advance = [&](double h) {
    tr.occupancy[i] += h;
    if (options.freeze_position) return;
    for (int a = 0; a < d; ++a) y[a] = x[a] / epsilon;
    const auto grad = model.potential(i).gradient(y);
    const double s = noise * std::sqrt(h);
    for (int a = 0; a < d; ++a) x[a] += -grad[a] * h + s * normal(rng);
  };

  std::vector<double> rates(states);
  double t = 0.0;
  double candidate = lambda > 0.0 ? expo(rng) : std::numeric_limits<double>::infinity();
  while (t < options.T) {
    const double step_end = std::min(t + dt, options.T);
    if (candidate < step_end) {
      advance(candidate - t);
      t = candidate;
      for (int a = 0; a < d; ++a) y[a] = x[a] / epsilon;
      double total = 0.0;
      for (int j = 0; j < states; ++j) {
        rates[j] = j == i ? 0.0 : model.rates().rate(i, j, y);
        total += rates[j];
      }
      if (uniform(rng) * lambda < speed * total) {
        double pick = uniform(rng) * total;
        int next = i;
        for (int j = 0; j < states; ++j) {
          if (rates[j] <= 0.0) continue;
          next = j;
          if ((pick -= rates[j]) < 0.0) break;
        }
        ++tr.departures[i];
        ++tr.switch_count;
        i = next;
        if (options.record_path) record(tr, t, x, i);
      }
      candidate = t + expo(rng);
      continue;
    }
    advance(step_end - t);
    t = step_end;
    if (options.record_path) record(tr, t, x, i);
  }
  tr.end = x;
  return tr;
}

Trajectory simulate_discrete(const DiscreteModel& model, int n, std::uint64_t seed,
                             const SimulationOptions& options) {
  if (n < 1) throw ConfigError("n must be >= 1");
  const int states = model.states();
  check_common(options, states, 1);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform;
  Trajectory tr;
  tr.seed = seed;
  tr.dim = 1;
  tr.scale = n;
  tr.duration = options.T;
  tr.occupancy.assign(states, 0.0);
  tr.departures.assign(states, 0);

  const double x0 = options.x0.empty() ? 0.0 : options.x0[0];
  const long m0 = std::lround(x0 * n);
  long m = m0;  // lifted lattice index
  int i = options.i0;
  tr.start = {x0};
  const auto position = [&] { return x0 + static_cast<double>(m - m0) / n; };
  if (options.record_path) record(tr, 0.0, std::vector<double>{position()}, i);

  std::vector<double> rates(states);
  double t = 0.0;
  while (true) {
    const int k = model.wrap(static_cast<int>(m % model.length()));
    // Frozen mode drops the hops and samples only the switching clock.
    const double plus = options.freeze_position ? 0.0 : n * model.hop_plus(i, k);
    const double minus = options.freeze_position ? 0.0 : n * model.hop_minus(i, k);
    double switching = 0.0;
    for (int j = 0; j < states; ++j) {
      rates[j] = j == i ? 0.0 : n * options.gamma * model.switching(i, j, k);
      switching += rates[j];
    }
    const double total = plus + minus + switching;
    const double wait = total > 0.0 ? -std::log1p(-uniform(rng)) / total
                                    : std::numeric_limits<double>::infinity();
    if (t + wait >= options.T) {
      tr.occupancy[i] += options.T - t;
      break;
    }
    tr.occupancy[i] += wait;
    t += wait;
    double pick = uniform(rng) * total;
    if (pick < plus) {
      ++m;
      ++tr.hop_count;
    } else if (pick < plus + minus) {
      --m;
      ++tr.hop_count;
    } else {
      pick -= plus + minus;
      int next = i;
      for (int j = 0; j < states; ++j) {
        if (rates[j] <= 0.0) continue;
        next = j;
        if ((pick -= rates[j]) < 0.0) break;
      }
      ++tr.departures[i];
      ++tr.switch_count;
      i = next;
    }
    if (options.record_path) record(tr, t, std::vector<double>{position()}, i);
  }
  tr.end = {position()};
  return tr;
}

BatchSummary summarize(const std::vector<std::vector<double>>& velocities) {
  BatchSummary s;
  s.paths = static_cast<long>(velocities.size());
  if (velocities.empty()) return s;
  const int d = static_cast<int>(velocities.front().size());
  s.mean.assign(d, 0.0);
  s.sd.assign(d, 0.0);
  s.se.assign(d, 0.0);
  for (const auto& v : velocities) {
    for (int a = 0; a < d; ++a) s.mean[a] += v[a];
  }
  for (double& m : s.mean) m /= s.paths;
  if (s.paths < 2) return s;
  for (const auto& v : velocities) {
    for (int a = 0; a < d; ++a) s.sd[a] += (v[a] - s.mean[a]) * (v[a] - s.mean[a]);
  }
  for (int a = 0; a < d; ++a) {
    s.sd[a] = std::sqrt(s.sd[a] / (s.paths - 1));
    s.se[a] = s.sd[a] / std::sqrt(static_cast<double>(s.paths));
  }
  return s;
}

TrajectoryBatch simulate_batch(const Model& model, double scale, long paths,
                               std::uint64_t base_seed, const SimulationOptions& options,
                               int threads) {
  if (paths < 1) throw ConfigError("a batch needs at least one path");
  TrajectoryBatch batch;
  batch.scale = scale;
  batch.base_seed = base_seed;
  batch.trajectories.resize(paths);
  const auto* cm = std::get_if<ContinuousModel>(&model);
  const auto* dm = std::get_if<DiscreteModel>(&model);
  if (dm != nullptr && (scale < 1.0 || scale != std::floor(scale))) {
    throw ConfigError("discrete scale n must be a positive integer");
  }
  parallel_for(paths, threads, [&](long k) {
    const auto seed = stream_seed(base_seed, static_cast<std::uint64_t>(k));
    batch.trajectories[k] = cm != nullptr
                                ? simulate_continuous(*cm, scale, seed, options)
                                : simulate_discrete(*dm, static_cast<int>(scale), seed, options);
  });
  std::vector<std::vector<double>> velocities;
  velocities.reserve(paths);
  for (const auto& tr : batch.trajectories) velocities.push_back(tr.velocity());
  batch.summary = summarize(velocities);
  return batch;
}

bool ConcentrationReport::all_verdicts() const {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.verdict; });
}

ConcentrationReport concentration_experiment(const Model& model, const std::vector<double>& scales,
                                             const ConcentrationOptions& options) {
  if (scales.empty()) throw ConfigError("no scales given");
  const bool discrete = std::holds_alternative<DiscreteModel>(model);
  // Noise parameter: epsilon, or 1/n for the lattice model.
  std::vector<double> noise;
  for (double s : scales) {
    if (!(s > 0.0)) throw ConfigError("scales must be positive");
    noise.push_back(discrete ? 1.0 / s : s);
  }
  for (std::size_t k = 1; k < noise.size(); ++k) {
    if (!(noise[k] < noise[k - 1])) {
      throw ConfigError(discrete ? "n must increase across scales"
                                 : "epsilon must decrease across scales");
    }
  }

  ConcentrationReport report;
  report.predicted_velocity = options.predicted_velocity
                                  ? *options.predicted_velocity
                                  : velocity_probe(model, options.solver).velocity;
  const int d = dim_of(model);
  if (static_cast<int>(report.predicted_velocity.size()) != d) {
    throw ConfigError("predicted velocity has the wrong dimension");
  }

  for (double s : scales) {
    auto batch = simulate_batch(model, s, options.paths, options.base_seed, options.simulation,
                                options.threads);
    ConcentrationRow row{s, std::move(batch.summary), true};
    for (int a = 0; a < d; ++a) {
      const double allowed = std::max(3.0 * row.summary.se[a], options.velocity_floor);
      if (!(std::abs(row.summary.mean[a] - report.predicted_velocity[a]) <= allowed)) {
        row.verdict = false;
      }
    }
    report.rows.push_back(std::move(row));
  }
  for (std::size_t k = 1; k < report.rows.size(); ++k) {
    const auto& a = report.rows[k - 1].summary;
    const auto& b = report.rows[k].summary;
    for (int ax = 0; ax < d; ++ax) {
      if (!(b.sd[ax] < a.sd[ax])) report.sd_monotone = false;
      SdRatioCheck c;
      c.observed = a.sd[ax] / b.sd[ax];
      c.predicted = std::sqrt(noise[k - 1] / noise[k]);
      c.within = std::abs(c.observed / c.predicted - 1.0) <= 0.5;
      report.sd_ratios.push_back(c);
    }
  }
  return report;
}

}  // namespace effham
