#include "effham/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "effham/chain.hpp"
#include "effham/error.hpp"
#include "effham/hamiltonian.hpp"
#include "effham/io.hpp"
#include "effham/simulator.hpp"

namespace effham::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- config blocks

class Block {
 public:
  Block(const json& root, const char* name, std::initializer_list<const char*> keys)
      : name_(name) {
    if (root.contains(name)) {
      j_ = root.at(name);
      if (!j_.is_object()) throw ConfigError(std::string("'") + name + "' must be an object");
    }
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [key, _] : j_.items()) {
      if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in '" + name + "'");
    }
  }

  template <typename T>
  T get(const char* key, T fallback) const {
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("bad value for '") + name_ + "." + key + "'");
    }
  }
  bool has(const char* key) const { return j_.contains(key); }
  const json& raw(const char* key) const { return j_.at(key); }

 private:
  json j_ = json::object();
  std::string name_;
};

SolverParams solver_params(const RunConfig& run) {
  const Block b(run.config, "sweep",
                {"p_min", "p_max", "count", "N", "tol", "scheme", "method", "max_iterations",
                 "lattice"});
  SolverParams p;
  p.resolution = b.get("N", p.resolution);
  p.tol = b.get("tol", p.tol);
  p.max_iterations = b.get("max_iterations", p.max_iterations);
  const auto scheme = b.get<std::string>("scheme", "exponential");
  if (scheme == "exponential") {
    p.scheme = Discretization::kExponentialFitting;
  } else if (scheme == "central") {
    p.scheme = Discretization::kCentralDifference;
  } else {
    throw ConfigError("sweep.scheme must be \"exponential\" or \"central\"");
  }
  const auto method = b.get<std::string>("method", "shift_invert");
  if (method == "shift_invert") {
    p.method = EigenMethod::kShiftInvert;
  } else if (method == "shifted_power") {
    p.method = EigenMethod::kShiftedPower;
  } else {
    throw ConfigError("sweep.method must be \"shift_invert\" or \"shifted_power\"");
  }
  if (p.resolution < 3) throw ConfigError("sweep.N must be at least 3");
  if (!(p.tol > 0.0)) throw ConfigError("sweep.tol must be positive");
  return p;
}

HamiltonianTable run_sweep(const RunConfig& run, std::ostream& log, bool force_lattice = false) {
  const Block b(run.config, "sweep",
                {"p_min", "p_max", "count", "N", "tol", "scheme", "method", "max_iterations",
                 "lattice"});
  const double p_min = b.get("p_min", -3.0);
  const double p_max = b.get("p_max", 3.0);
  const int count = b.get("count", 61);
  SweepOptions options;
  options.lattice = force_lattice || b.get("lattice", false);
  options.threads = run.threads;
  auto table = sweep(run.model, p_min, p_max, count, solver_params(run), options);
  if (table.provenance.grid_augmented) {
    log << "warning: momentum grid did not contain p = 0; inserted it\n";
  }
  for (const auto& s : table.samples) {
    if (!s.ok()) log << "warning: solve failed at p = " << json(s.momentum).dump() << ": " << s.error << "\n";
  }
  return table;
}

// ---------------------------------------------------------------- output

std::string num(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const RunConfig& run, const char* name) {
  fs::create_directories(run.out_dir);
  std::ofstream os(run.out_dir / name);
  if (!os) throw ConfigError("cannot write " + (run.out_dir / name).string());
  return os;
}

void write_json(const RunConfig& run, const char* name, const json& j) {
  auto os = open_out(run, name);
  os << j.dump(2) << "\n";
}

std::string axis_columns(const char* stem, int dim) {
  if (dim == 1) return stem;
  std::string out;
  for (int a = 1; a <= dim; ++a) out += (a > 1 ? "," : "") + std::string(stem) + "_" + std::to_string(a);
  return out;
}

json provenance_json(const HamiltonianTable& t) {
  const auto& p = t.provenance;
  return {{"model", p.model_name},
          {"regime", to_string(p.regime)},
          {"kind", p.discrete ? "discrete" : "continuous"},
          {"resolution", p.resolution},
          {"tol", p.tol},
          {"scheme", p.discrete ? "lattice" : to_string(p.scheme)},
          {"grid_augmented", p.grid_augmented},
          {"lattice", t.lattice}};
}

// Sample order for output: along the grid line for d = 1, storage order otherwise.
std::vector<int> output_order(const HamiltonianTable& t) {
  if (t.dim == 1) return t.lines.front();
  std::vector<int> order(t.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  return order;
}

void write_table(const RunConfig& run, const HamiltonianTable& table) {
  auto csv = open_out(run, "hamiltonian.csv");
  csv << axis_columns("p", table.dim) << ",H,residual,cw_gap\n";
  json samples = json::array();
  for (int idx : output_order(table)) {
    const auto& s = table.samples[idx];
    for (double p : s.momentum) csv << num(p) << ",";
    const bool ok = s.ok();
    csv << num(ok ? s.value : NAN) << "," << num(ok ? s.certificate.residual : NAN) << ","
        << num(ok ? s.certificate.gap() : NAN) << "\n";
    json js = {{"p", s.momentum}};
    if (ok) {
      js["H"] = s.value;
      js["residual"] = s.certificate.residual;
      js["cw_lower"] = s.certificate.cw_lower;
      js["cw_upper"] = s.certificate.cw_upper;
      js["iterations"] = s.certificate.iterations;
    } else {
      js["H"] = nullptr;
      js["error"] = s.error;
    }
    samples.push_back(std::move(js));
  }
  json cert = provenance_json(table);
  cert["failures"] = table.failures();
  cert["samples"] = std::move(samples);
  write_json(run, "certificates.json", cert);
}

bool report_validation(const RunConfig& run, std::ostream& log) {
  const auto report = validate(run.model);
  if (report.valid()) return true;
  log << "model is invalid:\n" << report.to_string();
  json v = json::array();
  for (const auto& x : report.violations) {
    v.push_back({{"kind", to_string(x.kind)}, {"location", x.location}, {"message", x.message}});
  }
  write_json(run, "validation.json", {{"valid", false}, {"violations", v}});
  return false;
}

template <typename F>
int guarded(const RunConfig& run, std::ostream& log, F&& body) {
  try {
    if (!report_validation(run, log)) return kInvalid;
    return body();
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const ModelError& e) {
    log << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const NumericalError& e) {
    log << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
    return kInvalid;
  }
}

std::vector<double> doubles(const json& j, const char* what) {
  try {
    if (j.is_number()) return {j.get<double>()};
    return j.get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(what) + " must be a number or a list of numbers");
  }
}

bool symmetry_expected(const Model& model, int grid) {
  if (const auto* cm = std::get_if<ContinuousModel>(&model)) {
    // Both symmetry results need periodic potentials; a tilt breaks them.
    for (const auto& psi : cm->potentials()) {
      if (psi.has_slope()) return false;
    }
    if (cm->regime() == Regime::kII && cm->rates().is_constant()) return true;
    return detailed_balance_report(*cm, grid).holds;
  }
  // Lattice walk: symmetric exactly when every hop is balanced.
  const auto& dm = std::get<DiscreteModel>(model);
  for (int i = 0; i < dm.states(); ++i) {
    for (int k = 0; k < dm.length(); ++k) {
      if (dm.hop_plus(i, k) != dm.hop_minus(i, k)) return false;
    }
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------- config resolution

RunConfig resolve(const json& config, const Overrides& overrides, const fs::path& base_dir) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> top = {"model",    "model_file", "preset", "sweep",
                                            "velocity", "legendre",   "simulate", "check",
                                            "output",   "threads",    "seed"};
  for (const auto& [key, _] : config.items()) {
    if (!top.count(key)) throw ConfigError("unknown top-level key '" + key + "'");
  }
  std::optional<Model> model;
  if (overrides.preset) {
    model = preset(*overrides.preset);
  } else {
    const int sources = config.contains("model") + config.contains("model_file") +
                        config.contains("preset");
    if (sources != 1) {
      throw ConfigError("give exactly one of 'model', 'model_file', 'preset' (or --preset)");
    }
    if (config.contains("model")) {
      model = model_from_json(config["model"]);
    } else if (config.contains("model_file")) {
      fs::path file = config["model_file"].get<std::string>();
      if (file.is_relative()) file = base_dir / file;
      if (!fs::exists(file)) throw ConfigError("model file " + file.string() + " does not exist");
      model = load_model_file(file);
    } else {
      model = preset(config["preset"].get<std::string>());
    }
  }
  fs::path out = "out";
  if (config.contains("output")) {
    out = config["output"].get<std::string>();
    if (out.is_relative()) out = base_dir / out;
  }
  if (overrides.out) out = *overrides.out;
  std::optional<std::uint64_t> seed;
  if (config.contains("seed")) seed = config["seed"].get<std::uint64_t>();
  if (overrides.seed) seed = overrides.seed;
  int threads = config.value("threads", 1);
  if (overrides.threads) threads = *overrides.threads;
  if (threads < 1) throw ConfigError("threads must be >= 1");
  return RunConfig{config, std::move(*model), out, seed, threads};
}

RunConfig load(const Overrides& overrides) {
  json config = json::object();
  fs::path base = ".";
  if (overrides.config_path) {
    std::ifstream in(*overrides.config_path);
    if (!in) throw ConfigError("cannot open config " + *overrides.config_path);
    try {
      config = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    base = fs::path(*overrides.config_path).parent_path();
    if (base.empty()) base = ".";
  }
  try {
    return resolve(config, overrides, base);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------- commands

int cmd_sweep(const RunConfig& run, std::ostream& log) {
  return guarded(run, log, [&] {
    const auto table = run_sweep(run, log);
    write_table(run, table);
    return table.complete() ? kOk : kNumerical;
  });
}

int cmd_velocity(const RunConfig& run, std::ostream& log) {
  return guarded(run, log, [&] {
    const Block b(run.config, "velocity", {"delta"});
    const auto v = velocity_probe(run.model, solver_params(run), b.get("delta", 1e-3));
    auto csv = open_out(run, "velocity.csv");
    csv << "axis,velocity,error_estimate,delta\n";
    for (std::size_t a = 0; a < v.velocity.size(); ++a) {
      csv << a + 1 << "," << num(v.velocity[a]) << "," << num(v.error_estimate[a]) << ","
          << num(v.delta) << "\n";
    }
    return kOk;
  });
}

int cmd_legendre(const RunConfig& run, std::ostream& log) {
  return guarded(run, log, [&] {
    const Block b(run.config, "legendre", {"v_min", "v_max", "count", "path", "initial_rate"});
    const auto table = run_sweep(run, log, dim_of(run.model) > 1);
    const auto grid = uniform_grid(b.get("v_min", -2.0), b.get("v_max", 2.0), b.get("count", 41));
    const auto lag = legendre(table, grid);

    auto csv = open_out(run, "lagrangian.csv");
    csv << axis_columns("v", lag.dim) << ",L," << axis_columns("pstar", lag.dim)
        << ",boundary_flag\n";
    for (const auto& s : lag.samples) {
      for (double v : s.velocity) csv << num(v) << ",";
      csv << num(s.value) << ",";
      for (double p : s.pstar) csv << num(p) << ",";
      csv << (s.boundary ? 1 : 0) << "\n";
    }

    // Default path: the straight line at the typical velocity DH(0) over [0, 1].
    std::vector<PathKnot> knots;
    if (b.has("path")) {
      for (const auto& k : b.raw("path")) {
        const auto row = doubles(k, "legendre.path knot");
        if (static_cast<int>(row.size()) != lag.dim + 1) {
          throw ConfigError("each path knot is [t, x_1..x_d]");
        }
        knots.push_back({row[0], std::vector<double>(row.begin() + 1, row.end())});
      }
    } else {
      const auto v = velocity(table).velocity;
      knots = {{0.0, std::vector<double>(lag.dim, 0.0)}, {1.0, v}};
    }
    const double initial = b.get("initial_rate", 0.0);
    json path = json::array();
    for (const auto& k : knots) {
      json row = {k.t};
      for (double x : k.x) row.push_back(x);
      path.push_back(std::move(row));
    }
    json result = {{"path", path}, {"initial_rate", initial}};
    int code = kOk;
    try {
      result["rate"] = path_rate(knots, lag, initial);
    } catch (const NumericalError& e) {
      result["rate"] = nullptr;
      result["error"] = e.what();
      log << "path rate unresolved: " << e.what() << "\n";
      code = kNumerical;
    }
    write_json(run, "path_rate.json", result);
    return table.complete() ? code : kNumerical;
  });
}

int cmd_simulate(const RunConfig& run, std::ostream& log) {
  return guarded(run, log, [&] {
    const Block b(run.config, "simulate",
                  {"scales", "T", "dt_factor", "paths", "seed", "gamma", "velocity_floor",
                   "dump_trajectory", "x0", "i0", "predicted_velocity"});
    const bool discrete = std::holds_alternative<DiscreteModel>(run.model);
    std::optional<std::uint64_t> seed = run.seed;
    if (!seed && b.has("seed")) seed = b.get<std::uint64_t>("seed", 0);
    if (!seed) throw ConfigError("simulate needs a seed (simulate.seed or --seed)");

    ConcentrationOptions o;
    o.base_seed = *seed;
    o.paths = b.get("paths", 1000L);
    o.threads = run.threads;
    o.solver = solver_params(run);
    o.velocity_floor = b.get("velocity_floor", 0.0);
    o.simulation.T = b.get("T", 1.0);
    o.simulation.dt_factor = b.get("dt_factor", 0.05);
    o.simulation.gamma = b.get("gamma", 1.0);
    o.simulation.i0 = b.get("i0", 0);
    if (b.has("x0")) o.simulation.x0 = doubles(b.raw("x0"), "simulate.x0");
    if (b.has("predicted_velocity")) {
      o.predicted_velocity = doubles(b.raw("predicted_velocity"), "simulate.predicted_velocity");
    }
    const auto scales = b.has("scales") ? doubles(b.raw("scales"), "simulate.scales")
                                        : (discrete ? std::vector<double>{50, 100, 200}
                                                    : std::vector<double>{0.1, 0.05, 0.02});
    const auto report = concentration_experiment(run.model, scales, o);

    const int d = dim_of(run.model);
    auto csv = open_out(run, "summary.csv");
    csv << (discrete ? "n" : "epsilon") << ",mean_v,sd,se,predicted_v,verdict"
        << (d > 1 ? ",axis" : "") << "\n";
    for (const auto& row : report.rows) {
      for (int a = 0; a < d; ++a) {
        csv << num(row.scale) << "," << num(row.summary.mean[a]) << "," << num(row.summary.sd[a])
            << "," << num(row.summary.se[a]) << "," << num(report.predicted_velocity[a]) << ","
            << (row.verdict ? "pass" : "fail");
        if (d > 1) csv << "," << a + 1;
        csv << "\n";
      }
    }
    json ratios = json::array();
    for (const auto& r : report.sd_ratios) {
      ratios.push_back({{"observed", r.observed}, {"predicted", r.predicted}, {"within", r.within}});
    }
    write_json(run, "concentration.json",
               {{"paths", o.paths},
                {"seed", o.base_seed},
                {"all_verdicts", report.all_verdicts()},
                {"sd_monotone", report.sd_monotone},
                {"sd_ratios", ratios}});

    if (b.get("dump_trajectory", false)) {
      auto sim = o.simulation;
      sim.record_path = true;
      const auto batch = simulate_batch(run.model, scales.back(), 1, o.base_seed, sim, 1);
      const auto& tr = batch.trajectories.front();
      auto out = open_out(run, "trajectory.csv");
      out << "t," << axis_columns("x_lifted", d) << ",i\n";
      for (std::size_t k = 0; k < tr.times.size(); ++k) {
        out << num(tr.times[k]) << ",";
        for (int a = 0; a < d; ++a) out << num(tr.positions[k * d + a]) << ",";
        out << tr.states[k] << "\n";
      }
    }
    if (!report.all_verdicts()) log << "note: not every scale passed the concentration verdict\n";
    return kOk;
  });
}

int cmd_check(const RunConfig& run, std::ostream& log) {
  return guarded(run, log, [&] {
    const Block b(run.config, "check", {"grid"});
    const int grid = b.get("grid", 256);
    if (grid < 2) throw ConfigError("check.grid must be at least 2");
    const auto table = run_sweep(run, log);
    const double tol = table.provenance.tol;

    const auto* origin = table.find(std::vector<double>(table.dim, 0.0));
    const double h0 = origin != nullptr && origin->ok() ? origin->value : NAN;
    const double h0_tol = 10.0 * tol;
    const auto conv = convexity_report(table);
    const auto sym = symmetry_check(table);
    const auto coer = coercivity_check(table, run.model);
    const bool expected = symmetry_expected(run.model, grid);

    json db = {{"applicable", false}, {"pass", true}};
    if (const auto* cm = std::get_if<ContinuousModel>(&run.model)) {
      const auto r = detailed_balance_report(*cm, grid);
      db = {{"applicable", true},
            {"pass", r.holds},
            {"max_violation", r.max_violation},
            {"scale", r.scale},
            {"grid", grid}};
    }
    const json verdict = {
        {"h0", {{"pass", std::abs(h0) <= h0_tol}, {"value", h0}, {"tolerance", h0_tol}}},
        {"convexity",
         {{"pass", conv.passes(1e-6)},
          {"max_violation", conv.max_violation},
          {"location", conv.location},
          {"tolerance", 1e-6}}},
        {"symmetry",
         {{"pass", sym.max_asymmetry <= 1e-6},
          {"max_asymmetry", sym.max_asymmetry},
          {"location", sym.location},
          {"tolerance", 1e-6},
          {"expected", expected},
          {"consistent", !expected || sym.max_asymmetry <= 1e-6}}},
        {"coercivity",
         {{"pass", coer.holds}, {"min_margin", coer.min_margin}, {"location", coer.location}}},
        {"detailed_balance", db},
        {"provenance", provenance_json(table)},
        {"failures", table.failures()}};
    write_json(run, "check.json", verdict);
    return table.complete() ? kOk : kNumerical;
  });
}

int cmd_validate(const RunConfig& run, std::ostream& log) {
  try {
    if (!report_validation(run, log)) return kInvalid;
    write_json(run, "validation.json", {{"valid", true}, {"violations", json::array()}});
    return kOk;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kInvalid;
  }
}

// ---------------------------------------------------------------- entry point

int main(int argc, char** argv) {
  CLI::App app{"Effective Hamiltonians of switching Markov processes"};
  app.require_subcommand(1);
  Overrides ov;
  std::string config, out, preset_name;
  std::uint64_t seed = 0;
  int threads = 1;

  using Command = int (*)(const RunConfig&, std::ostream&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands = {
      {"sweep", "tabulate H(p): hamiltonian.csv, certificates.json", cmd_sweep},
      {"velocity", "macroscopic velocity DH(0): velocity.csv", cmd_velocity},
      {"legendre", "Lagrangian and path rate: lagrangian.csv, path_rate.json", cmd_legendre},
      {"simulate", "Monte Carlo concentration: summary.csv", cmd_simulate},
      {"check", "structural diagnostics: check.json", cmd_check},
      {"validate", "model assumptions: validation.json", cmd_validate},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, _] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON run configuration");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--preset", preset_name, "named model, e.g. constant_drift(1)");
    sub->add_option("--seed", seed, "base seed for stochastic commands");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }
  for (std::size_t k = 0; k < subs.size(); ++k) {
    auto* sub = subs[k];
    if (!sub->parsed()) continue;
    if (sub->count("--config")) ov.config_path = config;
    if (sub->count("--out")) ov.out = out;
    if (sub->count("--preset")) ov.preset = preset_name;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--threads")) ov.threads = threads;
    try {
      const RunConfig run = load(ov);
      return std::get<2>(commands[k])(run, std::cerr);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kInvalid;
    }
  }
  return kInvalid;
}

}  // namespace effham::cli
