#include "effham/hamiltonian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "effham/chain.hpp"
#include "effham/error.hpp"
#include "effham/parallel.hpp"

namespace effham {

HamiltonianValue hamiltonian_at(const Model& model, std::span<const double> p,
                                const SolverParams& params) {
  if (static_cast<int>(p.size()) != dim_of(model)) {
    throw std::invalid_argument("momentum has dimension " + std::to_string(p.size()) +
                                ", model has " + std::to_string(dim_of(model)));
  }
  const AssembledOperator op = assemble(model, p, params.resolution, params.scheme);
  HamiltonianValue out;
  out.certificate = principal_eigenpair(op, params.eigen_options());
  out.value = out.certificate.eigenvalue;
  return out;
}

HamiltonianValue hamiltonian_at(const Model& model, double p, const SolverParams& params) {
  const double q[1] = {p};
  return hamiltonian_at(model, std::span<const double>(q, 1), params);
}

std::vector<double> uniform_grid(double lo, double hi, int count) {
  if (count < 2) throw ConfigError("a grid needs at least two points");
  if (!(hi > lo)) throw ConfigError("grid range is empty");
  std::vector<double> out(count);
  const double span = count - 1;
  for (int k = 0; k < count; ++k) out[k] = (lo * (count - 1 - k) + hi * k) / span;
  return out;
}

namespace {

bool same_point(std::span<const double> a, std::span<const double> b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > tol * (1.0 + std::abs(a[i]))) return false;
  }
  return true;
}

// Fills momenta and lines of a table whose axis_grid is already final.
void lay_out(HamiltonianTable& table) {
  const int d = table.dim;
  const int n = static_cast<int>(table.axis_grid.size());
  const auto zero_at = static_cast<int>(
      std::find(table.axis_grid.begin(), table.axis_grid.end(), 0.0) - table.axis_grid.begin());
  table.samples.clear();
  table.lines.clear();
  table.line_axis.clear();

  if (d == 1 || !table.lattice) {
    // Axis lines through the origin, sharing the origin sample.
    table.samples.emplace_back().momentum.assign(d, 0.0);
    for (int a = 0; a < d; ++a) {
      std::vector<int> line;
      for (int k = 0; k < n; ++k) {
        if (k == zero_at) {
          line.push_back(0);
          continue;
        }
        std::vector<double> p(d, 0.0);
        p[a] = table.axis_grid[k];
        line.push_back(static_cast<int>(table.samples.size()));
        table.samples.emplace_back().momentum = std::move(p);
      }
      table.lines.push_back(std::move(line));
      table.line_axis.push_back(a);
    }
    return;
  }

  long total = 1;
  for (int a = 0; a < d; ++a) total *= n;
  table.samples.resize(total);
  std::vector<long> stride(d, 1);
  for (int a = 1; a < d; ++a) stride[a] = stride[a - 1] * n;
  for (long s = 0; s < total; ++s) {
    std::vector<double> p(d);
    for (int a = 0; a < d; ++a) p[a] = table.axis_grid[(s / stride[a]) % n];
    table.samples[s].momentum = std::move(p);
  }
  for (int a = 0; a < d; ++a) {
    for (long s = 0; s < total; ++s) {
      if ((s / stride[a]) % n != 0) continue;  // one line per start point on the a = 0 face
      std::vector<int> line(n);
      for (int k = 0; k < n; ++k) line[k] = static_cast<int>(s + k * stride[a]);
      table.lines.push_back(std::move(line));
      table.line_axis.push_back(a);
    }
  }
}

HamiltonianTable make_layout(int dim, std::vector<double> axis_grid, bool lattice,
                             bool& augmented) {
  if (dim < 1) throw ConfigError("dimension must be positive");
  for (double p : axis_grid) {
    if (!std::isfinite(p)) throw ConfigError("momentum grid contains a non-finite value");
  }
  std::sort(axis_grid.begin(), axis_grid.end());
  axis_grid.erase(std::unique(axis_grid.begin(), axis_grid.end()), axis_grid.end());
  augmented = false;
  if (!std::binary_search(axis_grid.begin(), axis_grid.end(), 0.0)) {
    axis_grid.insert(std::upper_bound(axis_grid.begin(), axis_grid.end(), 0.0), 0.0);
    augmented = true;
  }
  if (axis_grid.size() < 3) throw ConfigError("a sweep needs at least three momenta");
  HamiltonianTable table;
  table.dim = dim;
  table.axis_grid = std::move(axis_grid);
  table.lattice = lattice && dim > 1;
  lay_out(table);
  return table;
}

}  // namespace

const HamiltonianSample* HamiltonianTable::find(std::span<const double> p, double tol) const {
  if (static_cast<int>(p.size()) != dim) return nullptr;
  for (const auto& s : samples) {
    if (same_point(s.momentum, p, tol)) return &s;
  }
  return nullptr;
}

const HamiltonianSample* HamiltonianTable::find(double p, double tol) const {
  const double q[1] = {p};
  return find(std::span<const double>(q, 1), tol);
}

bool HamiltonianTable::complete() const { return failures() == 0; }

int HamiltonianTable::failures() const {
  return static_cast<int>(
      std::count_if(samples.begin(), samples.end(), [](const auto& s) { return !s.ok(); }));
}

HamiltonianTable sweep_points(const Model& model, std::vector<double> axis_grid,
                              const SolverParams& params, const SweepOptions& options) {
  bool augmented = false;
  HamiltonianTable table = make_layout(dim_of(model), std::move(axis_grid), options.lattice,
                                       augmented);
  auto& prov = table.provenance;
  prov.model_name = name_of(model);
  prov.regime = regime_of(model);
  prov.discrete = std::holds_alternative<DiscreteModel>(model);
  prov.resolution = prov.discrete ? std::get<DiscreteModel>(model).length() : params.resolution;
  prov.tol = params.tol;
  prov.scheme = params.scheme;
  prov.grid_augmented = augmented;

  parallel_for(static_cast<long>(table.samples.size()), options.threads, [&](long i) {
    auto& sample = table.samples[i];
    try {
      auto result = hamiltonian_at(model, sample.momentum, params);
      sample.value = result.value;
      sample.certificate = std::move(result.certificate);
    } catch (const ConvergenceError& e) {
      sample.certificate = e.last_certificate();
      sample.error = e.what();
    } catch (const Error& e) {
      sample.error = e.what();
    }
  });
  return table;
}

HamiltonianTable sweep(const Model& model, double p_min, double p_max, int count,
                       const SolverParams& params, const SweepOptions& options) {
  if (count < 3) throw ConfigError("sweep count must be at least 3");
  return sweep_points(model, uniform_grid(p_min, p_max, count), params, options);
}

HamiltonianTable tabulate(int dim, std::vector<double> axis_grid,
                          const std::function<double(std::span<const double>)>& h,
                          bool lattice) {
  bool augmented = false;
  HamiltonianTable table = make_layout(dim, std::move(axis_grid), lattice, augmented);
  table.provenance.grid_augmented = augmented;
  for (auto& s : table.samples) s.value = h(s.momentum);
  return table;
}

// ---------------------------------------------------------------- velocity

namespace {

VelocityEstimate richardson(const std::vector<std::array<double, 4>>& h, double delta) {
  // h[a] = {H(-2d), H(-d), H(d), H(2d)} along axis a.
  VelocityEstimate out;
  out.delta = delta;
  for (const auto& v : h) {
    const double d1 = (v[2] - v[1]) / (2.0 * delta);
    const double d2 = (v[3] - v[0]) / (4.0 * delta);
    const double r = (4.0 * d1 - d2) / 3.0;
    out.velocity.push_back(r);
    out.error_estimate.push_back(std::abs(r - d1));
  }
  return out;
}

}  // namespace

VelocityEstimate velocity(const HamiltonianTable& table) {
  const double tol = 1e-9;
  for (double t : table.axis_grid) {
    if (t <= 0.0) continue;
    std::vector<std::array<double, 4>> h;
    for (int a = 0; a < table.dim; ++a) {
      std::array<double, 4> v{};
      bool ok = true;
      const double offsets[4] = {-2.0 * t, -t, t, 2.0 * t};
      for (int m = 0; m < 4 && ok; ++m) {
        std::vector<double> p(table.dim, 0.0);
        p[a] = offsets[m];
        const auto* s = table.find(p, tol);
        ok = s != nullptr && s->ok();
        if (ok) v[m] = s->value;
      }
      if (!ok) break;
      h.push_back(v);
    }
    if (static_cast<int>(h.size()) == table.dim) return richardson(h, t);
  }
  throw ConfigError(
      "momentum grid is too coarse around 0: need solved samples at +-delta and +-2 delta");
}

VelocityEstimate velocity_probe(const Model& model, const SolverParams& params, double delta) {
  if (!(delta > 0.0)) throw ConfigError("velocity step must be positive");
  const int d = dim_of(model);
  std::vector<std::array<double, 4>> h(d);
  const double offsets[4] = {-2.0 * delta, -delta, delta, 2.0 * delta};
  for (int a = 0; a < d; ++a) {
    for (int m = 0; m < 4; ++m) {
      std::vector<double> p(d, 0.0);
      p[a] = offsets[m];
      h[a][m] = hamiltonian_at(model, p, params).value;
    }
  }
  return richardson(h, delta);
}

// ---------------------------------------------------------------- Legendre

namespace {

// Quadratic through (x0,f0),(x1,f1),(x2,f2) written around x1 as
// f1 + b (x - x1) + c (x - x1)^2.
struct LocalParabola {
  double b = 0.0;
  double c = 0.0;
};

LocalParabola parabola(double x0, double f0, double x1, double f1, double x2, double f2) {
  const double d0 = x1 - x0;
  const double d1 = x2 - x1;
  const double s0 = (f1 - f0) / d0;
  const double s1 = (f2 - f1) / d1;
  LocalParabola q;
  q.c = (s1 - s0) / (d0 + d1);
  q.b = s0 + q.c * d0;
  return q;
}

// Offset of the parabola's maximum from x1, kept inside [-d0, d1].
double vertex_offset(const LocalParabola& q, double d0, double d1) {
  if (!(q.c < 0.0)) return 0.0;
  return std::clamp(-q.b / (2.0 * q.c), -d0, d1);
}

std::vector<std::vector<double>> v_lattice(int dim, const std::vector<double>& axis) {
  std::vector<std::vector<double>> out;
  const int n = static_cast<int>(axis.size());
  long total = 1;
  for (int a = 0; a < dim; ++a) total *= n;
  for (long s = 0; s < total; ++s) {
    std::vector<double> v(dim);
    long r = s;
    for (int a = 0; a < dim; ++a) {
      v[a] = axis[r % n];
      r /= n;
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

LagrangianTable legendre(const HamiltonianTable& table, const std::vector<double>& v_axis_grid) {
  if (v_axis_grid.empty()) throw ConfigError("velocity grid is empty");
  if (!std::is_sorted(v_axis_grid.begin(), v_axis_grid.end())) {
    throw ConfigError("velocity grid must be sorted");
  }
  if (table.dim > 1 && !table.lattice) {
    throw ConfigError("the Legendre transform in d > 1 needs a full-lattice sweep");
  }
  const int d = table.dim;
  const int n = static_cast<int>(table.axis_grid.size());
  LagrangianTable out;
  out.dim = d;
  out.axis_grid = v_axis_grid;

  if (d == 1) {
    std::vector<double> ps, hs;
    for (int idx : table.lines.front()) {
      const auto& s = table.samples[idx];
      if (!s.ok()) continue;
      ps.push_back(s.momentum[0]);
      hs.push_back(s.value);
    }
    if (ps.size() < 3) throw NumericalError("too few solved samples for a Legendre transform");
    const int m = static_cast<int>(ps.size());
    for (double v : v_axis_grid) {
      int best = 0;
      for (int k = 1; k < m; ++k) {
        if (ps[k] * v - hs[k] > ps[best] * v - hs[best]) best = k;
      }
      LagrangianSample ls{{v}, ps[best] * v - hs[best], {ps[best]}, best == 0 || best == m - 1};
      if (!ls.boundary) {
        const auto f = [&](int k) { return ps[k] * v - hs[k]; };
        const auto q = parabola(ps[best - 1], f(best - 1), ps[best], f(best), ps[best + 1],
                                f(best + 1));
        const double dx = vertex_offset(q, ps[best] - ps[best - 1], ps[best + 1] - ps[best]);
        const double refined = f(best) + q.b * dx + q.c * dx * dx;
        if (refined > ls.value) {
          ls.value = refined;
          ls.pstar[0] = ps[best] + dx;
        }
      }
      out.samples.push_back(std::move(ls));
    }
    return out;
  }

  // Full lattice: discrete argmax, then axis-wise parabolic refinement.
  std::vector<long> stride(d, 1);
  for (int a = 1; a < d; ++a) stride[a] = stride[a - 1] * n;
  const auto& samples = table.samples;
  for (auto& v : v_lattice(d, v_axis_grid)) {
    const auto f = [&](long s) {
      double dot = 0.0;
      for (int a = 0; a < d; ++a) dot += samples[s].momentum[a] * v[a];
      return dot - samples[s].value;
    };
    long best = -1;
    for (long s = 0; s < static_cast<long>(samples.size()); ++s) {
      if (!samples[s].ok()) continue;
      if (best < 0 || f(s) > f(best)) best = s;
    }
    if (best < 0) throw NumericalError("no solved samples for a Legendre transform");
    LagrangianSample ls{v, f(best), samples[best].momentum, false};
    double gain = 0.0;
    for (int a = 0; a < d; ++a) {
      const long k = (best / stride[a]) % n;
      if (k == 0 || k == n - 1) {
        ls.boundary = true;
        continue;
      }
      const long lo = best - stride[a];
      const long hi = best + stride[a];
      if (!samples[lo].ok() || !samples[hi].ok()) continue;
      const double x0 = samples[lo].momentum[a];
      const double x1 = samples[best].momentum[a];
      const double x2 = samples[hi].momentum[a];
      const auto q = parabola(x0, f(lo), x1, f(best), x2, f(hi));
      const double dx = vertex_offset(q, x1 - x0, x2 - x1);
      gain += q.b * dx + q.c * dx * dx;
      ls.pstar[a] = x1 + dx;
    }
    ls.value += std::max(gain, 0.0);
    out.samples.push_back(std::move(ls));
  }
  return out;
}

double lagrangian_at(const LagrangianTable& lagrangian, std::span<const double> v) {
  const int d = lagrangian.dim;
  const auto& grid = lagrangian.axis_grid;
  const int n = static_cast<int>(grid.size());
  if (static_cast<int>(v.size()) != d) throw std::invalid_argument("velocity dimension mismatch");

  // Bracketing cell per axis.
  std::vector<int> lo(d);
  std::vector<double> frac(d);
  for (int a = 0; a < d; ++a) {
    const double slack = 1e-12 * (1.0 + std::abs(v[a]));
    if (v[a] < grid.front() - slack || v[a] > grid.back() + slack) {
      throw NumericalError("velocity " + std::to_string(v[a]) +
                           " lies outside the tabulated range; the rate is unresolved");
    }
    if (n == 1) {
      lo[a] = 0;
      frac[a] = 0.0;
      continue;
    }
    const auto it = std::upper_bound(grid.begin(), grid.end(), v[a]);
    lo[a] = std::clamp(static_cast<int>(it - grid.begin()) - 1, 0, n - 2);
    frac[a] = std::clamp((v[a] - grid[lo[a]]) / (grid[lo[a] + 1] - grid[lo[a]]), 0.0, 1.0);
  }
  const auto node = [&](const std::vector<int>& idx) -> const LagrangianSample& {
    long s = 0, stride = 1;
    for (int a = 0; a < d; ++a) {
      s += idx[a] * stride;
      stride *= n;
    }
    const auto& sample = lagrangian.samples[s];
    if (sample.boundary) {
      throw NumericalError("Lagrangian near this velocity is only a lower bound (sup on the "
                           "momentum-grid edge); widen the momentum range");
    }
    return sample;
  };

  if (d == 1) {
    if (n == 1 || frac[0] == 0.0) return node({lo[0]}).value;
    if (frac[0] == 1.0) return node({lo[0] + 1}).value;
    // Cubic Hermite with slopes L'(v) = p*(v).
    const auto& a = node({lo[0]});
    const auto& b = node({lo[0] + 1});
    const double h = grid[lo[0] + 1] - grid[lo[0]];
    const double t = frac[0];
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    const double h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t);
    const double h11 = t * t * (t - 1);
    return h00 * a.value + h10 * h * a.pstar[0] + h01 * b.value + h11 * h * b.pstar[0];
  }

  double value = 0.0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    std::vector<int> idx(d);
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      const bool up = (corner >> a) & 1;
      idx[a] = std::min(lo[a] + (up ? 1 : 0), n - 1);
      w *= up ? frac[a] : 1.0 - frac[a];
    }
    if (w == 0.0) continue;
    value += w * node(idx).value;
  }
  return value;
}

double path_rate(const std::vector<PathKnot>& knots, const LagrangianTable& lagrangian,
                 double initial_rate) {
  if (knots.size() < 2) throw ConfigError("a path needs at least two knots");
  double total = initial_rate;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double dt = knots[k + 1].t - knots[k].t;
    if (!(dt > 0.0)) throw ConfigError("path knot times must be strictly increasing");
    if (static_cast<int>(knots[k].x.size()) != lagrangian.dim ||
        knots[k + 1].x.size() != knots[k].x.size()) {
      throw ConfigError("path knot dimension does not match the Lagrangian");
    }
    std::vector<double> v(lagrangian.dim);
    for (int a = 0; a < lagrangian.dim; ++a) v[a] = (knots[k + 1].x[a] - knots[k].x[a]) / dt;
    total += dt * lagrangian_at(lagrangian, v);
  }
  return total;
}

// ---------------------------------------------------------------- diagnostics

ConvexityReport convexity_report(const HamiltonianTable& table) {
  ConvexityReport report;
  for (std::size_t l = 0; l < table.lines.size(); ++l) {
    const int a = table.line_axis[l];
    std::vector<const HamiltonianSample*> pts;
    for (int idx : table.lines[l]) {
      if (table.samples[idx].ok()) pts.push_back(&table.samples[idx]);
    }
    for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
      const double t0 = pts[k - 1]->momentum[a];
      const double t1 = pts[k]->momentum[a];
      const double t2 = pts[k + 1]->momentum[a];
      const double chord =
          ((t2 - t1) * pts[k - 1]->value + (t1 - t0) * pts[k + 1]->value) / (t2 - t0);
      const double violation = pts[k]->value - chord;
      ++report.triples;
      if (violation > report.max_violation) {
        report.max_violation = violation;
        report.location = pts[k]->momentum;
      }
    }
  }
  return report;
}

SymmetryReport symmetry_check(const HamiltonianTable& table) {
  SymmetryReport report;
  for (const auto& s : table.samples) {
    if (!s.ok()) continue;
    // Visit each pair once: first nonzero coordinate positive.
    const auto first = std::find_if(s.momentum.begin(), s.momentum.end(),
                                    [](double x) { return x != 0.0; });
    if (first == s.momentum.end() || *first < 0.0) continue;
    std::vector<double> mirrored(s.momentum);
    for (double& x : mirrored) x = -x;
    const auto* m = table.find(mirrored, 1e-9);
    if (m == nullptr || !m->ok()) continue;
    ++report.pairs;
    const double diff = std::abs(s.value - m->value);
    if (report.location.empty() || diff > report.max_asymmetry) {
      report.max_asymmetry = diff;
      report.location = s.momentum;
    }
  }
  return report;
}

namespace {

double max_gradient_squared(const ContinuousModel& model, int grid) {
  double worst = 0.0;
  for_each_grid_point(model.dim(), grid, model.period(), [&](std::span<const double> y) {
    for (int i = 0; i < model.states(); ++i) {
      double g2 = 0.0;
      for (double g : model.potential(i).gradient(y)) g2 += g * g;
      worst = std::max(worst, g2);
    }
  });
  return worst;
}

double discrete_bound(const DiscreteModel& model, double p) {
  const double up = std::expm1(p);
  const double down = std::expm1(-p);
  double bound = std::numeric_limits<double>::infinity();
  for (int k = 0; k < model.length(); ++k) {
    if (model.regime() == Regime::kII) {
      const auto [rp, rm] = averaged_hop_rates(model, k);
      bound = std::min(bound, rp * up + rm * down);
      continue;
    }
    for (int i = 0; i < model.states(); ++i) {
      bound = std::min(bound, model.hop_plus(i, k) * up + model.hop_minus(i, k) * down);
    }
  }
  return bound;
}

}  // namespace

double coercivity_bound(const Model& model, std::span<const double> p, int grid) {
  if (const auto* dm = std::get_if<DiscreteModel>(&model)) return discrete_bound(*dm, p[0]);
  const auto& cm = std::get<ContinuousModel>(model);
  double p2 = 0.0;
  for (double x : p) p2 += x * x;
  return 0.25 * p2 - max_gradient_squared(cm, grid);
}

CoercivityReport coercivity_check(const HamiltonianTable& table, const Model& model) {
  CoercivityReport report;
  const auto* cm = std::get_if<ContinuousModel>(&model);
  const int grid = std::max(table.provenance.resolution, 16);
  const double sup_grad = cm != nullptr ? max_gradient_squared(*cm, grid) : 0.0;
  for (const auto& s : table.samples) {
    if (!s.ok()) continue;
    double bound;
    if (cm != nullptr) {
      double p2 = 0.0;
      for (double x : s.momentum) p2 += x * x;
      bound = 0.25 * p2 - sup_grad;
    } else {
      bound = discrete_bound(std::get<DiscreteModel>(model), s.momentum[0]);
    }
    // The bound is attained exactly in some closed-form cases, so allow for
    // the eigensolver tolerance.
    const double slack =
        1e-8 * (1.0 + std::abs(bound)) + 10.0 * table.provenance.tol * (1.0 + std::abs(s.value));
    const double margin = s.value - bound;
    if (margin < report.min_margin) {
      report.min_margin = margin;
      report.location = s.momentum;
    }
    if (margin < -slack) report.holds = false;
  }
  return report;
}

RefinementReport refine(const Model& model, std::span<const double> p, int base_resolution,
                        int levels, const SolverParams& params) {
  if (!std::holds_alternative<ContinuousModel>(model)) {
    throw ConfigError("grid refinement applies to continuous models only");
  }
  if (levels < 2) throw ConfigError("refinement needs at least two levels");
  if (base_resolution < 2) throw ConfigError("base resolution must be at least 2");
  RefinementReport report;
  SolverParams level = params;
  for (int k = 0; k < levels; ++k) {
    level.resolution = base_resolution << k;
    report.resolutions.push_back(level.resolution);
    report.values.push_back(hamiltonian_at(model, p, level).value);
  }
  const double fine = report.values.back();
  const double coarse = report.values[levels - 2];
  report.extrapolated = (4.0 * fine - coarse) / 3.0;
  report.error_estimate = std::abs(report.extrapolated - fine);
  if (levels >= 3) {
    const double e1 = std::abs(report.values[levels - 3] - coarse);
    const double e2 = std::abs(coarse - fine);
    if (e1 > 0.0 && e2 > 0.0) report.observed_order = std::log2(e1 / e2);
  }
  return report;
}

}  // namespace effham
