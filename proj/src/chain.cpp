#include "effham/chain.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <string>

#include "effham/error.hpp"

namespace effham {

namespace {

int reach_count(const Eigen::MatrixXd& m, bool transposed) {
  const int n = static_cast<int>(m.rows());
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v) {
      if (v == u || seen[v]) continue;
      const double w = transposed ? m(v, u) : m(u, v);
      if (w > 0.0) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count;
}

}  // namespace

bool is_irreducible(const Eigen::MatrixXd& matrix) {
  const int n = static_cast<int>(matrix.rows());
  if (n <= 1) return true;
  return reach_count(matrix, false) == n && reach_count(matrix, true) == n;
}

GeneratorMatrix::GeneratorMatrix(const Eigen::MatrixXd& rates) {
  if (rates.rows() != rates.cols() || rates.rows() < 1) {
    throw ModelError("generator needs a non-empty square rate matrix");
  }
  const int n = static_cast<int>(rates.rows());
  q_ = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double out = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double r = rates(i, j);
      if (!std::isfinite(r)) {
        throw ModelError("switching rate r_" + std::to_string(i) + std::to_string(j) +
                         " is not finite");
      }
      if (r < 0.0) {
        throw ModelError("negative switching rate r_" + std::to_string(i) +
                         std::to_string(j) + " = " + std::to_string(r));
      }
      q_(i, j) = r;
      out += r;
    }
    q_(i, i) = -out;
  }
}

GeneratorMatrix generator_at(const SwitchingRateMatrix& rates,
                             std::span<const double> y) {
  return GeneratorMatrix(rates.rates_at(y));
}

GeneratorMatrix generator_at_site(const DiscreteModel& model, int site) {
  return GeneratorMatrix(model.switching_at(site));
}

StationaryMeasure stationary_measure(const GeneratorMatrix& q) {
  const int n = q.states();
  StationaryMeasure out;
  if (n == 1) {
    out.probabilities = Eigen::VectorXd::Ones(1);
    return out;
  }
  if (!q.irreducible()) {
    throw ModelError("reducible switching generator has no unique stationary measure");
  }
  // Solve Q^T mu = 0 with the last equation replaced by sum(mu) = 1.
  Eigen::MatrixXd a = q.matrix().transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::VectorXd mu = a.fullPivLu().solve(rhs);
  if (!mu.allFinite() || mu.minCoeff() <= 0.0) {
    throw NumericalError("stationary measure solve lost positivity");
  }
  mu /= mu.sum();
  out.probabilities = mu;
  out.residual = (mu.transpose() * q.matrix()).cwiseAbs().maxCoeff();
  return out;
}

DetailedBalanceReport detailed_balance_report(const ContinuousModel& model,
                                              int grid) {
  DetailedBalanceReport report;
  const int j_count = model.states();
  if (j_count == 1) return report;
  if (grid < 1) throw std::invalid_argument("detailed balance grid must be >= 1");

  std::vector<double> weighted(static_cast<std::size_t>(j_count) * j_count);
  for_each_grid_point(model.dim(), grid, model.period(), [&](std::span<const double> y) {
    std::vector<double> boltzmann(j_count);
    for (int i = 0; i < j_count; ++i) {
      boltzmann[i] = std::exp(-2.0 * model.potential(i).value(y));
    }
    for (int i = 0; i < j_count; ++i) {
      for (int j = 0; j < j_count; ++j) {
        if (i == j) continue;
        const double t = model.rates().rate(i, j, y) * boltzmann[i];
        weighted[i * j_count + j] = t;
        report.scale = std::max(report.scale, std::abs(t));
      }
    }
    for (int i = 0; i < j_count; ++i) {
      for (int j = i + 1; j < j_count; ++j) {
        const double v = std::abs(weighted[i * j_count + j] - weighted[j * j_count + i]);
        if (v > report.max_violation) {
          report.max_violation = v;
          report.location.assign(y.begin(), y.end());
          report.state_i = i;
          report.state_j = j;
        }
      }
    }
  });
  report.holds = report.max_violation <= 1e-10 * report.scale;
  return report;
}

std::vector<double> averaged_drift(const ContinuousModel& model,
                                   std::span<const double> y) {
  const int j_count = model.states();
  std::vector<double> out(model.dim(), 0.0);
  if (j_count == 1) return model.potential(0).gradient(y);
  const StationaryMeasure mu = stationary_measure(generator_at(model.rates(), y));
  for (int i = 0; i < j_count; ++i) {
    const auto g = model.potential(i).gradient(y);
    for (int a = 0; a < model.dim(); ++a) out[a] += mu.probabilities(i) * g[a];
  }
  return out;
}

std::pair<double, double> averaged_hop_rates(const DiscreteModel& model, int site) {
  const int j_count = model.states();
  if (j_count == 1) return {model.hop_plus(0, site), model.hop_minus(0, site)};
  const StationaryMeasure mu = stationary_measure(generator_at_site(model, site));
  double plus = 0.0;
  double minus = 0.0;
  for (int i = 0; i < j_count; ++i) {
    plus += mu.probabilities(i) * model.hop_plus(i, site);
    minus += mu.probabilities(i) * model.hop_minus(i, site);
  }
  return {plus, minus};
}

}  // namespace effham
