#include "effham/operator.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <ostream>
#include <sstream>

#include "effham/chain.hpp"

namespace effham {

const char* to_string(Discretization scheme) {
  return scheme == Discretization::kExponentialFitting ? "exponential" : "central";
}

// ---------------------------------------------------------------------------
// AssembledOperator

namespace {

bool strongly_connected(const AssembledOperator::Sparse& m) {
  const int n = static_cast<int>(m.rows());
  if (n <= 1) return true;
  std::vector<std::vector<int>> forward(n), backward(n);
  for (int r = 0; r < n; ++r) {
    for (AssembledOperator::Sparse::InnerIterator it(m, r); it; ++it) {
      if (it.col() != r && it.value() > 0.0) {
        forward[r].push_back(static_cast<int>(it.col()));
        backward[it.col()].push_back(r);
      }
    }
  }
  auto reach_all = [n](const std::vector<std::vector<int>>& adj) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : adj[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n;
  };
  return reach_all(forward) && reach_all(backward);
}

}  // namespace

AssembledOperator::AssembledOperator(Sparse matrix, int sites, int states,
                                     OperatorMetadata metadata)
    : matrix_(std::move(matrix)), sites_(sites), states_(states), metadata_(std::move(metadata)) {
  if (matrix_.rows() != matrix_.cols()) throw NumericalError("operator must be square");
  if (static_cast<long>(sites_) * states_ != matrix_.rows()) {
    throw NumericalError("operator size does not match sites x states");
  }
  matrix_.makeCompressed();
  for (int r = 0; r < matrix_.rows(); ++r) {
    for (Sparse::InnerIterator it(matrix_, r); it; ++it) {
      if (!std::isfinite(it.value())) {
        throw NumericalError("operator entry (" + std::to_string(r) + "," +
                             std::to_string(it.col()) + ") is not finite");
      }
      if (it.col() != r && it.value() < 0.0) {
        std::ostringstream os;
        os << "Metzler violation: entry (" << r << "," << it.col() << ") = " << it.value();
        throw NumericalError(os.str());
      }
    }
  }
  if (!strongly_connected(matrix_)) throw NumericalError("operator is reducible");
}

AssembledOperator AssembledOperator::from_dense(const Eigen::MatrixXd& matrix) {
  Sparse s = matrix.sparseView();
  // Keep the diagonal even when it is zero so the pattern is complete.
  for (int i = 0; i < matrix.rows(); ++i) s.coeffRef(i, i) += 0.0;
  return AssembledOperator(std::move(s), static_cast<int>(matrix.rows()), 1);
}

Eigen::MatrixXd AssembledOperator::to_dense() const { return Eigen::MatrixXd(matrix_); }

void AssembledOperator::write_triplets(std::ostream& os) const {
  os << "# rows=" << matrix_.rows() << " cols=" << matrix_.cols() << " sites=" << sites_
     << " states=" << states_ << '\n';
  os.precision(17);
  for (int r = 0; r < matrix_.rows(); ++r) {
    for (Sparse::InnerIterator it(matrix_, r); it; ++it) {
      os << r << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Discrete assemblies

AssembledOperator assemble_discrete_I(const DiscreteModel& model, double p) {
  const int length = model.length();
  const int j_count = model.states();
  const double up = std::exp(p);
  const double down = std::exp(-p);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(length) * j_count * (3 + j_count));
  auto idx = [&](int site, int state) { return model.wrap(site) * j_count + state; };
  for (int k = 0; k < length; ++k) {
    for (int i = 0; i < j_count; ++i) {
      const int row = idx(k, i);
      const double plus = model.hop_plus(i, k);
      const double minus = model.hop_minus(i, k);
      triplets.emplace_back(row, idx(k + 1, i), plus * up);
      triplets.emplace_back(row, idx(k - 1, i), minus * down);
      double diag = -(plus + minus);
      for (int j = 0; j < j_count; ++j) {
        const double s = model.switching(i, j, k);
        if (j == i || s == 0.0) continue;
        triplets.emplace_back(row, idx(k, j), s);
        diag -= s;
      }
      triplets.emplace_back(row, row, diag);
    }
  }
  AssembledOperator::Sparse m(length * j_count, length * j_count);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return AssembledOperator(std::move(m), length, j_count,
                           {model.name(), {p}, length, Regime::kI, Discretization::kExponentialFitting});
}

AssembledOperator assemble_discrete_II(const DiscreteModel& model, double p) {
  const int length = model.length();
  const double up = std::exp(p);
  const double down = std::exp(-p);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(length) * 3);
  for (int k = 0; k < length; ++k) {
    const auto [plus, minus] = averaged_hop_rates(model, k);
    triplets.emplace_back(k, model.wrap(k + 1), plus * up);
    triplets.emplace_back(k, model.wrap(k - 1), minus * down);
    triplets.emplace_back(k, k, -(plus + minus));
  }
  AssembledOperator::Sparse m(length, length);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return AssembledOperator(std::move(m), length, 1,
                           {model.name(), {p}, length, Regime::kII, Discretization::kExponentialFitting});
}

// ---------------------------------------------------------------------------
// Continuous assemblies

namespace {

// Potential drop psi(y') - psi(y) along one grid edge, for either a single
// chemical state or the averaged drift Fbar.
class EdgeDrop {
 public:
  EdgeDrop(const ContinuousModel& model, bool averaged) : model_(model), averaged_(averaged) {
    if (!averaged_) return;
    const int j_count = model.states();
    bool identical = true;
    for (int i = 1; i < j_count; ++i) {
      const auto& a = model.potential(i);
      const auto& b = model.potential(0);
      if (a.slope() != b.slope() || a.terms().size() != b.terms().size()) {
        identical = false;
        break;
      }
      for (std::size_t t = 0; t < a.terms().size(); ++t) {
        const auto& x = a.terms()[t];
        const auto& y = b.terms()[t];
        if (x.wave != y.wave || x.cos_coeff != y.cos_coeff || x.sin_coeff != y.sin_coeff) {
          identical = false;
        }
      }
    }
    if (j_count == 1 || identical) {
      weights_ = Eigen::VectorXd::Zero(j_count);
      weights_(0) = 1.0;
    } else if (model.rates().is_constant()) {
      const std::vector<double> origin(model.dim(), 0.0);
      weights_ = stationary_measure(generator_at(model.rates(), origin)).probabilities;
    }
  }

  double operator()(int state, std::span<const double> y, int axis, double step) const {
    std::vector<double> end(y.begin(), y.end());
    end[axis] += step;
    if (!averaged_) {
      return model_.potential(state).value(end) - model_.potential(state).value(y);
    }
    if (weights_.size() > 0) {
      double drop = 0.0;
      for (int i = 0; i < weights_.size(); ++i) {
        if (weights_(i) == 0.0) continue;
        drop += weights_(i) * (model_.potential(i).value(end) - model_.potential(i).value(y));
      }
      return drop;
    }
    // Position-dependent stationary measure: integrate Fbar along the edge.
    std::vector<double> point(y.begin(), y.end());
    auto integrand = [&](double t) {
      point[axis] = y[axis] + t;
      return averaged_drift(model_, point)[axis];
    };
    return boost::math::quadrature::gauss<double, 10>::integrate(integrand, 0.0, step);
  }

 private:
  const ContinuousModel& model_;
  bool averaged_;
  Eigen::VectorXd weights_;  // constant averaging weights when available
};

AssembledOperator assemble_continuous(const ContinuousModel& model, std::span<const double> p,
                                      int resolution, Discretization scheme, bool averaged) {
  const int dim = model.dim();
  if (static_cast<int>(p.size()) != dim) {
    throw std::invalid_argument("momentum has dimension " + std::to_string(p.size()) +
                                ", model expects " + std::to_string(dim));
  }
  if (resolution < 2) throw ModelError("grid resolution must be >= 2");
  const int n = resolution;
  long sites_long = 1;
  for (int a = 0; a < dim; ++a) sites_long *= n;
  if (sites_long > 50'000'000) throw ModelError("grid too large");
  const int sites = static_cast<int>(sites_long);
  const int states = averaged ? 1 : model.states();
  const double h = model.period() / n;
  const double c2 = 1.0 / (2.0 * h * h);

  std::vector<long> stride(dim, 1);
  for (int a = 1; a < dim; ++a) stride[a] = stride[a - 1] * n;

  EdgeDrop edge_drop(model, averaged);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(sites) * states * (2 * dim + states + 1));

  bool peclet_violated = false;
  double max_drift = 0.0;

  std::vector<int> idx(dim, 0);
  std::vector<double> y(dim, 0.0);
  for (int s = 0; s < sites; ++s) {
    for (int a = 0; a < dim; ++a) y[a] = h * idx[a];
    auto neighbor = [&](int axis, int dir) {
      const int shifted = (idx[axis] + dir + n) % n;
      return static_cast<int>(s + (shifted - idx[axis]) * stride[axis]);
    };

    std::vector<double> avg_grad;
    if (averaged && scheme == Discretization::kCentralDifference) avg_grad = averaged_drift(model, y);

    for (int i = 0; i < states; ++i) {
      const int row = s * states + i;
      double diag = 0.0;
      if (scheme == Discretization::kExponentialFitting) {
        for (int a = 0; a < dim; ++a) {
          for (int dir : {+1, -1}) {
            const double w = c2 * std::exp(-edge_drop(i, y, a, dir * h));
            triplets.emplace_back(row, neighbor(a, dir) * states + i, w * std::exp(dir * p[a] * h));
            diag -= w;
          }
        }
      } else {
        const std::vector<double> grad = averaged ? avg_grad : model.potential(i).gradient(y);
        double p2 = 0.0;
        double pg = 0.0;
        for (int a = 0; a < dim; ++a) {
          const double b = p[a] - grad[a];
          max_drift = std::max(max_drift, std::abs(b));
          for (int dir : {+1, -1}) {
            const double coef = c2 + dir * b / (2.0 * h);
            if (coef < 0.0) {
              peclet_violated = true;
            }
            triplets.emplace_back(row, neighbor(a, dir) * states + i, coef);
          }
          diag -= 2.0 * c2;
          p2 += p[a] * p[a];
          pg += p[a] * grad[a];
        }
        diag += 0.5 * p2 - pg;
      }
      if (!averaged) {
        for (int j = 0; j < states; ++j) {
          if (j == i) continue;
          const double r = model.rates().rate(i, j, y);
          if (r == 0.0) continue;
          triplets.emplace_back(row, s * states + j, r);
          diag -= r;
        }
      }
      triplets.emplace_back(row, row, diag);
    }

    for (int a = 0; a < dim; ++a) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
  }

  if (peclet_violated) {
    const int minimal = static_cast<int>(std::ceil(model.period() * max_drift));
    throw PecletError("central differences need N >= " + std::to_string(minimal) +
                          " for max |p - grad psi| = " + std::to_string(max_drift) + " (got N = " +
                          std::to_string(n) + ")",
                      minimal);
  }

  AssembledOperator::Sparse m(sites * states, sites * states);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return AssembledOperator(std::move(m), sites, states,
                           {model.name(), std::vector<double>(p.begin(), p.end()), n,
                            averaged ? Regime::kII : Regime::kI, scheme});
}

}  // namespace

AssembledOperator assemble_continuous_I(const ContinuousModel& model, std::span<const double> p,
                                        int resolution, Discretization scheme) {
  return assemble_continuous(model, p, resolution, scheme, false);
}

AssembledOperator assemble_continuous_II(const ContinuousModel& model, std::span<const double> p,
                                         int resolution, Discretization scheme) {
  return assemble_continuous(model, p, resolution, scheme, true);
}

AssembledOperator assemble(const Model& model, std::span<const double> p, int resolution,
                           Discretization scheme) {
  if (const auto* c = std::get_if<ContinuousModel>(&model)) {
    return c->regime() == Regime::kI ? assemble_continuous_I(*c, p, resolution, scheme)
                                     : assemble_continuous_II(*c, p, resolution, scheme);
  }
  const auto& d = std::get<DiscreteModel>(model);
  if (p.size() != 1) throw std::invalid_argument("discrete models take a scalar momentum");
  return d.regime() == Regime::kI ? assemble_discrete_I(d, p[0]) : assemble_discrete_II(d, p[0]);
}

}  // namespace effham
