#include "effham/principal.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace effham {

const char* to_string(EigenMethod method) {
  return method == EigenMethod::kShiftInvert ? "shift_invert" : "shifted_power";
}

namespace {

std::pair<double, double> bounds_from_product(const Eigen::VectorXd& mg,
                                              const Eigen::VectorXd& g) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!(g(i) > 0.0)) {
      throw std::invalid_argument("Collatz-Wielandt bounds need a strictly positive vector");
    }
    const double r = mg(i) / g(i);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {lo, hi};
}

// Each computed ratio (Mg)_i / g_i carries a rounding error of order
// u (|M| g)_i / g_i; a gap below twice that cannot be resolved in floating
// point, so it replaces the requested tolerance when that is smaller.
class Stopping {
 public:
  Stopping(const AssembledOperator::Sparse& m, double tol) : abs_(m.cwiseAbs()), tol_(tol) {}

  bool operator()(double lo, double hi, const Eigen::VectorXd& g) const {
    const double gap = hi - lo;
    const double wanted = tol_ * (1.0 + std::abs(0.5 * (lo + hi)));
    if (gap <= wanted) return true;
    if (gap > 1e-6 * (1.0 + std::abs(0.5 * (lo + hi)))) return false;
    const Eigen::VectorXd mag = abs_ * g;
    const double unit = 8.0 * std::numeric_limits<double>::epsilon();
    const double floor = 2.0 * unit * (mag.array() / g.array()).maxCoeff();
    return gap <= floor;
  }

 private:
  AssembledOperator::Sparse abs_;
  double tol_;
};

EigenCertificate make_certificate(const AssembledOperator::Sparse& m, Eigen::VectorXd g,
                                  long iterations) {
  EigenCertificate c;
  const Eigen::VectorXd mg = m * g;
  std::tie(c.cw_lower, c.cw_upper) = bounds_from_product(mg, g);
  c.eigenvalue = 0.5 * (c.cw_lower + c.cw_upper);
  c.residual = (mg - c.eigenvalue * g).cwiseAbs().maxCoeff();
  c.eigenvector = std::move(g);
  c.iterations = iterations;
  return c;
}

EigenCertificate shifted_power(const AssembledOperator::Sparse& m, const EigenOptions& options) {
  const Eigen::Index n = m.rows();
  const double alpha = 1.0 + m.diagonal().cwiseAbs().maxCoeff();
  const Stopping converged(m, options.tol);
  Eigen::VectorXd g = Eigen::VectorXd::Ones(n);
  for (long it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd mg = m * g;
    const auto [lo, hi] = bounds_from_product(mg, g);
    if (converged(lo, hi, g)) return make_certificate(m, g, it);
    g = mg + alpha * g;
    g /= g.maxCoeff();
  }
  throw ConvergenceError("shifted power iteration hit the iteration cap of " +
                             std::to_string(options.max_iterations),
                         make_certificate(m, g, options.max_iterations));
}

// Inverse iteration on (sigma I - M)^{-1}. With sigma above the principal
// eigenvalue the inverse is a positive matrix, so iterates stay positive and
// every step yields a valid Collatz-Wielandt bracket.
EigenCertificate shift_invert(const AssembledOperator::Sparse& m, const EigenOptions& options) {
  using ColSparse = Eigen::SparseMatrix<double, Eigen::ColMajor>;
  const Eigen::Index n = m.rows();
  ColSparse identity(n, n);
  identity.setIdentity();
  const ColSparse mc = m;

  const Stopping converged(m, options.tol);
  Eigen::VectorXd g = Eigen::VectorXd::Ones(n);
  auto [lo, hi] = collatz_wielandt_bounds(m, g);
  if (converged(lo, hi, g)) return make_certificate(m, g, 0);

  Eigen::SparseLU<ColSparse> lu;
  ColSparse a = identity - mc;
  lu.analyzePattern(a);

  auto margin = [&](double lower, double upper) {
    return std::max(upper - lower, 1e-7 * (1.0 + std::abs(upper)));
  };
  double sigma = hi + margin(lo, hi);
  bool refactor = true;
  double best_gap = hi - lo;
  long since_improvement = 0;

  for (long it = 1; it <= options.max_iterations; ++it) {
    if (refactor) {
      a = sigma * identity - mc;
      lu.factorize(a);
      if (lu.info() != Eigen::Success) {
        sigma += margin(lo, hi);
        continue;
      }
      refactor = false;
    }
    Eigen::VectorXd u = lu.solve(g);
    if (!u.allFinite() || u.minCoeff() <= 0.0) {
      // Rounding put sigma at or below the eigenvalue; back off and restart.
      sigma = hi + 10.0 * margin(lo, hi);
      refactor = true;
      g.setOnes();
      continue;
    }
    g = u / u.maxCoeff();
    std::tie(lo, hi) = collatz_wielandt_bounds(m, g);
    if (converged(lo, hi, g)) return make_certificate(m, g, it);

    if (hi - lo < 0.99 * best_gap) {
      best_gap = hi - lo;
      since_improvement = 0;
    } else if (++since_improvement > 50) {
      throw ConvergenceError("shift-invert iteration stagnated at Collatz-Wielandt gap " +
                                 std::to_string(hi - lo),
                             make_certificate(m, g, it));
    }
    const double target = hi + margin(lo, hi);
    if (target < sigma) {
      sigma = target;
      refactor = true;
    }
  }
  throw ConvergenceError("shift-invert iteration hit the iteration cap of " +
                             std::to_string(options.max_iterations),
                         make_certificate(m, g, options.max_iterations));
}

}  // namespace

std::pair<double, double> collatz_wielandt_bounds(const AssembledOperator::Sparse& m,
                                                  const Eigen::VectorXd& g) {
  if (g.size() != m.cols()) throw std::invalid_argument("vector size does not match operator");
  return bounds_from_product(m * g, g);
}

std::pair<double, double> collatz_wielandt_bounds(const Eigen::MatrixXd& m,
                                                  const Eigen::VectorXd& g) {
  if (g.size() != m.cols()) throw std::invalid_argument("vector size does not match operator");
  return bounds_from_product(m * g, g);
}

EigenCertificate principal_eigenpair(const AssembledOperator& op, const EigenOptions& options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("eigen tolerance must be positive");
  if (op.size() == 1) {
    const double v = op.matrix().coeff(0, 0);
    EigenCertificate c;
    c.eigenvalue = c.cw_lower = c.cw_upper = v;
    c.eigenvector = Eigen::VectorXd::Ones(1);
    return c;
  }
  return options.method == EigenMethod::kShiftInvert ? shift_invert(op.matrix(), options)
                                                     : shifted_power(op.matrix(), options);
}

}  // namespace effham
