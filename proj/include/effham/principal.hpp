#pragma once

#include <Eigen/Core>
#include <utility>

#include "effham/error.hpp"
#include "effham/operator.hpp"

namespace effham {

enum class EigenMethod {
  // Inverse iteration with a shift kept above the Collatz-Wielandt upper
  // bound, so every iterate stays strictly positive.
  kShiftInvert,
  // Plain power iteration on M + alpha I, alpha = 1 + max |M_ii|.
  kShiftedPower,
};

const char* to_string(EigenMethod method);

struct EigenOptions {
  // Stop when cw_upper - cw_lower <= tol (1 + |lambda|), or below the
  // rounding floor of the computed ratios when that is larger (stiff grids).
  double tol = 1e-10;
  long max_iterations = 1'000'000;
  EigenMethod method = EigenMethod::kShiftInvert;
};

struct EigenCertificate {
  double eigenvalue = 0.0;
  Eigen::VectorXd eigenvector;  // strictly positive, max component 1
  double residual = 0.0;        // ||M g - lambda g||_inf
  double cw_lower = 0.0;
  double cw_upper = 0.0;
  long iterations = 0;

  double gap() const { return cw_upper - cw_lower; }
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, EigenCertificate last)
      : NumericalError(what), last_(std::move(last)) {}
  const EigenCertificate& last_certificate() const { return last_; }

 private:
  EigenCertificate last_;
};

// (min_i (Mg)_i / g_i, max_i (Mg)_i / g_i). For irreducible Metzler M and any
// g > 0 these bracket the principal eigenvalue. Throws on g_i <= 0.
std::pair<double, double> collatz_wielandt_bounds(const AssembledOperator::Sparse& m,
                                                  const Eigen::VectorXd& g);
std::pair<double, double> collatz_wielandt_bounds(const Eigen::MatrixXd& m,
                                                  const Eigen::VectorXd& g);

EigenCertificate principal_eigenpair(const AssembledOperator& op,
                                     const EigenOptions& options = {});

}  // namespace effham
