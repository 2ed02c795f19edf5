#include "effham/model.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "effham/chain.hpp"
#include "effham/error.hpp"

namespace effham {

const char* to_string(Regime regime) { return regime == Regime::kI ? "I" : "II"; }

// ---------------------------------------------------------------------------
// SwitchingRateMatrix

SwitchingRateMatrix::SwitchingRateMatrix(
    std::vector<std::vector<PeriodicScalarField>> entries)
    : entries_(std::move(entries)) {
  const std::size_t n = entries_.size();
  if (n == 0) throw ModelError("switching rate matrix needs at least one state");
  for (const auto& row : entries_) {
    if (row.size() != n) throw ModelError("switching rate matrix must be square");
  }
  const int dim = entries_[0][0].dim();
  const double period = entries_[0][0].period();
  for (const auto& row : entries_) {
    for (const auto& f : row) {
      if (f.dim() != dim || f.period() != period) {
        throw ModelError("switching rate fields disagree on dimension or period");
      }
    }
  }
}

SwitchingRateMatrix SwitchingRateMatrix::constant(const Eigen::MatrixXd& rates,
                                                  int dim, double period) {
  if (rates.rows() != rates.cols() || rates.rows() == 0) {
    throw ModelError("constant rate matrix must be square and non-empty");
  }
  const int n = static_cast<int>(rates.rows());
  std::vector<std::vector<PeriodicScalarField>> entries(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      entries[i].push_back(i == j ? PeriodicScalarField::zero(dim, period)
                                  : PeriodicScalarField::constant(dim, rates(i, j), period));
    }
  }
  return SwitchingRateMatrix(std::move(entries));
}

SwitchingRateMatrix SwitchingRateMatrix::none(int dim, double period) {
  return SwitchingRateMatrix({{PeriodicScalarField::zero(dim, period)}});
}

double SwitchingRateMatrix::rate(int i, int j, std::span<const double> y) const {
  return i == j ? 0.0 : entries_[i][j].value(y);
}

Eigen::MatrixXd SwitchingRateMatrix::rates_at(std::span<const double> y) const {
  const int n = states();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) r(i, j) = entries_[i][j].value(y);
    }
  }
  return r;
}

bool SwitchingRateMatrix::is_constant() const {
  for (int i = 0; i < states(); ++i) {
    for (int j = 0; j < states(); ++j) {
      if (i != j && !entries_[i][j].is_constant()) return false;
    }
  }
  return true;
}

SwitchingRateMatrix SwitchingRateMatrix::scaled(double c) const {
  auto entries = entries_;
  for (auto& row : entries) {
    for (auto& f : row) f = f.scaled(c);
  }
  return SwitchingRateMatrix(std::move(entries));
}

// ---------------------------------------------------------------------------
// ContinuousModel

ContinuousModel::ContinuousModel(std::vector<PeriodicScalarField> potentials,
                                 SwitchingRateMatrix rates, Regime regime,
                                 std::string name)
    : potentials_(std::move(potentials)),
      rates_(std::move(rates)),
      regime_(regime),
      name_(std::move(name)) {
  if (potentials_.empty()) throw ModelError("continuous model needs at least one potential");
  if (rates_.states() != states()) {
    throw ModelError("continuous model has " + std::to_string(states()) +
                     " potentials but a " + std::to_string(rates_.states()) +
                     "-state rate matrix");
  }
  dim_ = potentials_[0].dim();
  period_ = potentials_[0].period();
  for (const auto& p : potentials_) {
    if (p.dim() != dim_ || p.period() != period_) {
      throw ModelError("potentials disagree on dimension or period");
    }
    if (p.form() != FieldForm::kSeries) {
      throw ModelError("potentials must be series-form fields");
    }
  }
  const auto& r0 = rates_.entry(0, 0);
  if (r0.dim() != dim_ || r0.period() != period_) {
    throw ModelError("rate fields and potentials disagree on dimension or period");
  }
}

std::vector<double> ContinuousModel::drift(int state, std::span<const double> y) const {
  auto g = potentials_[state].gradient(y);
  for (double& c : g) c = -c;
  return g;
}

ContinuousModel ContinuousModel::with_regime(Regime regime) const {
  ContinuousModel copy = *this;
  copy.regime_ = regime;
  return copy;
}

ContinuousModel ContinuousModel::with_rates_scaled(double gamma) const {
  ContinuousModel copy = *this;
  copy.rates_ = rates_.scaled(gamma);
  return copy;
}

// ---------------------------------------------------------------------------
// DiscreteModel

DiscreteModel::DiscreteModel(int length, SiteRates hop_plus, SiteRates hop_minus,
                             Switching switching, Regime regime, std::string name)
    : length_(length),
      hop_plus_(std::move(hop_plus)),
      hop_minus_(std::move(hop_minus)),
      switching_(std::move(switching)),
      regime_(regime),
      name_(std::move(name)) {
  if (length_ < 2) throw ModelError("discrete torus length must be >= 2");
  const std::size_t j_count = hop_plus_.size();
  if (j_count == 0) throw ModelError("discrete model needs at least one state");
  if (hop_minus_.size() != j_count || switching_.size() != j_count) {
    throw ModelError("discrete model rate arrays disagree on the number of states");
  }
  auto check_sites = [&](const std::vector<double>& v, const char* what) {
    if (static_cast<int>(v.size()) != length_) {
      throw ModelError(std::string(what) + " must have one entry per site");
    }
  };
  for (std::size_t i = 0; i < j_count; ++i) {
    check_sites(hop_plus_[i], "hop_plus");
    check_sites(hop_minus_[i], "hop_minus");
    if (switching_[i].size() != j_count) throw ModelError("switching must be J x J x l");
    for (std::size_t j = 0; j < j_count; ++j) check_sites(switching_[i][j], "switching");
  }
}

DiscreteModel DiscreteModel::uniform(int length, std::span<const double> hop_plus,
                                     std::span<const double> hop_minus,
                                     const Eigen::MatrixXd& switching, Regime regime,
                                     std::string name) {
  const std::size_t j_count = hop_plus.size();
  if (hop_minus.size() != j_count || switching.rows() != static_cast<long>(j_count) ||
      switching.cols() != static_cast<long>(j_count)) {
    throw ModelError("uniform discrete model: inconsistent state counts");
  }
  SiteRates plus(j_count), minus(j_count);
  Switching sw(j_count, std::vector<std::vector<double>>(j_count));
  for (std::size_t i = 0; i < j_count; ++i) {
    plus[i].assign(length, hop_plus[i]);
    minus[i].assign(length, hop_minus[i]);
    for (std::size_t j = 0; j < j_count; ++j) {
      sw[i][j].assign(length, i == j ? 0.0 : switching(i, j));
    }
  }
  return DiscreteModel(length, std::move(plus), std::move(minus), std::move(sw), regime,
                       std::move(name));
}

Eigen::MatrixXd DiscreteModel::switching_at(int site) const {
  const int n = states();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) r(i, j) = switching(i, j, site);
  }
  return r;
}

DiscreteModel DiscreteModel::with_regime(Regime regime) const {
  DiscreteModel copy = *this;
  copy.regime_ = regime;
  return copy;
}

DiscreteModel DiscreteModel::with_switching_scaled(double gamma) const {
  DiscreteModel copy = *this;
  for (auto& row : copy.switching_) {
    for (auto& sites : row) {
      for (double& r : sites) r *= gamma;
    }
  }
  return copy;
}

Regime regime_of(const Model& model) {
  return std::visit([](const auto& m) { return m.regime(); }, model);
}

const std::string& name_of(const Model& model) {
  return std::visit([](const auto& m) -> const std::string& { return m.name(); }, model);
}

int dim_of(const Model& model) {
  if (const auto* c = std::get_if<ContinuousModel>(&model)) return c->dim();
  return 1;
}

// ---------------------------------------------------------------------------
// Validation

const char* to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::kNegativeRate: return "negative_rate";
    case Violation::Kind::kReducibleCoupling: return "reducible_coupling";
    case Violation::Kind::kReducibleAtPoint: return "reducible_at_point";
    case Violation::Kind::kNonpositiveHopRate: return "nonpositive_hop_rate";
    case Violation::Kind::kNonFiniteRate: return "non_finite_rate";
    case Violation::Kind::kTiltedRate: return "tilted_rate";
  }
  return "unknown";
}

bool ValidationReport::has(Violation::Kind kind) const {
  for (const auto& v : violations) {
    if (v.kind == kind) return true;
  }
  return false;
}

std::string ValidationReport::to_string() const {
  if (valid()) return "valid\n";
  std::ostringstream os;
  for (const auto& v : violations) {
    os << effham::to_string(v.kind) << " at " << v.location << ": " << v.message << '\n';
  }
  return os.str();
}

int default_sample_resolution(int dim) {
  if (dim == 1) return 4 * 256;
  if (dim == 2) return 4 * 64;
  return 4 * 16;
}

namespace {

std::string point_string(std::span<const double> y) {
  std::ostringstream os;
  os << "y=(";
  for (std::size_t a = 0; a < y.size(); ++a) os << (a ? "," : "") << y[a];
  os << ')';
  return os.str();
}

std::string pair_string(int i, int j) {
  return "r_" + std::to_string(i) + "," + std::to_string(j);
}

}  // namespace

ValidationReport validate(const ContinuousModel& model, const ValidationOptions& options) {
  ValidationReport report;
  const int j_count = model.states();
  if (j_count == 1) return report;

  const int samples =
      options.samples_per_axis > 0 ? options.samples_per_axis : default_sample_resolution(model.dim());
  Eigen::MatrixXd sup = Eigen::MatrixXd::Zero(j_count, j_count);
  for (int i = 0; i < j_count; ++i) {
    for (int j = 0; j < j_count; ++j) {
      if (i == j) continue;
      const auto& f = model.rates().entry(i, j);
      if (f.has_slope()) {
        report.violations.push_back({Violation::Kind::kTiltedRate, pair_string(i, j),
                                     "switching rates must be periodic (no affine tilt)"});
        continue;
      }
      if (f.lower_bound() >= 0.0) {
        // Nonnegative by the coefficient bound; only the support matters.
        if (f.upper_bound() > 0.0) sup(i, j) = f.upper_bound();
        if (!f.is_constant()) {
          double m = 0.0;
          for_each_grid_point(model.dim(), samples, model.period(),
                              [&](std::span<const double> y) { m = std::max(m, f.value(y)); });
          sup(i, j) = m;
        }
        continue;
      }
      bool negative_reported = false;
      bool nonfinite_reported = false;
      double m = 0.0;
      for_each_grid_point(model.dim(), samples, model.period(), [&](std::span<const double> y) {
        const double r = f.value(y);
        if (!std::isfinite(r)) {
          if (!nonfinite_reported) {
            report.violations.push_back({Violation::Kind::kNonFiniteRate,
                                         pair_string(i, j) + " " + point_string(y),
                                         "rate is not finite"});
            nonfinite_reported = true;
          }
          return;
        }
        if (r < 0.0 && !negative_reported) {
          report.violations.push_back({Violation::Kind::kNegativeRate,
                                       pair_string(i, j) + " " + point_string(y),
                                       "rate " + std::to_string(r) + " < 0 (sampled)"});
          negative_reported = true;
        }
        m = std::max(m, r);
      });
      sup(i, j) = m;
    }
  }
  if (!is_irreducible(sup)) {
    report.violations.push_back({Violation::Kind::kReducibleCoupling, "sup-matrix",
                                 "graph of positive sup_y r_ij is not strongly connected"});
  }

  if (model.regime() == Regime::kII && report.valid()) {
    bool reported = false;
    long count = 0;
    std::string first;
    for_each_grid_point(model.dim(), samples, model.period(), [&](std::span<const double> y) {
      if (!is_irreducible(model.rates().rates_at(y))) {
        if (!reported) first = point_string(y);
        reported = true;
        ++count;
      }
    });
    if (reported) {
      report.violations.push_back(
          {Violation::Kind::kReducibleAtPoint, first,
           "switching chain is reducible at " + std::to_string(count) + " sampled points"});
    }
  }
  return report;
}

ValidationReport validate(const DiscreteModel& model) {
  ValidationReport report;
  const int j_count = model.states();
  const int length = model.length();
  for (int i = 0; i < j_count; ++i) {
    for (int k = 0; k < length; ++k) {
      for (const auto& [value, label] : {std::pair{model.hop_plus(i, k), "r_+"},
                                        std::pair{model.hop_minus(i, k), "r_-"}}) {
        const std::string where = "(state " + std::to_string(i) + ", site " + std::to_string(k) + ")";
        if (!std::isfinite(value)) {
          report.violations.push_back({Violation::Kind::kNonFiniteRate, where,
                                       std::string(label) + " is not finite"});
        } else if (value <= 0.0) {
          report.violations.push_back({Violation::Kind::kNonpositiveHopRate, where,
                                       std::string(label) + " = " + std::to_string(value) +
                                           " must be > 0"});
        }
      }
    }
  }
  if (j_count == 1) return report;

  Eigen::MatrixXd sup = Eigen::MatrixXd::Zero(j_count, j_count);
  for (int i = 0; i < j_count; ++i) {
    for (int j = 0; j < j_count; ++j) {
      if (i == j) continue;
      for (int k = 0; k < length; ++k) {
        const double r = model.switching(i, j, k);
        const std::string where = pair_string(i, j) + " site " + std::to_string(k);
        if (!std::isfinite(r)) {
          report.violations.push_back({Violation::Kind::kNonFiniteRate, where, "rate is not finite"});
        } else if (r < 0.0) {
          report.violations.push_back({Violation::Kind::kNegativeRate, where,
                                       "rate " + std::to_string(r) + " < 0"});
        } else {
          sup(i, j) = std::max(sup(i, j), r);
        }
      }
    }
  }
  if (!is_irreducible(sup)) {
    report.violations.push_back({Violation::Kind::kReducibleCoupling, "sup-matrix",
                                 "switching rates are not fully coupled"});
  }
  if (model.regime() == Regime::kII && report.valid()) {
    for (int k = 0; k < length; ++k) {
      if (!is_irreducible(model.switching_at(k))) {
        report.violations.push_back({Violation::Kind::kReducibleAtPoint,
                                     "site " + std::to_string(k),
                                     "no unique stationary measure for the switching chain"});
      }
    }
  }
  return report;
}

ValidationReport validate(const Model& model, const ValidationOptions& options) {
  if (const auto* c = std::get_if<ContinuousModel>(&model)) return validate(*c, options);
  return validate(std::get<DiscreteModel>(model));
}

}  // namespace effham
