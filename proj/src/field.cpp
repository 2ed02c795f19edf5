#include "effham/field.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "effham/error.hpp"

namespace effham {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_zero_wave(const FourierTerm& t) {
  for (int k : t.wave) {
    if (k != 0) return false;
  }
  return true;
}

}  // namespace

PeriodicScalarField::PeriodicScalarField(int dim, std::vector<FourierTerm> terms,
                                         std::vector<double> slope,
                                         double period, FieldForm form)
    : dim_(dim),
      period_(period),
      form_(form),
      terms_(std::move(terms)),
      slope_(std::move(slope)) {
  if (dim_ < 1) throw ModelError("field dimension must be >= 1");
  if (!(period_ > 0.0) || !std::isfinite(period_)) {
    throw ModelError("field period must be positive and finite");
  }
  if (slope_.empty()) slope_.assign(dim_, 0.0);
  if (static_cast<int>(slope_.size()) != dim_) {
    throw ModelError("field slope has " + std::to_string(slope_.size()) +
                     " components, expected " + std::to_string(dim_));
  }
  for (const auto& t : terms_) {
    if (static_cast<int>(t.wave.size()) != dim_) {
      throw ModelError("Fourier wave vector has wrong dimension");
    }
    if (!std::isfinite(t.cos_coeff) || !std::isfinite(t.sin_coeff)) {
      throw ModelError("Fourier coefficient is not finite");
    }
  }
  for (double s : slope_) {
    if (!std::isfinite(s)) throw ModelError("field slope is not finite");
  }
}

PeriodicScalarField PeriodicScalarField::zero(int dim, double period) {
  return PeriodicScalarField(dim, {}, {}, period);
}

PeriodicScalarField PeriodicScalarField::constant(int dim, double value,
                                                  double period) {
  if (value == 0.0) return zero(dim, period);
  return PeriodicScalarField(
      dim, {FourierTerm{std::vector<int>(dim, 0), value, 0.0}}, {}, period);
}

PeriodicScalarField PeriodicScalarField::affine(std::vector<double> slope,
                                                double period) {
  const int dim = static_cast<int>(slope.size());
  return PeriodicScalarField(dim, {}, std::move(slope), period);
}

PeriodicScalarField PeriodicScalarField::exp_of(
    const PeriodicScalarField& exponent) {
  if (exponent.form() != FieldForm::kSeries) {
    throw ModelError("exp_of expects a series-form exponent");
  }
  return PeriodicScalarField(exponent.dim(), exponent.terms(), exponent.slope(),
                             exponent.period(), FieldForm::kExponential);
}

bool PeriodicScalarField::has_slope() const {
  for (double s : slope_) {
    if (s != 0.0) return true;
  }
  return false;
}

bool PeriodicScalarField::is_constant() const {
  if (has_slope()) return false;
  for (const auto& t : terms_) {
    if (!is_zero_wave(t) && (t.cos_coeff != 0.0 || t.sin_coeff != 0.0)) {
      return false;
    }
  }
  return true;
}

void PeriodicScalarField::check_point(std::span<const double> y) const {
  if (static_cast<int>(y.size()) != dim_) {
    throw std::invalid_argument("point has dimension " +
                                std::to_string(y.size()) + ", field expects " +
                                std::to_string(dim_));
  }
}

double PeriodicScalarField::series_value(std::span<const double> y) const {
  double v = 0.0;
  for (int a = 0; a < dim_; ++a) v += slope_[a] * y[a];
  const double scale = kTwoPi / period_;
  for (const auto& t : terms_) {
    double phase = 0.0;
    for (int a = 0; a < dim_; ++a) phase += t.wave[a] * y[a];
    phase *= scale;
    v += t.cos_coeff * std::cos(phase) + t.sin_coeff * std::sin(phase);
  }
  return v;
}

void PeriodicScalarField::series_gradient(std::span<const double> y,
                                          std::vector<double>& out) const {
  out.assign(slope_.begin(), slope_.end());
  const double scale = kTwoPi / period_;
  for (const auto& t : terms_) {
    double phase = 0.0;
    for (int a = 0; a < dim_; ++a) phase += t.wave[a] * y[a];
    phase *= scale;
    const double d = -t.cos_coeff * std::sin(phase) + t.sin_coeff * std::cos(phase);
    for (int a = 0; a < dim_; ++a) out[a] += scale * t.wave[a] * d;
  }
}

double PeriodicScalarField::series_laplacian(std::span<const double> y) const {
  const double scale = kTwoPi / period_;
  double lap = 0.0;
  for (const auto& t : terms_) {
    double phase = 0.0;
    double k2 = 0.0;
    for (int a = 0; a < dim_; ++a) {
      phase += t.wave[a] * y[a];
      k2 += static_cast<double>(t.wave[a]) * t.wave[a];
    }
    phase *= scale;
    lap -= scale * scale * k2 *
           (t.cos_coeff * std::cos(phase) + t.sin_coeff * std::sin(phase));
  }
  return lap;
}

double PeriodicScalarField::value(std::span<const double> y) const {
  check_point(y);
  const double s = series_value(y);
  return form_ == FieldForm::kSeries ? s : std::exp(s);
}

std::vector<double> PeriodicScalarField::gradient(
    std::span<const double> y) const {
  check_point(y);
  std::vector<double> g;
  series_gradient(y, g);
  if (form_ == FieldForm::kExponential) {
    const double e = std::exp(series_value(y));
    for (double& c : g) c *= e;
  }
  return g;
}

double PeriodicScalarField::laplacian(std::span<const double> y) const {
  check_point(y);
  const double lap = series_laplacian(y);
  if (form_ == FieldForm::kSeries) return lap;
  std::vector<double> g;
  series_gradient(y, g);
  double g2 = 0.0;
  for (double c : g) g2 += c * c;
  return std::exp(series_value(y)) * (lap + g2);
}

double PeriodicScalarField::series_upper() const {
  if (has_slope()) return std::numeric_limits<double>::infinity();
  double b = 0.0;
  for (const auto& t : terms_) {
    b += is_zero_wave(t) ? t.cos_coeff
                         : std::abs(t.cos_coeff) + std::abs(t.sin_coeff);
  }
  return b;
}

double PeriodicScalarField::series_lower() const {
  if (has_slope()) return -std::numeric_limits<double>::infinity();
  double b = 0.0;
  for (const auto& t : terms_) {
    b += is_zero_wave(t) ? t.cos_coeff
                         : -(std::abs(t.cos_coeff) + std::abs(t.sin_coeff));
  }
  return b;
}

double PeriodicScalarField::upper_bound() const {
  const double u = series_upper();
  return form_ == FieldForm::kSeries ? u : std::exp(u);
}

double PeriodicScalarField::lower_bound() const {
  const double l = series_lower();
  return form_ == FieldForm::kSeries ? l : std::exp(l);
}

PeriodicScalarField PeriodicScalarField::scaled(double c) const {
  if (form_ == FieldForm::kSeries) {
    auto terms = terms_;
    for (auto& t : terms) {
      t.cos_coeff *= c;
      t.sin_coeff *= c;
    }
    auto slope = slope_;
    for (double& s : slope) s *= c;
    return PeriodicScalarField(dim_, std::move(terms), std::move(slope), period_);
  }
  if (c == 0.0) return zero(dim_, period_);
  if (c < 0.0) throw ModelError("exponential field scaled by a negative factor");
  auto terms = terms_;
  terms.push_back(FourierTerm{std::vector<int>(dim_, 0), std::log(c), 0.0});
  return PeriodicScalarField(dim_, std::move(terms), slope_, period_,
                             FieldForm::kExponential);
}

PeriodicScalarField PeriodicScalarField::exponent() const {
  return PeriodicScalarField(dim_, terms_, slope_, period_, FieldForm::kSeries);
}

}  // namespace effham
