#pragma once

#include <span>
#include <vector>

namespace effham {

// One term a cos(2 pi k.y / l) + b sin(2 pi k.y / l) of a Fourier series.
struct FourierTerm {
  std::vector<int> wave;
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

enum class FieldForm {
  kSeries,       // slope.y + sum of Fourier terms
  kExponential,  // exp(slope.y + sum of Fourier terms)
};

/// Smooth scalar field on the torus [0, l)^d, stored as a truncated Fourier
/// series plus an optional affine tilt. The tilt is kept apart from the
/// periodic part so gradients stay periodic even when the values are not.
///
/// The exponential form represents strictly positive rate fields such as
/// sigma * exp(2 psi(y)) exactly; its derivatives are still analytic.
class PeriodicScalarField {
 public:
  PeriodicScalarField() = default;
  PeriodicScalarField(int dim, std::vector<FourierTerm> terms,
                      std::vector<double> slope = {}, double period = 1.0,
                      FieldForm form = FieldForm::kSeries);

  static PeriodicScalarField zero(int dim, double period = 1.0);
  static PeriodicScalarField constant(int dim, double value,
                                      double period = 1.0);
  static PeriodicScalarField affine(std::vector<double> slope,
                                    double period = 1.0);
  // exp(exponent(y)); the exponent must be in series form.
  static PeriodicScalarField exp_of(const PeriodicScalarField& exponent);

  int dim() const { return dim_; }
  double period() const { return period_; }
  FieldForm form() const { return form_; }
  const std::vector<FourierTerm>& terms() const { return terms_; }
  const std::vector<double>& slope() const { return slope_; }

  bool has_slope() const;
  // No y dependence at all (only k = 0 terms and no tilt).
  bool is_constant() const;

  double value(std::span<const double> y) const;
  std::vector<double> gradient(std::span<const double> y) const;
  double laplacian(std::span<const double> y) const;

  // Guaranteed bounds from the coefficients; +-inf when tilted.
  double upper_bound() const;
  double lower_bound() const;

  // c * field. Exponential fields need c >= 0 (c = 0 gives the zero field).
  PeriodicScalarField scaled(double c) const;

  // Exponent of an exponential field viewed as a series field.
  PeriodicScalarField exponent() const;

 private:
  void check_point(std::span<const double> y) const;
  double series_value(std::span<const double> y) const;
  void series_gradient(std::span<const double> y, std::vector<double>& out) const;
  double series_laplacian(std::span<const double> y) const;
  double series_upper() const;
  double series_lower() const;

  int dim_ = 1;
  double period_ = 1.0;
  FieldForm form_ = FieldForm::kSeries;
  std::vector<FourierTerm> terms_;
  std::vector<double> slope_;
};

}  // namespace effham
