#pragma once

// Dual-Gaussian tap success-rate model.
//
// Tap endpoints are modelled as independent normals on x and y, centred on
// the target, whose variance grows linearly with the squared target size:
//
//   sigma_x^2 = a_x * W^2 + b_x      sigma_y^2 = a_y * H^2 + b_y
//
// The probability of landing inside a W x H rectangle is then
//
//   SR = erf(W / (2 sqrt(2) sigma_x)) * erf(H / (2 sqrt(2) sigma_y))
//
// All sizes are physical millimetres.

namespace tapaudit {

struct ModelCoefficients {
  double a_x = 0.007101;  // dimensionless
  double b_x = 1.412;     // mm^2
  double a_y = 0.01181;   // dimensionless
  double b_y = 1.365;     // mm^2

  // Throws ValidationError unless all four are finite and strictly positive.
  void validate() const;

  friend bool operator==(const ModelCoefficients&, const ModelCoefficients&) = default;
};

struct PhysicalSize {
  double width_mm = 0.0;
  double height_mm = 0.0;

  friend bool operator==(const PhysicalSize&, const PhysicalSize&) = default;
};

// Probability in [0, 1]. Strong type so a rate is never confused with a
// percentage or a raw erf factor.
class TapSuccessRate {
 public:
  constexpr TapSuccessRate() = default;
  explicit TapSuccessRate(double value);

  constexpr double value() const noexcept { return value_; }
  double percent() const noexcept { return value_ * 100.0; }

  friend bool operator==(const TapSuccessRate&, const TapSuccessRate&) = default;

 private:
  double value_ = 0.0;
};

// Gauss error function.
//
// |z| < 2.5 uses the all-positive series
//   erf(z) = 2/sqrt(pi) * exp(-z^2) * sum_n 2^n z^(2n+1) / (1*3*...*(2n+1))
// which has no cancellation. Larger |z| evaluates erfc through its Laplace
// continued fraction (modified Lentz) and returns 1 - erfc. Odd symmetry is
// exact. Absolute error is below 1e-15 against a 30-digit reference table.
double erf(double z);

// sqrt(a * size^2 + b). Throws DomainError for negative or non-finite size.
double sigma(double size_mm, double a, double b);

// erf(size / (2 sqrt(2) sigma(size))): the probability that one axis of a
// centred tap lands within the extent.
double axis_success(double size_mm, double a, double b);

// Throws DomainError for negative or non-finite sizes, ValidationError for
// invalid coefficients.
TapSuccessRate success_rate(const PhysicalSize& size,
                            const ModelCoefficients& coeffs = {});

}  // namespace tapaudit
