#include "tapaudit/tap_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tapaudit/errors.hpp"

namespace tapaudit {

namespace {

constexpr double kTwoOverSqrtPi = 2.0 * std::numbers::inv_sqrtpi;
constexpr double kInvSqrtPi = std::numbers::inv_sqrtpi;
constexpr double kSeriesLimit = 2.5;
constexpr double kTiny = 1e-300;

double erf_series(double z) {
  // term_{n+1} = term_n * 2 z^2 / (2n + 3)
  const double z2 = z * z;
  double term = z;
  double sum = z;
  for (int n = 0; n < 200; ++n) {
    term *= 2.0 * z2 / (2.0 * n + 3.0);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return kTwoOverSqrtPi * std::exp(-z2) * sum;
}

// erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
double erfc_continued_fraction(double z) {
  double f = z;
  double c = z;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    const double ak = 0.5 * k;
    d = z + ak * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = z + ak / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return kInvSqrtPi * std::exp(-z * z) / f;
}

void require_size(double size_mm, const char* what) {
  if (!std::isfinite(size_mm)) {
    throw DomainError(std::string(what) + " must be finite");
  }
  if (size_mm < 0.0) {
    throw DomainError(std::string(what) + " must be >= 0, got " + std::to_string(size_mm));
  }
}

}  // namespace

void ModelCoefficients::validate() const {
  for (double v : {a_x, b_x, a_y, b_y}) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw ValidationError("model coefficients must be finite and > 0");
    }
  }
}

TapSuccessRate::TapSuccessRate(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw DomainError("success rate must lie in [0, 1]");
  }
}

double erf(double z) {
  if (std::isnan(z)) return z;
  const double az = std::fabs(z);
  double r;
  if (az < kSeriesLimit) {
    r = erf_series(az);
  } else if (az > 27.0) {
    r = 1.0;
  } else {
    r = 1.0 - erfc_continued_fraction(az);
  }
  return z < 0.0 ? -r : r;
}

double sigma(double size_mm, double a, double b) {
  require_size(size_mm, "size");
  return std::sqrt(a * size_mm * size_mm + b);
}

double axis_success(double size_mm, double a, double b) {
  const double s = sigma(size_mm, a, b);
  return erf(size_mm / (2.0 * std::numbers::sqrt2 * s));
}

TapSuccessRate success_rate(const PhysicalSize& size, const ModelCoefficients& coeffs) {
  require_size(size.width_mm, "width");
  require_size(size.height_mm, "height");
  coeffs.validate();
  const double sx = axis_success(size.width_mm, coeffs.a_x, coeffs.b_x);
  const double sy = axis_success(size.height_mm, coeffs.a_y, coeffs.b_y);
  return TapSuccessRate(sx * sy);
}

}  // namespace tapaudit
