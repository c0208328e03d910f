#include "mmtrack/chi2.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mmtrack::chi2 {

namespace {

void check_dof(double dof) {
  if (!(dof > 0.0) || !std::isfinite(dof)) throw std::invalid_argument("chi-squared dof must be positive");
}

}  // namespace

double cdf(double x, double dof) {
  check_dof(dof);
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::cdf(boost::math::chi_squared(dof), x);
}

double quantile(double p, double dof) {
  check_dof(dof);
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("chi-squared quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::chi_squared(dof), p);
}

double log_pdf(double x, double dof) {
  check_dof(dof);
  const double k2 = 0.5 * dof;
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  if (x == 0.0) {
    if (dof < 2.0) return std::numeric_limits<double>::infinity();
    if (dof == 2.0) return -std::log(2.0);
    return -std::numeric_limits<double>::infinity();
  }
  // Evaluated in log space; the density itself underflows for large sums.
  return (k2 - 1.0) * std::log(x) - 0.5 * x - k2 * std::log(2.0) - boost::math::lgamma(k2);
}

}  // namespace mmtrack::chi2
