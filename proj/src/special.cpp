#include "pluto/special.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace pluto {

namespace {

constexpr double kTinyP = 1e-300;
const double kLogTinyP = std::log(kTinyP);

// log Gamma(a, x) / Gamma(a) for large x from the asymptotic series
// x^(a-1) e^-x sum_k (a-1)...(a-k) / x^k.
double log_upper_gamma_asymptotic(double a, double x) {
  double sum = 1.0;
  double term = 1.0;
  for (int k = 1; k < 60; ++k) {
    double next = term * (a - k) / x;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return (a - 1.0) * std::log(x) - x - std::lgamma(a) + std::log(sum);
}

}  // namespace

double chi2_sf(double x, double df) {
  if (!(x > 0.0)) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double chi2_log_sf(double x, double df) {
  double q = chi2_sf(x, df);
  if (q > kTinyP) return std::log(q);
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  return log_upper_gamma_asymptotic(0.5 * df, 0.5 * x);
}

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

double p_to_z(double p) {
  if (p >= 1.0) return 0.0;
  if (p <= kTinyP) p = kTinyP;
  return std::sqrt(2.0) * boost::math::erfc_inv(p);
}

double z_from_log_p(double log_p) {
  if (log_p >= 0.0) return 0.0;
  if (log_p > kLogTinyP) return p_to_z(std::exp(log_p));
  if (std::isinf(log_p)) return std::numeric_limits<double>::infinity();
  // Solve log erfc(t) = log_p by Newton using the asymptotic expansion
  // log erfc(t) = -t^2 - log(t sqrt(pi)) + log(1 - 1/(2t^2) + 3/(4t^4)).
  auto f = [](double t) {
    double t2 = t * t;
    return -t2 - std::log(t * std::sqrt(M_PI)) + std::log(1.0 - 0.5 / t2 + 0.75 / (t2 * t2));
  };
  double t = std::sqrt(-log_p);
  for (int i = 0; i < 50; ++i) {
    double h = 1e-6 * t;
    double deriv = (f(t + h) - f(t - h)) / (2.0 * h);
    double step = (f(t) - log_p) / deriv;
    t -= step;
    if (std::abs(step) < 1e-14 * t) break;
  }
  return std::sqrt(2.0) * t;
}

}  // namespace pluto
