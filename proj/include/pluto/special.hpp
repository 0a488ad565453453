#pragma once

namespace pluto {

/// Upper-tail chi-squared probability P(X > x), X ~ chi2(df).
double chi2_sf(double x, double df);

/// Natural log of chi2_sf, accurate when the tail underflows double.
double chi2_log_sf(double x, double df);

/// Standard normal quantile.
double normal_quantile(double p);

/// z = Phi^{-1}(1 - p/2). Values of p at or below 1e-300 saturate at the z
/// of 1e-300; use z_from_log_p for the log-space route.
double p_to_z(double p);

/// Same transform from log(p); exact for arbitrarily small p.
double z_from_log_p(double log_p);

}  // namespace pluto
