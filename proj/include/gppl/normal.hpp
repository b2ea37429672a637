#pragma once

namespace gppl {

// Standard normal CDF, via erfc so the lower tail keeps full relative accuracy.
double normal_cdf(double x);

// Upper tail 1 - Phi(x) without cancellation.
double normal_sf(double x);

// Standard normal quantile (Wichura's AS241 PPND16, relative error ~1e-16).
// Throws std::domain_error outside (0, 1).
double normal_quantile(double p);

// 2 * (1 - Phi(|z|)).
double two_sided_p_value(double z);

}  // namespace gppl
