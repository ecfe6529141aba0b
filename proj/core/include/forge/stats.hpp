#pragma once

#include <cstddef>

namespace forge::stats {

/// Standard normal CDF.
double normal_cdf(double x) noexcept;

/// Inverse standard normal CDF for p in (0, 1), by Wichura's AS241
/// rational approximation (relative accuracy about 1e-16). Returns ±inf at
/// the endpoints and NaN outside [0, 1].
double normal_quantile(double p) noexcept;

/// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

/// One-sided Clopper–Pearson lower bound on a binomial proportion after
/// `successes` out of `trials`, at failure probability `alpha`. Solves
/// I_p(k, n−k+1) = alpha by bisection to 1e-12.
double clopper_pearson_lower(std::size_t successes, std::size_t trials, double alpha);

}  // namespace forge::stats
