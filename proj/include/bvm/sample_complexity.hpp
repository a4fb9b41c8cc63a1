#pragma once

// Sample sizes sufficient for the empirical optimum to be within eps of the
// best achievable manipulation probability with confidence 1 - delta.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "bvm/errors.hpp"

namespace bvm {

namespace detail {

inline void check_pac(double eps, double delta) {
  if (!(eps > 0.0 && eps <= 1.0)) throw invalid_input("eps must lie in (0, 1]");
  if (!(delta > 0.0)) throw invalid_input("delta must be positive");
}

// Ceiling that ignores floating-point noise just above an integer.
inline std::int64_t ceil_count(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(x));
}

inline double log2_binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) throw invalid_input("binomial coefficient out of range");
  k = std::min(k, n - k);
  if (k < 64) {
    double s = 0.0;
    for (std::int64_t i = 1; i <= k; ++i) s += std::log2(static_cast<double>(n - k + i) / static_cast<double>(i));
    return s;
  }
  return (std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) / std::log(2.0);
}

}  // namespace detail

/// Any positional rule. `constant` is the unspecified universal constant and
/// must be supplied by the caller.
inline std::int64_t sample_complexity_general(int c, int m, double eps, double delta, double constant) {
  detail::check_pac(eps, delta);
  if (c < 1 || m < 2) throw invalid_input("need c >= 1 and m >= 2");
  if (!(constant > 0.0)) throw invalid_input("constant must be positive");
  const double cm = static_cast<double>(c) * m;
  return detail::ceil_count(constant * (cm * std::log(cm) + static_cast<double>(c) * c + std::log(1.0 / delta)) /
                            (eps * eps));
}

/// k-approval, via the count of integer compositions of the approval vector.
inline std::int64_t sample_complexity_kapproval(int c, int k, int m, double eps, double delta) {
  detail::check_pac(eps, delta);
  if (c < 1 || k < 1 || k >= m) throw invalid_input("need c >= 1 and 1 <= k < m");
  const std::int64_t ck = static_cast<std::int64_t>(c) * k;
  const double dim = detail::log2_binomial(m + ck - 1, ck - 1);
  return detail::ceil_count(256.0 * (2.0 * dim + std::log(4.0 / delta)) / (eps * eps));
}

}  // namespace bvm
