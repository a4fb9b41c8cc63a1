#pragma once

// Closed-form coalition strategies for impartial-culture beliefs.

#include <string>
#include <vector>

#include "bvm/errors.hpp"
#include "bvm/optimizer.hpp"
#include "bvm/voting.hpp"

namespace bvm {

/// k-approval strategy: d first on every ballot, the c(k-1) remaining approvals
/// dealt round-robin over the other candidates (counts differ by at most one).
/// Positions below k continue the same rotation.
inline StrategyPsm balanced_strategy(int m, int k, int c, Candidate d) {
  if (m < 2) throw invalid_input("need at least two candidates");
  if (k < 1 || k >= m) throw invalid_input("balanced strategy needs 1 <= k < m");
  if (c < 1) throw invalid_input("coalition size must be at least 1");
  if (d < 0 || d >= m) throw invalid_input("desired candidate out of range");
  return detail::rotation_strategy(m, c, d, k > 1 ? k - 1 : 1);
}

/// Three-candidate Borda: d first, the lower-indexed other candidate placed
/// second c/2+1 times and the other c/2-1 times.
inline StrategyPsm near_balanced_strategy(int c, Candidate d) {
  if (c < 2 || c % 2 != 0) throw invalid_input("near-balanced strategy needs an even coalition size >= 2");
  if (d < 0 || d > 2) throw invalid_input("near-balanced strategy is defined for three candidates");
  const auto rest = detail::others(3, d);
  Psm x(3);
  x(d, 0) = c;
  x(rest[0], 1) = c / 2 + 1;
  x(rest[0], 2) = c / 2 - 1;
  x(rest[1], 1) = c / 2 - 1;
  x(rest[1], 2) = c / 2 + 1;
  return StrategyPsm(std::move(x), c, d);
}

enum class Borda3Verdict { balanced, ambiguous };

inline std::string to_string(Borda3Verdict v) {
  return v == Borda3Verdict::balanced ? "theorem-2-balanced" : "theorem-2-ambiguous";
}

struct Borda3Choice {
  Borda3Verdict verdict;
  /// One strategy when balanced is known optimal, else {balanced, near-balanced}.
  std::vector<StrategyPsm> candidates;
};

/// Three-candidate Borda under impartial (anonymous) culture: the balanced
/// strategy is optimal when n is even and c+2 is divisible by four, or n is
/// odd and c is divisible by four. Otherwise either balanced or near-balanced
/// is optimal and both are returned for evaluation.
inline Borda3Choice borda3_strategy(int n, int c, Candidate d) {
  if (c < 2 || c % 2 != 0) throw invalid_input("three-candidate Borda strategies need an even coalition size >= 2");
  if (n < 0) throw invalid_input("negative voter count");
  auto balanced = balanced_strategy(3, 2, c, d);
  const bool known = (n % 2 == 0 && (c + 2) % 4 == 0) || (n % 2 == 1 && c % 4 == 0);
  if (known) return {Borda3Verdict::balanced, {std::move(balanced)}};
  return {Borda3Verdict::ambiguous, {std::move(balanced), near_balanced_strategy(c, d)}};
}

}  // namespace bvm
