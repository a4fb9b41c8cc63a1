#pragma once

// Ballot recovery from a PSM. A PSM with all row and column sums equal to c
// is the edge-multiplicity matrix of a c-regular bipartite multigraph
// (candidates x positions); it splits into c edge-disjoint perfect matchings,
// each of which is one ballot.

#include <optional>
#include <vector>

#include "bvm/errors.hpp"
#include "bvm/voting.hpp"

namespace bvm {

/// True iff every entry is non-negative and all row and column sums equal c.
inline bool validate_psm(const Psm& x, int c) {
  for (int i = 0; i < x.m(); ++i) {
    if (x.row_sum(i) != c || x.col_sum(i) != c) return false;
    for (int j = 0; j < x.m(); ++j)
      if (x(i, j) < 0) return false;
  }
  return true;
}

namespace detail {

// Kuhn's augmenting paths over the support of x. Candidates and positions are
// scanned in ascending order so the result depends only on x.
inline bool augment(const Psm& x, int candidate, std::vector<int>& owner, std::vector<char>& visited) {
  for (int p = 0; p < x.m(); ++p) {
    if (x(candidate, p) == 0 || visited[p]) continue;
    visited[p] = 1;
    if (owner[p] < 0 || augment(x, owner[p], owner, visited)) {
      owner[p] = candidate;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// A perfect matching in the support of x as the ranking it encodes
/// (position p holds the candidate matched to p), or nullopt if none exists.
inline std::optional<Ranking> perfect_matching(const Psm& x) {
  const int m = x.m();
  std::vector<int> owner(static_cast<std::size_t>(m), -1);
  std::vector<char> visited(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) {
    std::fill(visited.begin(), visited.end(), 0);
    if (!detail::augment(x, a, owner, visited)) return std::nullopt;
  }
  return Ranking(std::vector<Candidate>(owner.begin(), owner.end()));
}

/// c ballots whose PSM is exactly x.
inline Profile recover_votes(const Psm& x) {
  const int m = x.m();
  if (m == 0) throw invalid_input("empty PSM");
  const long c = x.row_sum(0);
  if (!validate_psm(x, static_cast<int>(c))) throw invalid_input("not a valid PSM: row and column sums must all be equal");
  Psm residual = x;
  Profile votes(m);
  votes.reserve(static_cast<std::size_t>(c));
  for (long k = 0; k < c; ++k) {
    // Residual is (c-k)-regular, so Hall's condition guarantees a matching.
    auto ballot = perfect_matching(residual);
    if (!ballot) throw invalid_input("PSM does not decompose into perfect matchings");
    for (int p = 0; p < m; ++p) --residual(ballot->at(p), p);
    votes.add(std::move(*ballot));
  }
  return votes;
}

inline Profile recover_votes(const StrategyPsm& x) { return recover_votes(x.matrix()); }

}  // namespace bvm
