#pragma once

// Welfare impact of a manipulation. Regret is the welfare of the sincere
// winner minus the welfare of the manipulated winner, both measured on the
// sincere profile. Welfare defaults to the rule's own positional score.

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bvm/distributions.hpp"
#include "bvm/errors.hpp"
#include "bvm/rng.hpp"
#include "bvm/voting.hpp"

namespace bvm {

/// Welfare of a candidate on a sincere profile.
using WelfareFn = std::function<double(Candidate, const Profile&)>;

struct Outcome {
  Candidate sincere_winner;
  Candidate manipulated_winner;
  double regret;
  double sincere_welfare;  // welfare of the sincere winner
};

inline Outcome evaluate_outcome(const Profile& sincere, const StrategyPsm& x, const ScoringRule& rule,
                                const WelfareFn& welfare = {}) {
  if (sincere.m() != x.m() || rule.m() != x.m()) throw invalid_input("regret dimension mismatch");
  const auto s = score_profile(sincere, rule);
  const auto totals = total_scores(s, x.matrix(), rule);
  const Candidate before = winner(s, x.d());
  const Candidate after = winner(totals, x.d());
  const auto sw = [&](Candidate a) { return welfare ? welfare(a, sincere) : static_cast<double>(s[a]); };
  const double base = sw(before);
  return {before, after, base - sw(after), base};
}

inline double regret(const Profile& sincere, const StrategyPsm& x, const ScoringRule& rule,
                     const WelfareFn& welfare = {}) {
  return evaluate_outcome(sincere, x, rule, welfare).regret;
}

/// c [(a1 - am) P(flip to d) + (a2 - am) P(flip to another candidate)].
inline double bound_general(const ScoringRule& rule, int c, double p_flip_to_d, double p_flip_to_other) {
  if (p_flip_to_d < 0 || p_flip_to_d > 1 || p_flip_to_other < 0 || p_flip_to_other > 1)
    throw invalid_input("event probabilities must lie in [0, 1]");
  return c * (static_cast<double>(rule.top() - rule.bottom()) * p_flip_to_d +
              static_cast<double>(rule[1] - rule.bottom()) * p_flip_to_other);
}

/// (ceil(ck/m) - 1)(P(flip to d) + P(flip to another)), for the balanced
/// k-approval strategy under impartial culture.
inline double bound_kapproval(int c, int k, int m, double p_flip_to_d, double p_flip_to_other) {
  if (c < 0 || k < 1 || k >= m) throw invalid_input("need c >= 0 and 1 <= k < m");
  const long ck = static_cast<long>(c) * k;
  const long multiplier = (ck + m - 1) / m - 1;
  return static_cast<double>(std::max(0L, multiplier)) * (p_flip_to_d + p_flip_to_other);
}

struct RegretReport {
  double expected_regret = 0.0;
  double normalized_expected_regret = 0.0;
  double regret_std_error = 0.0;
  double bound_general = 0.0;
  std::optional<double> bound_kapproval;
  double p_flip_to_d = 0.0;  // sincere winner is not d, manipulated winner is d
  double p_flip_to_other = 0.0;  // winner changes to a candidate other than d
  long trials = 0;

  /// Realized probability of successful manipulation.
  double manipulation_probability() const noexcept { return p_flip_to_d; }
};

/// Accumulates outcomes in a fixed order.
class RegretAccumulator {
 public:
  RegretAccumulator(const ScoringRule& rule, const StrategyPsm& x) : rule_(rule), x_(x) {}

  void add(const Outcome& o) {
    ++n_;
    sum_ += o.regret;
    sum_sq_ += o.regret * o.regret;
    sum_norm_ += o.sincere_welfare > 0 ? o.regret / o.sincere_welfare : 0.0;
    if (o.sincere_winner != x_.d() && o.manipulated_winner == x_.d()) ++to_d_;
    if (o.sincere_winner != o.manipulated_winner && o.manipulated_winner != x_.d()) ++to_other_;
  }

  RegretReport report() const {
    if (n_ == 0) throw invalid_input("no trials");
    RegretReport r;
    const double n = static_cast<double>(n_);
    r.trials = n_;
    r.expected_regret = sum_ / n;
    r.normalized_expected_regret = sum_norm_ / n;
    const double var = n_ > 1 ? std::max(0.0, (sum_sq_ - sum_ * sum_ / n) / (n - 1)) : 0.0;
    r.regret_std_error = std::sqrt(var / n);
    r.p_flip_to_d = to_d_ / n;
    r.p_flip_to_other = to_other_ / n;
    r.bound_general = bound_general(rule_, x_.c(), r.p_flip_to_d, r.p_flip_to_other);
    if (const auto k = rule_.approval_k())
      r.bound_kapproval = bound_kapproval(x_.c(), *k, rule_.m(), r.p_flip_to_d, r.p_flip_to_other);
    return r;
  }

 private:
  const ScoringRule& rule_;
  const StrategyPsm& x_;
  long n_ = 0;
  double sum_ = 0.0, sum_sq_ = 0.0, sum_norm_ = 0.0;
  long to_d_ = 0, to_other_ = 0;
};

/// Monte Carlo estimate over `trials` fresh profiles. No sample is pruned:
/// regret can arise on profiles where d cannot win.
inline RegretReport expected_regret(const DistributionSpec& spec, int n, const StrategyPsm& x, const ScoringRule& rule,
                                    long trials, Rng& rng, const WelfareFn& welfare = {}) {
  if (trials < 1) throw invalid_input("expected regret needs at least one trial");
  RegretAccumulator acc(rule, x);
  for (long t = 0; t < trials; ++t) acc.add(evaluate_outcome(sample_profile(spec, n, rng), x, rule, welfare));
  return acc.report();
}

/// Equal-weight average over an explicit list of profiles (e.g. every profile
/// of a small impartial-culture instance).
inline RegretReport regret_over(std::span<const Profile> profiles, const StrategyPsm& x, const ScoringRule& rule,
                                const WelfareFn& welfare = {}) {
  RegretAccumulator acc(rule, x);
  for (const auto& p : profiles) acc.add(evaluate_outcome(p, x, rule, welfare));
  return acc.report();
}

/// Point-mass instance on which an optimal coalition's regret approaches cM.
struct WorstCaseInstance {
  Profile profile;
  ScoringRule rule;
  Candidate d;
  Candidate favourite;    // the sincere winner
  StrategyPsm strategy;   // d first and the favourite last on every ballot
};

/// Candidate 0 is the sincere favourite and m-1 the desired candidate. The
/// first c votes rank the favourite first and rotate the rest so each is in
/// every lower position c/(m-1) times; the other n-c votes split evenly
/// between (favourite, d, ...) and (d, favourite, ...), remaining candidates
/// ascending. Scores are (top, delta+xi, delta, ..., delta).
inline WorstCaseInstance worst_case_instance(int n, int c, int m, Score delta, Score xi, Score top) {
  if (m < 3) throw invalid_input("worst-case construction needs m >= 3");
  if (c < 1 || c % (m - 1) != 0) throw invalid_input("worst-case construction needs m-1 to divide c");
  if (n < c || (n - c) % 2 != 0) throw invalid_input("worst-case construction needs n-c >= 0 and even");
  if (delta <= 0 || xi <= 0) throw invalid_input("delta and xi must be positive");
  if (top < delta + xi) throw invalid_input("top score must be at least delta+xi");
  const Candidate favourite = 0, d = m - 1;

  std::vector<Score> alpha(static_cast<std::size_t>(m), delta);
  alpha[0] = top;
  alpha[1] = delta + xi;
  ScoringRule rule(std::move(alpha));

  std::vector<Candidate> lower;  // 1..m-2 then d
  for (Candidate a = 1; a < m; ++a) lower.push_back(a);
  Profile p(m);
  for (int b = 0; b < c; ++b) {
    std::vector<Candidate> order{favourite};
    for (int q = 0; q < m - 1; ++q) order.push_back(lower[(b + q) % (m - 1)]);
    p.add(Ranking(std::move(order)));
  }
  for (int half = 0; half < 2; ++half)
    for (int b = 0; b < (n - c) / 2; ++b) {
      std::vector<Candidate> order = half == 0 ? std::vector<Candidate>{favourite, d} : std::vector<Candidate>{d, favourite};
      for (Candidate a = 1; a < m - 1; ++a) order.push_back(a);
      p.add(Ranking(std::move(order)));
    }

  Psm x(m);
  x(d, 0) = c;
  x(favourite, m - 1) = c;
  for (int b = 0; b < c; ++b)
    for (int q = 0; q < m - 2; ++q) ++x(1 + (b + q) % (m - 2), q + 1);
  StrategyPsm strategy(std::move(x), c, d);

  const auto s = score_profile(p, rule);
  if (winner(s, d) != favourite || winner(total_scores(s, strategy.matrix(), rule), d) != d)
    throw invalid_input("top score too small for the construction to flip the winner");
  return {std::move(p), std::move(rule), d, favourite, std::move(strategy)};
}

}  // namespace bvm
