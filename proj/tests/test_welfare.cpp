#include <catch_amalgamated.hpp>

#include <random>

#include "bvm/distributions.hpp"
#include "bvm/matching.hpp"
#include "bvm/strategies.hpp"
#include "bvm/welfare.hpp"

using namespace bvm;
using Catch::Approx;

namespace {

Profile profile_of(int m, std::vector<std::vector<Candidate>> votes) {
  Profile p(m);
  for (auto& v : votes) p.add(Ranking(std::move(v)));
  return p;
}

std::vector<Profile> all_profiles(int m, int n) {
  const auto rankings = all_rankings(m);
  const int r = static_cast<int>(rankings.size());
  std::vector<Profile> out;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Profile p(m);
    for (int i : idx) p.add(rankings[i]);
    out.push_back(std::move(p));
    int k = 0;
    while (k < n && ++idx[k] == r) idx[k++] = 0;
    if (k == n) break;
  }
  return out;
}

// Regret recomputed from the appended ballots, with plain loops.
double regret_by_ballots(const Profile& sincere, const StrategyPsm& x, const ScoringRule& rule) {
  const int m = sincere.m();
  std::vector<double> before(m, 0.0), after(m, 0.0);
  for (const auto& v : sincere.votes())
    for (int p = 0; p < m; ++p) before[v.at(p)] += static_cast<double>(rule[p]);
  after = before;
  const auto ballots = recover_votes(x);
  for (const auto& v : ballots.votes())
    for (int p = 0; p < m; ++p) after[v.at(p)] += static_cast<double>(rule[p]);
  const auto top = [&](const std::vector<double>& s) {
    Candidate best = -1;
    for (Candidate a = 0; a < m; ++a)
      if (a != x.d() && (best < 0 || s[a] > s[best])) best = a;
    return s[x.d()] > s[best] ? x.d() : best;
  };
  return before[top(before)] - before[top(after)];
}

}  // namespace

TEST_CASE("regret examples") {
  const auto borda = ScoringRule::borda(3);
  const auto sincere = profile_of(3, {{0, 2, 1}, {0, 1, 2}});
  CHECK(score_profile(sincere, borda) == ScoreVector{4, 1, 1});
  const StrategyPsm x(psm_of_votes(profile_of(3, {{2, 1, 0}, {2, 1, 0}})), 2, 2);
  const auto o = evaluate_outcome(sincere, x, borda);
  CHECK(total_scores(score_profile(sincere, borda), x.matrix(), borda) == ScoreVector{4, 3, 5});
  CHECK(o.sincere_winner == 0);
  CHECK(o.manipulated_winner == 2);
  CHECK(o.regret == 3.0);

  // A single coalition vote cannot overturn a four-point lead.
  const StrategyPsm one(psm_of_votes(profile_of(3, {{2, 1, 0}})), 1, 2);
  CHECK(regret(sincere, one, borda) == 0.0);

  // Custom welfare: count of voters ranking the candidate last.
  const WelfareFn last = [](Candidate a, const Profile& p) {
    double n = 0;
    for (const auto& v : p.votes()) n += v.at(p.m() - 1) == a;
    return n;
  };
  CHECK(regret(sincere, x, borda, last) == -1.0);
}

TEST_CASE("regret agrees with ballot-level recomputation") {
  Rng rng(12);
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 3 + static_cast<int>(gen() % 4), c = 1 + static_cast<int>(gen() % 6);
    const auto rule = trial % 2 ? ScoringRule::borda(m) : ScoringRule::k_approval(m, 1 + static_cast<int>(gen() % (m - 1)));
    const auto sincere = sample_profile(ImpartialCulture{m}, 1 + static_cast<int>(gen() % 8), rng);
    const auto x = detail::rotation_strategy(m, c, static_cast<Candidate>(gen() % m), 1 + static_cast<int>(gen() % (m - 1)));
    const double r = regret(sincere, x, rule);
    CHECK(r == regret_by_ballots(sincere, x, rule));
    CHECK(r >= 0.0);
  }
}

TEST_CASE("bounds") {
  const auto borda = ScoringRule::borda(3);
  CHECK(bound_general(borda, 2, 0.5, 0.25) == Approx(2.5));
  CHECK(bound_general(borda, 2, 0.0, 0.0) == 0.0);
  CHECK(bound_kapproval(10, 1, 6, 0.3, 0.1) == Approx(0.4));
  CHECK(bound_kapproval(2, 1, 6, 0.3, 0.1) == 0.0);
  CHECK(bound_kapproval(6, 2, 4, 0.5, 0.0) == Approx(1.0));
  CHECK_THROWS_AS(bound_general(borda, 2, 1.5, 0.0), invalid_input);
}

TEST_CASE("expected regret under a point mass is the profile's regret") {
  const auto borda = ScoringRule::borda(3);
  const auto sincere = profile_of(3, {{0, 2, 1}, {0, 1, 2}});
  const StrategyPsm x(psm_of_votes(profile_of(3, {{2, 1, 0}, {2, 1, 0}})), 2, 2);
  Rng rng(1);
  const auto r = expected_regret(PointMass{sincere}, 2, x, borda, 50, rng);
  CHECK(r.expected_regret == 3.0);
  CHECK(r.normalized_expected_regret == Approx(0.75));
  CHECK(r.p_flip_to_d == 1.0);
  CHECK(r.regret_std_error == 0.0);
}

TEST_CASE("a strategy that never changes the winner has zero regret") {
  // Plurality with one manipulator against a lead of at least two.
  Profile p(3);
  for (int i = 0; i < 5; ++i) p.add(Ranking({0, 1, 2}));
  Rng rng(2);
  const auto x = balanced_strategy(3, 1, 1, 2);
  const auto r = expected_regret(PointMass{p}, 5, x, ScoringRule::plurality(3), 10, rng);
  CHECK(r.expected_regret == 0.0);
  CHECK(r.manipulation_probability() == 0.0);
}

TEST_CASE("Monte Carlo regret matches exact enumeration") {
  const auto rule = ScoringRule::borda(3);
  const auto x = balanced_strategy(3, 2, 2, 2);
  const auto profiles = all_profiles(3, 3);
  REQUIRE(profiles.size() == 216);
  const auto exact = regret_over(profiles, x, rule);
  Rng rng(3);
  const auto mc = expected_regret(ImpartialCulture{3}, 3, x, rule, 40000, rng);
  CHECK(std::abs(mc.expected_regret - exact.expected_regret) < 3 * mc.regret_std_error);
  CHECK(mc.p_flip_to_d == Approx(exact.p_flip_to_d).margin(0.01));
}

TEST_CASE("the general bound holds whenever a winner flips") {
  Rng rng(4);
  std::mt19937_64 gen(4);
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int m = 3 + static_cast<int>(gen() % 4), c = 1 + static_cast<int>(gen() % 8);
    const auto rule = trial % 3 == 0 ? ScoringRule::borda(m) : ScoringRule::k_approval(m, 1 + static_cast<int>(gen() % (m - 1)));
    const DistributionSpec spec = trial % 2 ? DistributionSpec{ImpartialCulture{m}}
                                            : DistributionSpec{MallowsModel(Ranking::identity(m), 0.5 + 0.1 * (trial % 5))};
    const auto x = detail::rotation_strategy(m, c, static_cast<Candidate>(gen() % m), 1);
    const auto r = expected_regret(spec, 5 + static_cast<int>(gen() % 20), x, rule, 300, rng);
    if (r.p_flip_to_d + r.p_flip_to_other == 0) continue;
    ++checked;
    CHECK(r.expected_regret <= r.bound_general);
    CHECK(r.normalized_expected_regret >= 0.0);
    CHECK(r.normalized_expected_regret <= 1.0);
  }
  CHECK(checked > 50);
}

TEST_CASE("the general bound is tight when a tie hands the win to another candidate") {
  // Scores (1,2,1) plus one coalition ballot (a2,a0,a1) give a three-way tie;
  // a0 takes it on index. Regret c(a2 - am) = 1 equals the bound.
  const ScoringRule rule({1, 1, 0});
  const auto sincere = profile_of(3, {{1, 0, 2}, {1, 2, 0}});
  const StrategyPsm x(psm_of_votes(profile_of(3, {{2, 0, 1}})), 1, 2);
  Rng rng(5);
  const auto r = expected_regret(PointMass{sincere}, 2, x, rule, 10, rng);
  CHECK(r.p_flip_to_other == 1.0);
  CHECK(r.expected_regret == 1.0);
  CHECK(r.bound_general == 1.0);
}

TEST_CASE("k-approval bound under exact impartial culture") {
  // The bound's multiplier is zero here, but plurality coalitions do move the
  // winner away from a candidate with more first places. One voter ranking a1
  // first and two manipulators for a0 already gives regret 1.
  const auto plurality = ScoringRule::plurality(3);
  const auto x = balanced_strategy(3, 1, 3, 0);
  const auto small = profile_of(3, {{1, 0, 2}});
  CHECK(regret(small, balanced_strategy(3, 1, 2, 0), plurality) == 1.0);

  const auto r = regret_over(all_profiles(3, 3), x, plurality);
  REQUIRE(r.bound_kapproval.has_value());
  CHECK(*r.bound_kapproval == 0.0);
  CHECK(r.expected_regret == Approx(2.0 / 3.0));
  CHECK(r.expected_regret > *r.bound_kapproval);
}

TEST_CASE("worst-case construction") {
  // Evaluated by hand on the construction: regret is c(top - delta - xi/(m-1)).
  for (Score top : {10, 25, 100}) {
    const auto w = worst_case_instance(4, 2, 3, 1, 1, top);
    CHECK(w.d == 2);
    CHECK(w.favourite == 0);
    CHECK(regret(w.profile, w.strategy, w.rule) == Approx(2.0 * (top - 1 - 0.5)));
    CHECK(regret(w.profile, w.strategy, w.rule) == regret_by_ballots(w.profile, w.strategy, w.rule));
  }
  const auto w4 = worst_case_instance(9, 3, 4, 2, 3, 40);
  CHECK(regret(w4.profile, w4.strategy, w4.rule) == Approx(3.0 * (40 - 2 - 1.0)));

  // With small delta and xi relative to the top score the ratio to cM nears one.
  const auto fine = worst_case_instance(4, 2, 3, 1, 1, 1000);
  CHECK(regret(fine.profile, fine.strategy, fine.rule) / (2.0 * fine.rule.total()) > 0.99);

  CHECK_THROWS_AS(worst_case_instance(5, 3, 3, 1, 1, 10), invalid_input);
  CHECK_THROWS_AS(worst_case_instance(5, 2, 3, 1, 1, 10), invalid_input);
}
