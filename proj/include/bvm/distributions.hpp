#pragma once

// Belief models over sincere profiles: impartial culture, impartial anonymous
// culture, Mallows phi-models and their mixtures, empirical ballot pools and
// point masses. Sampling draws from an injected generator; the models
// themselves are immutable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <ranges>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "bvm/errors.hpp"
#include "bvm/rng.hpp"
#include "bvm/voting.hpp"

namespace bvm {

/// Number of candidate pairs the two rankings order differently.
inline int kendall_tau(const Ranking& r1, const Ranking& r2) {
  if (r1.size() != r2.size()) throw invalid_input("kendall_tau over rankings of different length");
  const int m = r1.size();
  int d = 0;
  for (int p = 0; p < m; ++p)
    for (int q = p + 1; q < m; ++q)
      if (r2.rank_of(r1.at(p)) > r2.rank_of(r1.at(q))) ++d;
  return d;
}

/// Sum over all m! rankings of phi^{distance to the reference}.
inline double mallows_normalizer(int m, double phi) {
  double z = 1.0;
  for (int i = 1; i <= m; ++i) {
    // (1 - phi^i) / (1 - phi) written as a geometric sum so phi = 1 needs no special case.
    double term = 0.0, p = 1.0;
    for (int t = 0; t < i; ++t, p *= phi) term += p;
    z *= term;
  }
  return z;
}

class MallowsModel {
 public:
  MallowsModel(Ranking sigma, double phi) : sigma_(std::move(sigma)), phi_(phi) {
    if (!(phi > 0.0 && phi <= 1.0)) throw invalid_input("Mallows dispersion must lie in (0, 1]");
    if (sigma_.size() < 2) throw invalid_input("Mallows model needs at least two candidates");
    z_ = mallows_normalizer(sigma_.size(), phi_);
  }

  const Ranking& reference() const noexcept { return sigma_; }
  double phi() const noexcept { return phi_; }
  int m() const noexcept { return sigma_.size(); }
  double normalizer() const noexcept { return z_; }

 private:
  Ranking sigma_;
  double phi_;
  double z_;
};

inline double mallows_pmf(const Ranking& r, const MallowsModel& model) {
  if (r.size() != model.m()) throw invalid_input("ranking length differs from model");
  return std::pow(model.phi(), kendall_tau(r, model.reference())) / model.normalizer();
}

class MallowsMixture {
 public:
  MallowsMixture(std::vector<MallowsModel> components, std::vector<double> weights)
      : components_(std::move(components)), weights_(std::move(weights)) {
    if (components_.empty()) throw invalid_input("mixture has no components");
    if (components_.size() != weights_.size()) throw invalid_input("mixture weight count differs from component count");
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw invalid_input("mixture weights must be non-negative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw invalid_input("mixture weights must sum to 1");
    for (const auto& c : components_)
      if (c.m() != components_.front().m()) throw invalid_input("mixture components differ in candidate count");
  }

  const std::vector<MallowsModel>& components() const noexcept { return components_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  int m() const noexcept { return components_.front().m(); }

  double pmf(const Ranking& r) const {
    double p = 0.0;
    for (std::size_t k = 0; k < components_.size(); ++k) p += weights_[k] * mallows_pmf(r, components_[k]);
    return p;
  }

 private:
  std::vector<MallowsModel> components_;
  std::vector<double> weights_;
};

/// Non-empty multiset of complete rankings, resampled with replacement.
class EmpiricalPool {
 public:
  EmpiricalPool(int m, std::vector<Ranking> ballots) : m_(m), ballots_(std::move(ballots)) {
    if (ballots_.empty()) throw invalid_input("empty pool");
    for (const auto& b : ballots_)
      if (b.size() != m_) throw invalid_input("pool ballot over the wrong number of candidates");
  }

  int m() const noexcept { return m_; }
  const std::vector<Ranking>& ballots() const noexcept { return ballots_; }

 private:
  int m_;
  std::vector<Ranking> ballots_;
};

struct ImpartialCulture {
  int candidates;
  int m() const noexcept { return candidates; }
};

struct ImpartialAnonymousCulture {
  int candidates;
  int m() const noexcept { return candidates; }
};

struct PointMass {
  Profile profile;
  int m() const noexcept { return profile.m(); }
};

using DistributionSpec =
    std::variant<ImpartialCulture, ImpartialAnonymousCulture, MallowsModel, MallowsMixture, EmpiricalPool, PointMass>;

inline int candidate_count(const DistributionSpec& spec) {
  return std::visit([](const auto& s) { return s.m(); }, spec);
}

namespace detail {

// Repeated insertion: the i-th reference candidate goes j slots above the
// bottom of the partial list with probability proportional to phi^j.
inline Ranking sample_mallows(const MallowsModel& model, Rng& rng) {
  const int m = model.m();
  const double phi = model.phi();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Candidate> order;
  order.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double total = 0.0, w = 1.0;
    for (int j = 0; j <= i; ++j, w *= phi) total += w;
    double u = unit(rng) * total;
    int up = 0;
    w = 1.0;
    while (up < i && u >= w) {
      u -= w;
      w *= phi;
      ++up;
    }
    order.insert(order.begin() + (i - up), model.reference().at(i));
  }
  return Ranking(std::move(order));
}

inline Ranking sample_uniform(int m, Rng& rng) {
  std::vector<Candidate> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return Ranking(std::move(order));
}

inline std::vector<Ranking> all_rankings(int m) {
  std::vector<Candidate> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::vector<Ranking> out;
  do out.emplace_back(order);
  while (std::next_permutation(order.begin(), order.end()));
  return out;
}

}  // namespace detail

/// Every ranking of m candidates in lexicographic order.
inline std::vector<Ranking> all_rankings(int m) {
  if (m < 1 || m > 9) throw invalid_input("ranking enumeration supports 1 <= m <= 9");
  return detail::all_rankings(m);
}

inline Ranking sample_ranking(const MallowsModel& model, Rng& rng) { return detail::sample_mallows(model, rng); }

/// One ranking. Impartial anonymous culture and point masses are defined over
/// whole profiles only and are rejected here.
inline Ranking sample_ranking(const DistributionSpec& spec, Rng& rng) {
  return std::visit(
      [&](const auto& s) -> Ranking {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ImpartialCulture>) {
          return detail::sample_uniform(s.m(), rng);
        } else if constexpr (std::is_same_v<T, MallowsModel>) {
          return detail::sample_mallows(s, rng);
        } else if constexpr (std::is_same_v<T, MallowsMixture>) {
          std::discrete_distribution<std::size_t> pick(s.weights().begin(), s.weights().end());
          return detail::sample_mallows(s.components()[pick(rng)], rng);
        } else if constexpr (std::is_same_v<T, EmpiricalPool>) {
          std::uniform_int_distribution<std::size_t> pick(0, s.ballots().size() - 1);
          return s.ballots()[pick(rng)];
        } else {
          throw invalid_input("this distribution only samples whole profiles");
        }
      },
      spec);
}

/// Counts of each ranking (lexicographic index) in a uniformly drawn voting
/// situation of n voters: a uniform (m!-1)-subset of n+m!-1 slots marks the bars.
inline std::vector<int> sample_voting_situation(int m, int n, Rng& rng) {
  if (m < 2 || m > 8) throw invalid_input("impartial anonymous culture supports 2 <= m <= 8");
  long kinds = 1;
  for (int i = 2; i <= m; ++i) kinds *= i;
  const long slots = n + kinds - 1;
  std::vector<int> bars;
  bars.reserve(static_cast<std::size_t>(kinds - 1));
  std::vector<int> population(static_cast<std::size_t>(slots));
  std::iota(population.begin(), population.end(), 0);
  std::sample(population.begin(), population.end(), std::back_inserter(bars), kinds - 1, rng);
  std::vector<int> counts(static_cast<std::size_t>(kinds), 0);
  long prev = -1;
  for (long k = 0; k < kinds - 1; ++k) {
    counts[k] = static_cast<int>(bars[k] - prev - 1);
    prev = bars[k];
  }
  counts[kinds - 1] = static_cast<int>(slots - 1 - prev);
  return counts;
}

inline Profile sample_profile(const DistributionSpec& spec, int n, Rng& rng) {
  if (n < 1) throw invalid_input("profile size must be at least 1");
  if (const auto* point = std::get_if<PointMass>(&spec)) {
    if (point->profile.size() != n)
      throw invalid_input("point-mass profile has " + std::to_string(point->profile.size()) + " voters, requested " +
                          std::to_string(n));
    return point->profile;
  }
  const int m = candidate_count(spec);
  Profile p(m);
  p.reserve(static_cast<std::size_t>(n));
  if (std::holds_alternative<ImpartialAnonymousCulture>(spec)) {
    const auto counts = sample_voting_situation(m, n, rng);
    const auto rankings = detail::all_rankings(m);
    for (std::size_t k = 0; k < counts.size(); ++k)
      for (int c = 0; c < counts[k]; ++c) p.add(rankings[k]);
    return p;
  }
  for (int i = 0; i < n; ++i) p.add(sample_ranking(spec, rng));
  return p;
}

/// Mean 1-based position of each candidate under the belief. Exact for
/// impartial cultures, pools and point masses; estimated from `draws` samples
/// for Mallows models and mixtures.
inline std::vector<double> expected_ranks(const DistributionSpec& spec, Rng& rng, int draws = 10000) {
  const int m = candidate_count(spec);
  std::vector<double> sum(static_cast<std::size_t>(m), 0.0);
  auto accumulate = [&](const Ranking& r) {
    for (int p = 0; p < m; ++p) sum[r.at(p)] += p + 1;
  };
  double count = 0.0;
  if (std::holds_alternative<ImpartialCulture>(spec) || std::holds_alternative<ImpartialAnonymousCulture>(spec)) {
    return std::vector<double>(static_cast<std::size_t>(m), (m + 1) / 2.0);
  } else if (const auto* pool = std::get_if<EmpiricalPool>(&spec)) {
    for (const auto& r : pool->ballots()) accumulate(r);
    count = static_cast<double>(pool->ballots().size());
  } else if (const auto* point = std::get_if<PointMass>(&spec)) {
    for (const auto& r : point->profile.votes()) accumulate(r);
    count = point->profile.size();
  } else {
    for (int i = 0; i < draws; ++i) accumulate(sample_ranking(spec, rng));
    count = draws;
  }
  for (auto& s : sum) s /= count;
  return sum;
}

/// Candidate whose expected rank is k-th best (k is 1-based); equal expected
/// ranks are ordered by candidate index.
inline Candidate candidate_of_expected_rank(const DistributionSpec& spec, int k, Rng& rng, int draws = 10000) {
  const auto ranks = expected_ranks(spec, rng, draws);
  if (k < 1 || k > static_cast<int>(ranks.size())) throw invalid_input("expected rank out of range");
  std::vector<Candidate> order(ranks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Candidate a, Candidate b) { return ranks[a] < ranks[b]; });
  return order[k - 1];
}

}  // namespace bvm
