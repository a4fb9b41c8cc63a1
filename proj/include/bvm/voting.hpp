#pragma once

// Candidates, rankings, profiles, positional scoring rules, positional summary
// matrices (PSMs) and winner determination.
//
// Candidates are dense 0-based indices. A ranking lists candidates from most
// to least preferred; position 0 is the top.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bvm/errors.hpp"

namespace bvm {

using Candidate = int;
using Score = std::int64_t;

/// Per-candidate total positional scores.
using ScoreVector = std::vector<Score>;

class Ranking {
 public:
  Ranking() = default;

  explicit Ranking(std::vector<Candidate> order) : order_(std::move(order)), position_(order_.size(), -1) {
    const int m = static_cast<int>(order_.size());
    for (int p = 0; p < m; ++p) {
      const Candidate a = order_[p];
      if (a < 0 || a >= m || position_[a] != -1)
        throw invalid_input("ranking is not a permutation of 0.." + std::to_string(m - 1));
      position_[a] = p;
    }
  }

  static Ranking identity(int m) {
    std::vector<Candidate> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    return Ranking(std::move(order));
  }

  int size() const noexcept { return static_cast<int>(order_.size()); }
  Candidate at(int position) const { return order_.at(position); }
  int rank_of(Candidate a) const { return position_.at(a); }
  bool prefers(Candidate a, Candidate b) const { return rank_of(a) < rank_of(b); }
  std::span<const Candidate> order() const noexcept { return order_; }

  friend bool operator==(const Ranking& x, const Ranking& y) { return x.order_ == y.order_; }
  friend auto operator<=>(const Ranking& x, const Ranking& y) { return x.order_ <=> y.order_; }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < order_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(order_[i]);
    }
    return out;
  }

 private:
  std::vector<Candidate> order_;
  std::vector<int> position_;
};

/// A sequence of votes over a common candidate set of size m.
class Profile {
 public:
  explicit Profile(int m = 0) : m_(m) {
    if (m < 0) throw invalid_input("negative candidate count");
  }

  Profile(int m, std::vector<Ranking> votes) : m_(m) {
    votes_.reserve(votes.size());
    for (auto& v : votes) add(std::move(v));
  }

  void add(Ranking vote) {
    if (vote.size() != m_)
      throw invalid_input("vote over " + std::to_string(vote.size()) + " candidates added to profile over " +
                          std::to_string(m_));
    votes_.push_back(std::move(vote));
  }

  void reserve(std::size_t n) { votes_.reserve(n); }

  int m() const noexcept { return m_; }
  int size() const noexcept { return static_cast<int>(votes_.size()); }
  bool empty() const noexcept { return votes_.empty(); }
  const std::vector<Ranking>& votes() const noexcept { return votes_; }
  const Ranking& operator[](int i) const { return votes_.at(i); }

  friend bool operator==(const Profile&, const Profile&) = default;

 private:
  int m_ = 0;
  std::vector<Ranking> votes_;
};

/// Integral, non-increasing, non-negative positional score vector with
/// alpha[0] > alpha[m-1].
class ScoringRule {
 public:
  explicit ScoringRule(std::vector<Score> alpha) : alpha_(std::move(alpha)) {
    if (alpha_.size() < 2) throw invalid_input("scoring rule needs at least two positions");
    for (std::size_t j = 0; j < alpha_.size(); ++j) {
      if (alpha_[j] < 0) throw invalid_input("scoring rule entries must be non-negative");
      if (j > 0 && alpha_[j] > alpha_[j - 1]) throw invalid_input("scoring rule must be non-increasing");
    }
    if (alpha_.front() == alpha_.back()) throw invalid_input("degenerate scoring rule (all entries equal)");
  }

  static ScoringRule plurality(int m) { return k_approval(m, 1); }

  static ScoringRule k_approval(int m, int k) {
    if (k < 1 || k >= m) throw invalid_input("k-approval needs 1 <= k < m");
    std::vector<Score> a(static_cast<std::size_t>(m), 0);
    std::fill_n(a.begin(), k, Score{1});
    return ScoringRule(std::move(a));
  }

  static ScoringRule borda(int m) {
    std::vector<Score> a(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) a[j] = m - 1 - j;
    return ScoringRule(std::move(a));
  }

  int m() const noexcept { return static_cast<int>(alpha_.size()); }
  Score operator[](int position) const { return alpha_.at(position); }
  std::span<const Score> alpha() const noexcept { return alpha_; }
  Score top() const noexcept { return alpha_.front(); }
  Score bottom() const noexcept { return alpha_.back(); }
  Score total() const { return std::accumulate(alpha_.begin(), alpha_.end(), Score{0}); }

  /// k when the rule is k-approval (alpha = 1^k 0^(m-k)).
  std::optional<int> approval_k() const {
    int k = 0;
    while (k < m() && alpha_[k] == 1) ++k;
    for (int j = k; j < m(); ++j)
      if (alpha_[j] != 0) return std::nullopt;
    if (k == 0 || k == m()) return std::nullopt;
    return k;
  }

  friend bool operator==(const ScoringRule&, const ScoringRule&) = default;

 private:
  std::vector<Score> alpha_;
};

/// Square count matrix; entry (i, j) is the number of ballots ranking
/// candidate i in position j.
class Psm {
 public:
  explicit Psm(int m = 0) : m_(m), cells_(static_cast<std::size_t>(m) * m, 0) {}

  Psm(int m, std::vector<int> row_major) : m_(m), cells_(std::move(row_major)) {
    if (cells_.size() != static_cast<std::size_t>(m) * m) throw invalid_input("PSM cell count is not m*m");
  }

  int m() const noexcept { return m_; }
  int& operator()(int i, int j) { return cells_[static_cast<std::size_t>(i) * m_ + j]; }
  int operator()(int i, int j) const { return cells_[static_cast<std::size_t>(i) * m_ + j]; }

  long row_sum(int i) const {
    long s = 0;
    for (int j = 0; j < m_; ++j) s += (*this)(i, j);
    return s;
  }
  long col_sum(int j) const {
    long s = 0;
    for (int i = 0; i < m_; ++i) s += (*this)(i, j);
    return s;
  }

  Psm& operator+=(const Psm& o) {
    if (o.m_ != m_) throw invalid_input("PSM dimension mismatch");
    for (std::size_t k = 0; k < cells_.size(); ++k) cells_[k] += o.cells_[k];
    return *this;
  }
  friend Psm operator+(Psm a, const Psm& b) { return a += b; }
  friend bool operator==(const Psm&, const Psm&) = default;

 private:
  int m_ = 0;
  std::vector<int> cells_;
};

/// A coalition strategy in normal form: every row and column sums to c, the
/// desired candidate d occupies position 0 on all c ballots.
class StrategyPsm {
 public:
  StrategyPsm(Psm matrix, int c, Candidate d) : matrix_(std::move(matrix)), c_(c), d_(d) {
    const int m = matrix_.m();
    if (c < 0) throw invalid_input("coalition size must be non-negative");
    if (d < 0 || d >= m) throw invalid_input("desired candidate out of range");
    for (int i = 0; i < m; ++i) {
      if (matrix_.row_sum(i) != c || matrix_.col_sum(i) != c)
        throw invalid_input("strategy PSM row/column sums must all equal c");
      for (int j = 0; j < m; ++j)
        if (matrix_(i, j) < 0) throw invalid_input("strategy PSM has a negative entry");
    }
    if (matrix_(d, 0) != c) throw invalid_input("strategy PSM must place d first on every ballot");
  }

  const Psm& matrix() const noexcept { return matrix_; }
  int c() const noexcept { return c_; }
  Candidate d() const noexcept { return d_; }
  int m() const noexcept { return matrix_.m(); }

  friend bool operator==(const StrategyPsm&, const StrategyPsm&) = default;

 private:
  Psm matrix_;
  int c_;
  Candidate d_;
};

inline ScoreVector score_profile(const Profile& profile, const ScoringRule& rule) {
  if (profile.empty()) throw invalid_input("cannot score an empty profile");
  if (profile.m() != rule.m()) throw invalid_input("scoring rule length differs from candidate count");
  ScoreVector s(static_cast<std::size_t>(profile.m()), 0);
  for (const auto& v : profile.votes())
    for (int p = 0; p < v.size(); ++p) s[v.at(p)] += rule[p];
  return s;
}

inline Psm psm_of_votes(const Profile& votes) {
  Psm x(votes.m());
  for (const auto& v : votes.votes())
    for (int p = 0; p < v.size(); ++p) ++x(v.at(p), p);
  return x;
}

/// s + X alpha'.
inline ScoreVector total_scores(std::span<const Score> s, const Psm& x, const ScoringRule& rule) {
  const int m = x.m();
  if (static_cast<int>(s.size()) != m || rule.m() != m) throw invalid_input("total_scores dimension mismatch");
  ScoreVector out(s.begin(), s.end());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) out[i] += static_cast<Score>(x(i, j)) * rule[j];
  return out;
}

/// Plurality of the scores; ties go against d, remaining ties to the lowest index.
inline Candidate winner(std::span<const Score> scores, Candidate d) {
  if (scores.empty()) throw invalid_input("winner of an empty score vector");
  const Score best = *std::max_element(scores.begin(), scores.end());
  for (int i = 0; i < static_cast<int>(scores.size()); ++i)
    if (scores[i] == best && i != d) return i;
  return d;
}

}  // namespace bvm
