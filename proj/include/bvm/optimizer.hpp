#pragma once

// Sample-based optimal coalition strategies for positional scoring rules.
//
// Each sampled sincere profile is reduced to its score vector s. With the
// desired candidate d placed first on all c ballots, a strategy is fully
// described by the points y_i = sum_{j>=2} X_ij alpha_j it hands every other
// candidate i, and d wins sample t iff y_i <= s_d + c alpha_1 - s_i - 1 for
// all i != d. The solver searches over y (one row at a time) with bitset
// bookkeeping of the samples still winnable, and certifies every improving y
// by constructing an integral PSM that realizes it.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bvm/errors.hpp"
#include "bvm/voting.hpp"

namespace bvm {

/// Score vectors of T sampled sincere profiles of n voters each.
struct SampleSet {
  ScoringRule rule;
  int n = 0;
  std::vector<ScoreVector> score_vectors;

  int m() const noexcept { return rule.m(); }
  int size() const noexcept { return static_cast<int>(score_vectors.size()); }
};

inline SampleSet summarize(std::span<const Profile> profiles, const ScoringRule& rule) {
  SampleSet out{rule, 0, {}};
  if (profiles.empty()) return out;
  out.n = profiles.front().size();
  out.score_vectors.reserve(profiles.size());
  for (const auto& p : profiles) {
    if (p.m() != rule.m()) throw invalid_input("profile candidate count differs from scoring rule");
    if (p.size() != out.n) throw invalid_input("sampled profiles differ in voter count");
    out.score_vectors.push_back(score_profile(p, rule));
  }
  return out;
}

/// Sample indices split by whether c manipulators can matter.
struct PruneResult {
  std::vector<int> impossible;  // d loses whatever the coalition does
  std::vector<int> guaranteed;  // d wins whatever the coalition does (d first)
  std::vector<int> contested;
};

namespace detail {

inline Score best_rival(std::span<const Score> s, Candidate d) {
  Score best = std::numeric_limits<Score>::min();
  for (int i = 0; i < static_cast<int>(s.size()); ++i)
    if (i != d) best = std::max(best, s[i]);
  return best;
}

inline void check_instance(const SampleSet& samples, int c, Candidate d) {
  if (c < 1) throw invalid_input("coalition size must be at least 1");
  if (d < 0 || d >= samples.m()) throw invalid_input("desired candidate out of range");
  for (const auto& s : samples.score_vectors)
    if (static_cast<int>(s.size()) != samples.m()) throw invalid_input("score vector length differs from rule");
}

}  // namespace detail

inline PruneResult prune(const SampleSet& samples, int c, Candidate d) {
  detail::check_instance(samples, c, d);
  const auto& rule = samples.rule;
  PruneResult out;
  for (int t = 0; t < samples.size(); ++t) {
    const auto& s = samples.score_vectors[t];
    const Score rival = detail::best_rival(s, d);
    const Score with_coalition = s[d] + c * rule.top();
    if (with_coalition <= c * rule.bottom() + rival)
      out.impossible.push_back(t);
    else if (with_coalition > c * rule[1] + rival)
      out.guaranteed.push_back(t);
    else
      out.contested.push_back(t);
  }
  return out;
}

struct SolveOptions {
  double budget_seconds = std::numeric_limits<double>::infinity();
  /// Search only the contested samples (guaranteed ones are added back).
  bool use_pruning = true;
};

struct SolveResult {
  StrategyPsm strategy;
  long objective = 0;  // samples d wins with the strategy
  double win_probability = 0.0;
  double manipulation_probability = 0.0;
  bool optimal = false;
  double solve_time = 0.0;  // seconds
  int unmanipulated_wins = 0;
  int impossible = 0;
  int guaranteed = 0;
  int contested = 0;
  long nodes = 0;
};

/// Samples on which d is the winner once the strategy's ballots are added.
inline long count_wins(const SampleSet& samples, const StrategyPsm& x) {
  long wins = 0;
  for (const auto& s : samples.score_vectors) {
    const auto totals = total_scores(s, x.matrix(), samples.rule);
    if (winner(totals, x.d()) == x.d()) ++wins;
  }
  return wins;
}

inline int count_unmanipulated_wins(const SampleSet& samples, Candidate d) {
  int wins = 0;
  for (const auto& s : samples.score_vectors)
    if (winner(s, d) == d) ++wins;
  return wins;
}

namespace detail {

inline SolveResult finish(const SampleSet& samples, StrategyPsm strategy, long objective, bool optimal,
                          double seconds) {
  SolveResult r{std::move(strategy)};
  const double total = samples.size();
  r.objective = objective;
  r.unmanipulated_wins = count_unmanipulated_wins(samples, r.strategy.d());
  r.win_probability = objective / total;
  r.manipulation_probability = std::max(0L, objective - r.unmanipulated_wins) / total;
  r.optimal = optimal;
  r.solve_time = seconds;
  return r;
}

/// Lays the (m-1)x(m-1) block for the non-d candidates and positions 2..m
/// into a full strategy PSM with d first on every ballot.
inline StrategyPsm embed(const std::vector<int>& block, int m, int c, Candidate d) {
  Psm x(m);
  x(d, 0) = c;
  int r = 0;
  for (Candidate a = 0; a < m; ++a) {
    if (a == d) continue;
    for (int j = 1; j < m; ++j) x(a, j) = block[static_cast<std::size_t>(r) * (m - 1) + (j - 1)];
    ++r;
  }
  return StrategyPsm(std::move(x), c, d);
}

inline std::vector<Candidate> others(int m, Candidate d) {
  std::vector<Candidate> out;
  for (Candidate a = 0; a < m; ++a)
    if (a != d) out.push_back(a);
  return out;
}

// Ballot b lists d, then the other candidates rotated by b: every
// candidate lands in every lower position equally often, up to one.
inline StrategyPsm rotation_strategy(int m, int c, Candidate d, int step) {
  const auto rest = others(m, d);
  const int L = m - 1;
  Psm x(m);
  x(d, 0) = c;
  for (int b = 0; b < c; ++b)
    for (int p = 0; p < L; ++p) ++x(rest[(static_cast<long>(b) * step + p) % L], p + 1);
  return StrategyPsm(std::move(x), c, d);
}

class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(int bits) : words_((bits + 63) / 64, 0) {}
  void set(int i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  std::size_t words() const noexcept { return words_.size(); }
  std::uint64_t* data() noexcept { return words_.data(); }
  const std::uint64_t* data() const noexcept { return words_.data(); }

 private:
  std::vector<std::uint64_t> words_;
};

// Search over per-candidate point totals y for one instance.
class AllocationSearch {
 public:
  AllocationSearch(const SampleSet& samples, const std::vector<int>& indices, int c, Candidate d,
                   std::chrono::steady_clock::time_point deadline)
      : m_(samples.m()), L_(m_ - 1), c_(c), d_(d), T_(static_cast<int>(indices.size())), deadline_(deadline) {
    const auto& rule = samples.rule;
    for (int j = 1; j < m_; ++j) slot_scores_.push_back(rule[j]);
    build_compositions();
    total_ = 0;
    for (Score b : slot_scores_) total_ += b * c_;

    // Slot multiset bounds: any k rows together take k*c slots.
    std::vector<Score> slots;
    for (Score b : slot_scores_) slots.insert(slots.end(), static_cast<std::size_t>(c_), b);
    std::sort(slots.begin(), slots.end());
    low_k_.assign(static_cast<std::size_t>(L_) + 1, 0);
    high_k_.assign(static_cast<std::size_t>(L_) + 1, 0);
    for (int k = 1; k <= L_; ++k) {
      low_k_[k] = std::accumulate(slots.begin(), slots.begin() + static_cast<long>(k) * c_, Score{0});
      high_k_[k] = std::accumulate(slots.end() - static_cast<long>(k) * c_, slots.end(), Score{0});
    }

    const auto rest = others(m_, d_);
    // caps[t][r]: the most points row r may receive with d still winning sample t.
    std::vector<std::vector<Score>> caps(static_cast<std::size_t>(T_), std::vector<Score>(L_));
    for (int t = 0; t < T_; ++t) {
      const auto& s = samples.score_vectors[indices[t]];
      for (int r = 0; r < L_; ++r) caps[t][r] = s[d_] + c_ * rule.top() - s[rest[r]] - 1;
    }

    // Tightest rows first.
    order_.resize(L_);
    std::iota(order_.begin(), order_.end(), 0);
    std::vector<double> mean_cap(L_, 0.0);
    for (int r = 0; r < L_; ++r)
      for (int t = 0; t < T_; ++t) mean_cap[r] += static_cast<double>(caps[t][r]);
    std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) { return mean_cap[a] < mean_cap[b]; });

    words_ = (T_ + 63) / 64;
    const int nv = static_cast<int>(values_.size());
    allow_.assign(static_cast<std::size_t>(L_) * nv * words_, 0);
    for (int k = 0; k < L_; ++k)
      for (int vi = 0; vi < nv; ++vi) {
        std::uint64_t* bits = allow_word(k, vi);
        for (int t = 0; t < T_; ++t)
          if (caps[t][order_[k]] >= values_[vi]) bits[t >> 6] |= std::uint64_t{1} << (t & 63);
      }

    // Rows k.. still to be assigned can absorb at most sum of their capped
    // values; sample t survives only if the assigned prefix takes the rest.
    residual_.resize(static_cast<std::size_t>(L_) + 1);
    for (int k = 1; k <= L_; ++k) {
      std::vector<std::pair<Score, int>> need;
      for (int t = 0; t < T_; ++t) {
        Score absorb = 0;
        bool dead = false;
        for (int kk = k; kk < L_; ++kk) {
          const Score cap = caps[t][order_[kk]];
          auto it = std::upper_bound(values_.begin(), values_.end(), cap);
          if (it == values_.begin()) {
            dead = true;
            break;
          }
          absorb += *std::prev(it);
        }
        if (!dead) need.emplace_back(total_ - absorb, t);
      }
      std::sort(need.begin(), need.end());
      auto& level = residual_[k];
      std::vector<std::uint64_t> acc(static_cast<std::size_t>(words_), 0);
      for (std::size_t i = 0; i < need.size(); ++i) {
        acc[need[i].second >> 6] |= std::uint64_t{1} << (need[i].second & 63);
        if (i + 1 == need.size() || need[i + 1].first != need[i].first) {
          level.thresholds.push_back(need[i].first);
          level.sets.insert(level.sets.end(), acc.begin(), acc.end());
        }
      }
    }
  }

  /// Raises the incumbent to `wins` with the given block if it is better.
  void offer(const std::vector<int>& block, long wins) {
    if (wins > best_) {
      best_ = wins;
      best_block_ = block;
    }
  }

  long count(const std::vector<int>& block) const {
    std::vector<Score> y(L_, 0);
    for (int r = 0; r < L_; ++r)
      for (int j = 0; j < L_; ++j) y[r] += block[static_cast<std::size_t>(r) * L_ + j] * slot_scores_[j];
    std::vector<std::uint64_t> bits(static_cast<std::size_t>(words_), ~std::uint64_t{0});
    for (int k = 0; k < L_; ++k) {
      auto it = std::lower_bound(values_.begin(), values_.end(), y[order_[k]]);
      const std::uint64_t* allow = allow_word(k, static_cast<int>(it - values_.begin()));
      for (int w = 0; w < words_; ++w) bits[w] &= allow[w];
    }
    return popcount(bits.data());
  }

  /// Runs the search; false when the deadline cut it short.
  bool run() {
    std::vector<std::uint64_t> all(static_cast<std::size_t>(words_), ~std::uint64_t{0});
    if (T_ % 64) all.back() = (std::uint64_t{1} << (T_ % 64)) - 1;
    y_.assign(L_, 0);
    scratch_.assign(static_cast<std::size_t>(L_) + 1, std::vector<std::uint64_t>());
    dfs(0, all.data(), 0);
    return !aborted_;
  }

  long best() const noexcept { return best_; }
  const std::vector<int>& best_block() const noexcept { return best_block_; }
  long nodes() const noexcept { return nodes_; }

 private:
  struct Residual {
    std::vector<Score> thresholds;
    std::vector<std::uint64_t> sets;  // one bitset per threshold, cumulative
  };

  void build_compositions() {
    std::vector<int> comp(L_, 0);
    std::map<Score, std::vector<int>> by_value;
    auto rec = [&](auto&& self, int j, int left) -> void {
      if (j == L_ - 1) {
        comp[j] = left;
        Score v = 0;
        for (int q = 0; q < L_; ++q) v += comp[q] * slot_scores_[q];
        auto& bucket = by_value[v];
        bucket.insert(bucket.end(), comp.begin(), comp.end());
        return;
      }
      for (int x = left; x >= 0; --x) {
        comp[j] = x;
        self(self, j + 1, left - x);
      }
    };
    rec(rec, 0, c_);
    for (auto& [v, flat] : by_value) {
      values_.push_back(v);
      compositions_.push_back(std::move(flat));
    }
  }

  std::uint64_t* allow_word(int k, int vi) {
    return allow_.data() + (static_cast<std::size_t>(k) * values_.size() + vi) * words_;
  }
  const std::uint64_t* allow_word(int k, int vi) const {
    return allow_.data() + (static_cast<std::size_t>(k) * values_.size() + vi) * words_;
  }

  const std::uint64_t* residual_set(int k, Score assigned) const {
    const auto& level = residual_[k];
    auto it = std::upper_bound(level.thresholds.begin(), level.thresholds.end(), assigned);
    if (it == level.thresholds.begin()) return nullptr;
    return level.sets.data() + static_cast<std::size_t>(it - level.thresholds.begin() - 1) * words_;
  }

  long popcount(const std::uint64_t* bits) const {
    long n = 0;
    for (int w = 0; w < words_; ++w) n += std::popcount(bits[w]);
    return n;
  }

  bool out_of_time() {
    if ((++nodes_ & 1023) == 0 && std::chrono::steady_clock::now() > deadline_) aborted_ = true;
    return aborted_;
  }

  void dfs(int k, const std::uint64_t* bits, Score assigned) {
    if (out_of_time()) return;
    const int row = order_[k];
    if (k == L_ - 1) {
      const Score v = total_ - assigned;
      auto it = std::lower_bound(values_.begin(), values_.end(), v);
      if (it == values_.end() || *it != v) return;
      const std::uint64_t* allow = allow_word(k, static_cast<int>(it - values_.begin()));
      long wins = 0;
      for (int w = 0; w < words_; ++w) wins += std::popcount(bits[w] & allow[w]);
      if (wins <= best_) return;
      y_[row] = v;
      std::vector<int> block;
      if (realize(block)) offer(block, wins);
      return;
    }

    const int nv = static_cast<int>(values_.size());
    const int remaining = L_ - k - 1;
    auto& buf = scratch_[k];
    buf.assign(static_cast<std::size_t>(nv) * words_, 0);
    std::vector<std::pair<long, int>> children;
    for (int vi = 0; vi < nv; ++vi) {
      const Score next = assigned + values_[vi];
      if (next < low_k_[k + 1] || next > high_k_[k + 1]) continue;
      if (total_ - next < remaining * values_.front() || total_ - next > remaining * values_.back()) continue;
      const std::uint64_t* residual = residual_set(k + 1, next);
      if (!residual) continue;
      const std::uint64_t* allow = allow_word(k, vi);
      std::uint64_t* out = buf.data() + static_cast<std::size_t>(vi) * words_;
      long wins = 0;
      for (int w = 0; w < words_; ++w) {
        out[w] = bits[w] & allow[w] & residual[w];
        wins += std::popcount(out[w]);
      }
      if (wins > best_) children.emplace_back(wins, vi);
    }
    std::stable_sort(children.begin(), children.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [wins, vi] : children) {
      if (wins <= best_) break;
      y_[row] = values_[vi];
      dfs(k + 1, buf.data() + static_cast<std::size_t>(vi) * words_, assigned + values_[vi]);
      if (aborted_) return;
    }
  }

  // Integral PSM block with row sums y_, column sums c, or false.
  bool realize(std::vector<int>& block) {
    std::vector<Score> sorted(y_.begin(), y_.end());
    std::sort(sorted.begin(), sorted.end());
    Score lo = 0, hi = 0;
    for (int k = 1; k <= L_; ++k) {
      lo += sorted[k - 1];
      hi += sorted[L_ - k];
      if (lo < low_k_[k] || hi > high_k_[k]) return false;
    }
    auto cached = realized_.find(y_);
    if (cached != realized_.end()) {
      if (cached->second.empty()) return false;
      block = cached->second;
      return true;
    }

    std::vector<const std::vector<int>*> options(L_);
    for (int r = 0; r < L_; ++r) {
      auto it = std::lower_bound(values_.begin(), values_.end(), y_[r]);
      options[r] = &compositions_[it - values_.begin()];
    }
    std::vector<int> rows(L_);
    std::iota(rows.begin(), rows.end(), 0);
    std::stable_sort(rows.begin(), rows.end(), [&](int a, int b) { return options[a]->size() < options[b]->size(); });

    std::vector<int> capacity(L_, c_);
    std::vector<int> chosen(L_, -1);
    std::set<std::pair<int, std::vector<int>>> failed;
    auto place = [&](auto&& self, int depth) -> bool {
      if (depth == L_) return true;
      if (failed.count({depth, capacity})) return false;
      const int r = rows[depth];
      const auto& flat = *options[r];
      for (std::size_t off = 0; off < flat.size(); off += L_) {
        bool fits = true;
        for (int j = 0; j < L_ && fits; ++j) fits = flat[off + j] <= capacity[j];
        if (!fits) continue;
        for (int j = 0; j < L_; ++j) capacity[j] -= flat[off + j];
        chosen[r] = static_cast<int>(off);
        if (self(self, depth + 1)) return true;
        for (int j = 0; j < L_; ++j) capacity[j] += flat[off + j];
      }
      failed.insert({depth, capacity});
      return false;
    };
    std::vector<int> result;
    if (place(place, 0)) {
      result.assign(static_cast<std::size_t>(L_) * L_, 0);
      for (int r = 0; r < L_; ++r)
        for (int j = 0; j < L_; ++j) result[static_cast<std::size_t>(r) * L_ + j] = (*options[r])[chosen[r] + j];
    }
    realized_.emplace(y_, result);
    if (result.empty()) return false;
    block = std::move(result);
    return true;
  }

  int m_, L_, c_;
  Candidate d_;
  int T_;
  std::chrono::steady_clock::time_point deadline_;
  std::vector<Score> slot_scores_;
  std::vector<Score> values_;                   // distinct achievable row totals, ascending
  std::vector<std::vector<int>> compositions_;  // per value: flat list of position-count vectors
  Score total_ = 0;
  std::vector<Score> low_k_, high_k_;
  std::vector<int> order_;
  int words_ = 0;
  std::vector<std::uint64_t> allow_;  // [k][value] -> samples whose cap admits the value
  std::vector<Residual> residual_;
  std::vector<std::vector<std::uint64_t>> scratch_;
  std::vector<Score> y_;
  std::map<std::vector<Score>, std::vector<int>> realized_;
  long best_ = -1;
  std::vector<int> best_block_;
  long nodes_ = 0;
  bool aborted_ = false;
};

inline std::vector<int> block_of(const StrategyPsm& x) {
  const int m = x.m();
  std::vector<int> block;
  block.reserve(static_cast<std::size_t>(m - 1) * (m - 1));
  for (Candidate a = 0; a < m; ++a) {
    if (a == x.d()) continue;
    for (int j = 1; j < m; ++j) block.push_back(x.matrix()(a, j));
  }
  return block;
}

}  // namespace detail

/// Strategy maximizing the number of samples on which d strictly wins.
/// `optimal` is false when the time budget ran out before the search closed;
/// the incumbent is returned in that case.
inline SolveResult solve_optimal(const SampleSet& samples, int c, Candidate d, const SolveOptions& options = {}) {
  if (samples.size() == 0) throw invalid_input("cannot solve over an empty sample set");
  detail::check_instance(samples, c, d);
  const auto start = std::chrono::steady_clock::now();
  const int m = samples.m();

  const auto pruned = prune(samples, c, d);
  std::vector<int> searched;
  long baseline = 0;
  if (options.use_pruning) {
    searched = pruned.contested;
    baseline = static_cast<long>(pruned.guaranteed.size());
  } else {
    searched.resize(static_cast<std::size_t>(samples.size()));
    std::iota(searched.begin(), searched.end(), 0);
  }

  auto deadline = std::chrono::steady_clock::time_point::max();
  if (options.budget_seconds < 1e9)
    deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                           std::chrono::duration<double>(options.budget_seconds));

  detail::AllocationSearch search(samples, searched, c, d, deadline);
  // Rotation strategies seed the incumbent.
  for (int step = 1; step < std::max(2, m - 1); ++step) {
    const auto block = detail::block_of(detail::rotation_strategy(m, c, d, step));
    search.offer(block, searched.empty() ? 0 : search.count(block));
  }
  bool complete = true;
  if (!searched.empty()) complete = search.run();

  auto strategy = detail::embed(search.best_block(), m, c, d);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto result = detail::finish(samples, std::move(strategy), baseline + search.best(), complete, seconds);
  result.impossible = static_cast<int>(pruned.impossible.size());
  result.guaranteed = static_cast<int>(pruned.guaranteed.size());
  result.contested = static_cast<int>(pruned.contested.size());
  result.nodes = search.nodes();
  return result;
}

/// All normal-form strategies for m candidates and c manipulators, in
/// lexicographic order of their (m-1)x(m-1) blocks. Guarded to m <= 4, c <= 4.
inline std::vector<StrategyPsm> enumerate_strategies(int m, int c, Candidate d) {
  if (m < 2 || m > 4 || c < 1 || c > 4) throw invalid_input("exhaustive enumeration is limited to m <= 4, c <= 4");
  if (d < 0 || d >= m) throw invalid_input("desired candidate out of range");
  const int L = m - 1;
  std::vector<int> block(static_cast<std::size_t>(L) * L, 0);
  std::vector<int> row_left(L, c), col_left(L, c);
  std::vector<StrategyPsm> out;
  auto rec = [&](auto&& self, int cell) -> void {
    if (cell == L * L) {
      out.push_back(detail::embed(block, m, c, d));
      return;
    }
    const int r = cell / L, j = cell % L;
    if (j == L - 1) {
      // Last cell of a row is forced.
      const int x = row_left[r];
      if (x > col_left[j]) return;
      if (r == L - 1 && x != col_left[j]) return;
      block[cell] = x;
      row_left[r] -= x;
      col_left[j] -= x;
      self(self, cell + 1);
      row_left[r] += x;
      col_left[j] += x;
      return;
    }
    const int hi = std::min(row_left[r], col_left[j]);
    const int lo = r == L - 1 ? col_left[j] : 0;  // last row must exhaust its column
    for (int x = lo; x <= hi; ++x) {
      block[cell] = x;
      row_left[r] -= x;
      col_left[j] -= x;
      self(self, cell + 1);
      row_left[r] += x;
      col_left[j] += x;
    }
  };
  rec(rec, 0);
  return out;
}

/// Exhaustive oracle: evaluates every normal-form strategy directly.
inline SolveResult brute_force_optimal(const SampleSet& samples, int c, Candidate d) {
  if (samples.size() == 0) throw invalid_input("cannot solve over an empty sample set");
  detail::check_instance(samples, c, d);
  const auto start = std::chrono::steady_clock::now();
  const auto all = enumerate_strategies(samples.m(), c, d);
  std::size_t best = 0;
  long best_wins = -1;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const long wins = count_wins(samples, all[k]);
    if (wins > best_wins) {
      best_wins = wins;
      best = k;
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto result = detail::finish(samples, all[best], best_wins, true, seconds);
  const auto pruned = prune(samples, c, d);
  result.impossible = static_cast<int>(pruned.impossible.size());
  result.guaranteed = static_cast<int>(pruned.guaranteed.size());
  result.contested = static_cast<int>(pruned.contested.size());
  result.nodes = static_cast<long>(all.size());
  return result;
}

}  // namespace bvm
