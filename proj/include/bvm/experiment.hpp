#pragma once

// Seeded experiment pipelines behind the bvm command-line tool:
// sample beliefs -> prune and solve -> recover ballots -> evaluate on fresh
// profiles, over a grid of (phi, d, n) points, emitted as CSV.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "bvm/distributions.hpp"
#include "bvm/errors.hpp"
#include "bvm/io.hpp"
#include "bvm/matching.hpp"
#include "bvm/optimizer.hpp"
#include "bvm/rng.hpp"
#include "bvm/voting.hpp"
#include "bvm/welfare.hpp"

namespace bvm {

struct ExperimentConfig {
  std::string rule = "borda";
  std::string dist;       // belief used to compute the strategy
  std::string eval_dist;  // profiles the strategy is tested on; empty = dist
  std::optional<int> m;
  int n = 0;
  int c = 0;
  std::string d = "0";  // "<index>" or "rank:<k>"
  int tsolve = 500;
  long trials = 1000;
  std::optional<std::uint64_t> seed;
  double budget_secs = 600.0;
  std::vector<int> sweep_n;
  std::vector<double> sweep_phi;
  std::vector<std::string> sweep_d;
  TruncatedPolicy ballot_policy = TruncatedPolicy::drop;
  int threads = 1;
  bool timing = false;  // timings make output non-reproducible, so off by default
};

namespace detail {

inline std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 6);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("NA");
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

template <class T>
T parse_value(const std::string& key, std::string_view text, const char* what) {
  T v{};
  if (!parse_number(text, v)) throw parse_error("key '" + key + "': expected " + what + ", got '" + std::string(text) + "'");
  return v;
}

inline int positive_int(const std::string& key, std::string_view text) {
  const int v = parse_value<int>(key, text, "a positive integer");
  if (v < 1) throw parse_error("key '" + key + "': must be positive");
  return v;
}

inline double parse_real(const std::string& key, std::string_view text) {
  // from_chars for double ignores the global locale.
  return parse_value<double>(key, text, "a number");
}

template <class T, class F>
std::vector<T> parse_list(const std::string& key, std::string_view text, F one) {
  std::vector<T> out;
  for (auto tok : split(text, ',')) out.push_back(one(key, trim(tok)));
  if (out.empty()) throw parse_error("key '" + key + "': empty list");
  return out;
}

}  // namespace detail

/// Applies one key=value setting. Keys match the long command-line flags.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, std::string_view raw) {
  const auto value = detail::trim(raw);
  const std::string v(value);
  if (key == "rule") cfg.rule = v;
  else if (key == "dist") cfg.dist = v;
  else if (key == "eval-dist") cfg.eval_dist = v;
  else if (key == "m") cfg.m = detail::positive_int(key, value);
  else if (key == "n") cfg.n = detail::positive_int(key, value);
  else if (key == "c") cfg.c = detail::positive_int(key, value);
  else if (key == "d") cfg.d = v;
  else if (key == "tsolve") cfg.tsolve = detail::positive_int(key, value);
  else if (key == "trials") cfg.trials = detail::positive_int(key, value);
  else if (key == "seed") cfg.seed = detail::parse_value<std::uint64_t>(key, value, "an unsigned 64-bit integer");
  else if (key == "budget-secs") {
    cfg.budget_secs = detail::parse_real(key, value);
    if (!(cfg.budget_secs > 0)) throw parse_error("key 'budget-secs': must be positive");
  } else if (key == "sweep-n")
    cfg.sweep_n = detail::parse_list<int>(key, value, detail::positive_int);
  else if (key == "sweep-phi")
    cfg.sweep_phi = detail::parse_list<double>(key, value, detail::parse_real);
  else if (key == "sweep-d")
    cfg.sweep_d = detail::parse_list<std::string>(key, value, [](const std::string&, std::string_view t) { return std::string(t); });
  else if (key == "ballot-policy") {
    if (v == "drop") cfg.ballot_policy = TruncatedPolicy::drop;
    else if (v == "complete") cfg.ballot_policy = TruncatedPolicy::uniform_completion;
    else throw parse_error("key 'ballot-policy': expected drop or complete");
  } else if (key == "threads")
    cfg.threads = detail::positive_int(key, value);
  else if (key == "timing") {
    if (v == "true" || v == "1") cfg.timing = true;
    else if (v == "false" || v == "0") cfg.timing = false;
    else throw parse_error("key 'timing': expected true or false");
  } else
    throw parse_error("unknown key '" + key + "'");
}

/// Flat key=value file; '#' starts a comment line.
inline void parse_config(std::istream& in, ExperimentConfig& cfg, const std::string& source = "config") {
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw parse_error(source + ":" + std::to_string(line_no) + ": expected key=value");
    try {
      apply_setting(cfg, std::string(detail::trim(line.substr(0, eq))), line.substr(eq + 1));
    } catch (const parse_error& e) {
      throw parse_error(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline void load_config(const std::string& path, ExperimentConfig& cfg) {
  auto in = detail::open_input(path);
  parse_config(in, cfg, path);
}

/// plurality | borda | kapproval:K | alpha:a1,...,am
inline ScoringRule make_rule(const std::string& spec, int m) {
  if (spec == "plurality") return ScoringRule::plurality(m);
  if (spec == "borda") return ScoringRule::borda(m);
  if (spec.starts_with("kapproval:")) return ScoringRule::k_approval(m, detail::positive_int("rule", std::string_view(spec).substr(10)));
  if (spec.starts_with("alpha:")) {
    std::vector<Score> alpha;
    for (auto tok : detail::split(std::string_view(spec).substr(6), ','))
      alpha.push_back(detail::parse_value<Score>("rule", tok, "an integer score"));
    if (static_cast<int>(alpha.size()) != m) throw parse_error("key 'rule': score vector length differs from m");
    return ScoringRule(std::move(alpha));
  }
  throw parse_error("key 'rule': unknown rule '" + spec + "'");
}

/// ic | iac | mallows:PHI[:SIGMA] | mixture:FILE | ballots:FILE | point:FILE.
/// `phi` overrides a Mallows dispersion (sweeps).
inline DistributionSpec make_distribution(const std::string& spec, std::optional<int> m, std::optional<double> phi,
                                          TruncatedPolicy policy, Rng& rng) {
  const auto need_m = [&]() {
    if (!m) throw parse_error("key 'm': required for distribution '" + spec + "'");
    return *m;
  };
  if (spec == "ic") return ImpartialCulture{need_m()};
  if (spec == "iac") return ImpartialAnonymousCulture{need_m()};
  if (spec.starts_with("mallows:")) {
    const auto parts = detail::split(std::string_view(spec).substr(8), ':');
    double dispersion = phi ? *phi : detail::parse_real("dist", parts[0]);
    Ranking sigma;
    if (parts.size() > 1) {
      std::vector<Candidate> order;
      for (auto tok : detail::split(parts[1], ',')) order.push_back(detail::parse_value<int>("dist", tok, "a candidate index"));
      sigma = Ranking(std::move(order));
      if (m && sigma.size() != *m) throw parse_error("key 'dist': reference ranking length differs from m");
    } else {
      sigma = Ranking::identity(need_m());
    }
    return MallowsModel(std::move(sigma), dispersion);
  }
  if (phi) throw parse_error("key 'sweep-phi': only Mallows beliefs have a dispersion");
  std::optional<DistributionSpec> out;
  if (spec.starts_with("mixture:")) out = load_mixture(spec.substr(8));
  else if (spec.starts_with("ballots:")) out = load_ballots(spec.substr(8), policy, &rng);
  else if (spec.starts_with("point:")) out = PointMass{load_profile(spec.substr(6))};
  else throw parse_error("key 'dist': unknown distribution '" + spec + "'");
  if (m && candidate_count(*out) != *m) throw parse_error("key 'm': differs from the candidate count in '" + spec + "'");
  return *out;
}

inline Candidate resolve_candidate(const std::string& spec, const DistributionSpec& belief, Rng& rng) {
  const int m = candidate_count(belief);
  if (spec.starts_with("rank:"))
    return candidate_of_expected_rank(belief, detail::positive_int("d", std::string_view(spec).substr(5)), rng);
  const int d = detail::parse_value<int>("d", spec, "a candidate index or rank:K");
  if (d < 0 || d >= m) throw parse_error("key 'd': candidate out of range");
  return d;
}

/// One grid point of an experiment.
struct GridPoint {
  std::optional<double> phi;
  std::string d;
  int n = 0;
};

struct PointResult {
  GridPoint point;
  std::optional<Candidate> d;
  std::optional<SolveResult> solve;
  std::optional<RegretReport> evaluation;
  std::string error;
};

namespace detail {

// Sub-stream ids per grid point; solving and evaluation never share a stream.
enum Stream : std::uint64_t { solve_stream = 0, evaluate_stream = 1, rank_stream = 2, ballot_stream = 3, sample_stream = 4 };

inline Rng point_stream(const ExperimentConfig& cfg, std::size_t index, Stream s) {
  return make_stream(*cfg.seed, static_cast<std::uint64_t>(index) * 8 + s);
}

inline void check_config(const ExperimentConfig& cfg) {
  if (!cfg.seed) throw parse_error("key 'seed': required");
  if (cfg.dist.empty()) throw parse_error("key 'dist': required");
}

struct Setting {
  DistributionSpec belief;
  DistributionSpec evaluation;
  ScoringRule rule;
  Candidate d;
};

inline Setting resolve_point(const ExperimentConfig& cfg, const GridPoint& point, std::size_t index) {
  auto ballots = point_stream(cfg, 0, ballot_stream);
  auto belief = make_distribution(cfg.dist, cfg.m, point.phi, cfg.ballot_policy, ballots);
  auto evaluation = cfg.eval_dist.empty() ? belief : make_distribution(cfg.eval_dist, cfg.m, point.phi, cfg.ballot_policy, ballots);
  if (candidate_count(evaluation) != candidate_count(belief))
    throw parse_error("key 'eval-dist': candidate count differs from the belief");
  auto rule = make_rule(cfg.rule, candidate_count(belief));
  auto rank_rng = point_stream(cfg, index, rank_stream);
  const Candidate d = resolve_candidate(point.d, belief, rank_rng);
  return {std::move(belief), std::move(evaluation), std::move(rule), d};
}

inline SolveResult solve_point(const ExperimentConfig& cfg, const Setting& s, int n, std::size_t index) {
  if (cfg.c < 1) throw parse_error("key 'c': required");
  auto rng = point_stream(cfg, index, solve_stream);
  std::vector<Profile> profiles;
  profiles.reserve(static_cast<std::size_t>(cfg.tsolve));
  for (int t = 0; t < cfg.tsolve; ++t) profiles.push_back(sample_profile(s.belief, n, rng));
  const auto samples = summarize(profiles, s.rule);
  SolveOptions options;
  options.budget_seconds = cfg.budget_secs;
  return solve_optimal(samples, cfg.c, s.d, options);
}

inline RegretReport evaluate_point(const ExperimentConfig& cfg, const Setting& s, int n, const StrategyPsm& x,
                                   std::size_t index) {
  auto rng = point_stream(cfg, index, evaluate_stream);
  return expected_regret(s.evaluation, n, x, s.rule, cfg.trials, rng);
}

inline int effective_n(const ExperimentConfig& cfg, const GridPoint& p) {
  const int n = p.n > 0 ? p.n : cfg.n;
  if (n < 1) throw parse_error("key 'n': required");
  return n;
}

}  // namespace detail

/// Grid points in output order: phi outermost, then d, then n.
inline std::vector<GridPoint> sweep_grid(const ExperimentConfig& cfg) {
  std::vector<std::optional<double>> phis;
  for (double p : cfg.sweep_phi) phis.emplace_back(p);
  if (phis.empty()) phis.emplace_back(std::nullopt);
  auto ds = cfg.sweep_d.empty() ? std::vector<std::string>{cfg.d} : cfg.sweep_d;
  auto ns = cfg.sweep_n.empty() ? std::vector<int>{cfg.n} : cfg.sweep_n;
  std::vector<GridPoint> grid;
  for (const auto& phi : phis)
    for (const auto& d : ds)
      for (int n : ns) grid.push_back({phi, d, n});
  return grid;
}

/// Solve then evaluate one grid point; failures are captured in `error`.
inline PointResult run_point(const ExperimentConfig& cfg, const GridPoint& point, std::size_t index) {
  PointResult r;
  r.point = point;
  try {
    detail::check_config(cfg);
    const auto setting = detail::resolve_point(cfg, point, index);
    r.d = setting.d;
    const int n = detail::effective_n(cfg, point);
    r.solve = detail::solve_point(cfg, setting, n, index);
    r.evaluation = detail::evaluate_point(cfg, setting, n, r.solve->strategy, index);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

inline std::vector<PointResult> run_grid(const ExperimentConfig& cfg) {
  const auto grid = sweep_grid(cfg);
  std::vector<PointResult> results(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < grid.size(); i = next++) results[i] = run_point(cfg, grid[i], i);
  };
  const int threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(grid.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return results;
}

inline const char* sweep_header() {
  return "phi,d,n,predicted_prob,realized_prob,expected_regret,normalized_regret,bound_general,solve_time,optimal_flag,"
         "error";
}

inline void write_sweep_row(std::ostream& out, const PointResult& r, bool timing) {
  using detail::format_number;
  const std::string na = "NA";
  out << (r.point.phi ? format_number(*r.point.phi) : na) << ',' << (r.d ? std::to_string(*r.d) : detail::csv_field(r.point.d))
      << ',' << r.point.n << ',';
  if (r.solve && r.evaluation) {
    const auto& s = *r.solve;
    const auto& e = *r.evaluation;
    out << format_number(s.manipulation_probability) << ',' << format_number(e.manipulation_probability()) << ','
        << format_number(e.expected_regret) << ',' << format_number(e.normalized_expected_regret) << ','
        << format_number(e.bound_general) << ',' << (timing ? format_number(s.solve_time) : na) << ','
        << (s.optimal ? 1 : 0) << ',';
  } else {
    out << "NA,NA,NA,NA,NA,NA,NA,";
  }
  out << detail::csv_field(r.error) << '\n';
}

/// Runs the whole grid and writes one CSV row per point. Returns true iff
/// every point completed.
inline bool run_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  detail::check_config(cfg);
  auto grid_cfg = cfg;
  if (grid_cfg.sweep_n.empty() && grid_cfg.n < 1) throw parse_error("key 'n': required");
  const auto results = run_grid(grid_cfg);
  out << sweep_header() << '\n';
  bool ok = true;
  for (const auto& r : results) {
    write_sweep_row(out, r, cfg.timing);
    ok = ok && r.error.empty();
  }
  return ok;
}

struct SolveOutput {
  Candidate d;
  int n;
  SolveResult result;
  Profile ballots;
};

/// First grid point only: sample, prune, solve and recover the ballots.
inline SolveOutput run_solve(const ExperimentConfig& cfg) {
  detail::check_config(cfg);
  const GridPoint point{std::nullopt, cfg.d, cfg.n};
  const auto setting = detail::resolve_point(cfg, point, 0);
  const int n = detail::effective_n(cfg, point);
  auto result = detail::solve_point(cfg, setting, n, 0);
  auto ballots = recover_votes(result.strategy);
  return {setting.d, n, std::move(result), std::move(ballots)};
}

inline void write_solve(std::ostream& out, const ExperimentConfig& cfg, const SolveOutput& s) {
  using detail::format_number;
  const auto& r = s.result;
  out << "d,n,c,T,impossible,guaranteed,contested,objective,predicted_win_prob,predicted_prob,solve_time,optimal_flag\n";
  out << s.d << ',' << s.n << ',' << r.strategy.c() << ',' << cfg.tsolve << ',' << r.impossible << ',' << r.guaranteed
      << ',' << r.contested << ',' << r.objective << ',' << format_number(r.win_probability) << ','
      << format_number(r.manipulation_probability) << ',' << (cfg.timing ? format_number(r.solve_time) : "NA") << ','
      << (r.optimal ? 1 : 0) << '\n';
  std::ostringstream psm, ballots;
  write_psm(psm, r.strategy.matrix());
  write_ballots(ballots, s.ballots);
  out << "# psm\n";
  std::istringstream lines(psm.str() + "# ballots\n" + ballots.str());
  for (std::string line; std::getline(lines, line);) out << (line.starts_with("# ") ? "" : "# ") << line << '\n';
}

/// Tests a fixed strategy on fresh profiles from the evaluation distribution.
inline RegretReport run_evaluate(const ExperimentConfig& cfg, const StrategyPsm& strategy) {
  detail::check_config(cfg);
  const GridPoint point{std::nullopt, std::to_string(strategy.d()), cfg.n};
  const auto setting = detail::resolve_point(cfg, point, 0);
  if (setting.rule.m() != strategy.m()) throw invalid_input("strategy PSM size differs from the candidate count");
  return detail::evaluate_point(cfg, setting, detail::effective_n(cfg, point), strategy, 0);
}

inline void write_evaluate(std::ostream& out, const ExperimentConfig& cfg, const StrategyPsm& x, const RegretReport& r) {
  using detail::format_number;
  out << "d,n,c,trials,realized_prob,p_flip_to_d,p_flip_to_other,expected_regret,normalized_regret,regret_std_error,"
         "bound_general,bound_kapproval\n";
  out << x.d() << ',' << cfg.n << ',' << x.c() << ',' << r.trials << ',' << format_number(r.manipulation_probability())
      << ',' << format_number(r.p_flip_to_d) << ',' << format_number(r.p_flip_to_other) << ','
      << format_number(r.expected_regret) << ',' << format_number(r.normalized_expected_regret) << ','
      << format_number(r.regret_std_error) << ',' << format_number(r.bound_general) << ','
      << (r.bound_kapproval ? format_number(*r.bound_kapproval) : "NA") << '\n';
}

/// Normal-form strategy from a PSM file: d is the row holding every first place.
inline StrategyPsm strategy_from_psm(const Psm& x) {
  const int m = x.m();
  if (m < 2) throw invalid_input("PSM needs at least two candidates");
  const int c = static_cast<int>(x.row_sum(0));
  if (!validate_psm(x, c)) throw invalid_input("not a valid PSM: row and column sums must all equal c");
  for (Candidate a = 0; a < m; ++a)
    if (x(a, 0) == c) return StrategyPsm(x, c, a);
  throw invalid_input("PSM does not place a single candidate first on every ballot");
}

/// `count` profiles of n voters, each as a ballot-file block.
inline void run_sample(const ExperimentConfig& cfg, int count, std::ostream& out) {
  detail::check_config(cfg);
  auto ballots = detail::point_stream(cfg, 0, detail::ballot_stream);
  const auto spec = make_distribution(cfg.dist, cfg.m, std::nullopt, cfg.ballot_policy, ballots);
  if (cfg.n < 1) throw parse_error("key 'n': required");
  auto rng = detail::point_stream(cfg, 0, detail::sample_stream);
  out << "m=" << candidate_count(spec) << '\n';
  for (int k = 0; k < count; ++k) {
    out << "# profile " << k << '\n';
    write_ballots(out, sample_profile(spec, cfg.n, rng), false);
  }
}

}  // namespace bvm
