#pragma once

// Text formats.
//
// Ballot file:
//   # comment
//   m=<candidates>
//   <count>: <c1>,<c2>,...,<ck>      (0-based indices, most preferred first)
// Ballots listing fewer than m candidates are truncated (top-k) ballots.
//
// Mixture file: one component per line, "<weight> <phi> <c1>,<c2>,...,<cm>".
//
// PSM file: m lines of m whitespace-separated non-negative integers.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bvm/distributions.hpp"
#include "bvm/errors.hpp"
#include "bvm/rng.hpp"
#include "bvm/voting.hpp"

namespace bvm {

enum class TruncatedPolicy { drop, uniform_completion };

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

/// One ballot record from a ballot file.
struct BallotRecord {
  int count;
  std::vector<Candidate> prefix;
};

struct BallotFile {
  int m = 0;
  std::vector<BallotRecord> records;
};

inline BallotFile parse_ballot_file(std::istream& in) {
  BallotFile file;
  bool have_m = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.starts_with("m=")) {
      if (have_m) throw parse_error("duplicate candidate-count header", line_no);
      if (!detail::parse_number(line.substr(2), file.m) || file.m < 2)
        throw parse_error("bad candidate-count header '" + std::string(line) + "'", line_no);
      have_m = true;
      continue;
    }
    if (!have_m) throw parse_error("ballot before the m=<int> header", line_no);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw parse_error("expected '<count>: <ranking>'", line_no);
    BallotRecord rec{};
    if (!detail::parse_number(line.substr(0, colon), rec.count) || rec.count < 0)
      throw parse_error("bad ballot count", line_no);
    std::vector<bool> seen(static_cast<std::size_t>(file.m), false);
    for (auto tok : detail::split(line.substr(colon + 1), ',')) {
      Candidate a = -1;
      if (!detail::parse_number(tok, a)) throw parse_error("bad candidate index '" + std::string(detail::trim(tok)) + "'", line_no);
      if (a < 0 || a >= file.m) throw parse_error("unknown candidate " + std::to_string(a), line_no);
      if (seen[a]) throw parse_error("candidate " + std::to_string(a) + " listed twice", line_no);
      seen[a] = true;
      rec.prefix.push_back(a);
    }
    file.records.push_back(std::move(rec));
  }
  // Any non-comment line before a header already threw, so this file is blank.
  if (!have_m) throw parse_error("empty pool");
  return file;
}

/// Complete rankings from a ballot file. Truncated ballots are dropped or have
/// their unranked tail ordered uniformly at random (which needs `rng`).
inline EmpiricalPool parse_ballots(std::istream& in, TruncatedPolicy policy = TruncatedPolicy::drop,
                                   Rng* rng = nullptr) {
  const auto file = parse_ballot_file(in);
  if (policy == TruncatedPolicy::uniform_completion && rng == nullptr)
    throw invalid_input("uniform completion of truncated ballots needs a generator");
  std::vector<Ranking> ballots;
  for (const auto& rec : file.records) {
    const bool complete = static_cast<int>(rec.prefix.size()) == file.m;
    if (complete) {
      for (int k = 0; k < rec.count; ++k) ballots.emplace_back(rec.prefix);
      continue;
    }
    if (policy == TruncatedPolicy::drop) continue;
    std::vector<bool> listed(static_cast<std::size_t>(file.m), false);
    for (Candidate a : rec.prefix) listed[a] = true;
    std::vector<Candidate> tail;
    for (Candidate a = 0; a < file.m; ++a)
      if (!listed[a]) tail.push_back(a);
    for (int k = 0; k < rec.count; ++k) {
      std::shuffle(tail.begin(), tail.end(), *rng);
      auto order = rec.prefix;
      order.insert(order.end(), tail.begin(), tail.end());
      ballots.emplace_back(std::move(order));
    }
  }
  if (ballots.empty()) throw parse_error("empty pool");
  return EmpiricalPool(file.m, std::move(ballots));
}

inline EmpiricalPool load_ballots(const std::string& path, TruncatedPolicy policy = TruncatedPolicy::drop,
                                  Rng* rng = nullptr) {
  auto in = detail::open_input(path);
  return parse_ballots(in, policy, rng);
}

/// A fixed profile stored in ballot-file form; every ballot must be complete.
inline Profile load_profile(const std::string& path) {
  auto in = detail::open_input(path);
  const auto file = parse_ballot_file(in);
  Profile p(file.m);
  for (const auto& rec : file.records) {
    if (static_cast<int>(rec.prefix.size()) != file.m) throw parse_error("profile files need complete ballots");
    for (int k = 0; k < rec.count; ++k) p.add(Ranking(rec.prefix));
  }
  if (p.empty()) throw parse_error("empty profile");
  return p;
}

/// Writes `profile` in ballot-file form, grouping consecutive identical votes.
inline void write_ballots(std::ostream& out, const Profile& profile, bool header = true) {
  if (header) out << "m=" << profile.m() << '\n';
  const auto& votes = profile.votes();
  for (std::size_t i = 0; i < votes.size();) {
    std::size_t j = i;
    while (j < votes.size() && votes[j] == votes[i]) ++j;
    out << (j - i) << ": " << votes[i].to_string() << '\n';
    i = j;
  }
}

inline MallowsMixture parse_mixture(std::istream& in) {
  std::vector<MallowsModel> components;
  std::vector<double> weights;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields{std::string(line)};
    double weight = 0.0, phi = 0.0;
    std::string sigma;
    if (!(fields >> weight >> phi >> sigma)) throw parse_error("expected '<weight> <phi> <ranking>'", line_no);
    std::vector<Candidate> order;
    for (auto tok : detail::split(sigma, ',')) {
      Candidate a = -1;
      if (!detail::parse_number(tok, a)) throw parse_error("bad candidate index in reference ranking", line_no);
      order.push_back(a);
    }
    try {
      components.emplace_back(Ranking(std::move(order)), phi);
    } catch (const invalid_input& e) {
      throw parse_error(e.what(), line_no);
    }
    weights.push_back(weight);
  }
  try {
    return MallowsMixture(std::move(components), std::move(weights));
  } catch (const invalid_input& e) {
    throw parse_error(e.what());
  }
}

inline MallowsMixture load_mixture(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_mixture(in);
}

inline Psm parse_psm(std::istream& in) {
  std::vector<std::vector<int>> rows;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields{std::string(line)};
    std::vector<int> row;
    std::string tok;
    while (fields >> tok) {
      int v = 0;
      if (!detail::parse_number(std::string_view(tok), v) || v < 0)
        throw parse_error("bad PSM entry '" + tok + "'", line_no);
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw parse_error("ragged PSM row", line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw parse_error("empty PSM file");
  const int m = static_cast<int>(rows.size());
  if (static_cast<int>(rows.front().size()) != m) throw parse_error("PSM is not square");
  std::vector<int> cells;
  for (const auto& r : rows) cells.insert(cells.end(), r.begin(), r.end());
  return Psm(m, std::move(cells));
}

inline Psm load_psm(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_psm(in);
}

inline void write_psm(std::ostream& out, const Psm& x) {
  for (int i = 0; i < x.m(); ++i) {
    for (int j = 0; j < x.m(); ++j) out << (j ? " " : "") << x(i, j);
    out << '\n';
  }
}

}  // namespace bvm
