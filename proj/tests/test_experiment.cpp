#include <catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>

#include "bvm/experiment.hpp"
#include "bvm/strategies.hpp"

using namespace bvm;

namespace {

const std::string kData = BVM_TEST_DATA;

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.rule = "borda";
  cfg.dist = "mallows:0.8";
  cfg.m = 4;
  cfg.n = 15;
  cfg.c = 3;
  cfg.d = "1";
  cfg.tsolve = 40;
  cfg.trials = 100;
  cfg.seed = 11;
  return cfg;
}

std::string sweep_csv(const ExperimentConfig& cfg) {
  std::ostringstream out;
  run_sweep(cfg, out);
  return out.str();
}

}  // namespace

TEST_CASE("config parsing") {
  ExperimentConfig cfg;
  std::istringstream in("# comment\nrule = kapproval:2\nseed=42\nsweep-n=100, 200\nsweep-phi=0.6,1\nsweep-d=rank:1,3\n"
                        "ballot-policy=complete\ntiming=true\n");
  parse_config(in, cfg);
  CHECK(cfg.rule == "kapproval:2");
  CHECK(cfg.seed == 42u);
  CHECK(cfg.sweep_n == std::vector<int>{100, 200});
  CHECK(cfg.sweep_phi == std::vector<double>{0.6, 1.0});
  CHECK(cfg.sweep_d == std::vector<std::string>{"rank:1", "3"});
  CHECK(cfg.ballot_policy == TruncatedPolicy::uniform_completion);
  CHECK(cfg.timing);

  ExperimentConfig file_cfg;
  load_config(kData + "/sweep.cfg", file_cfg);
  CHECK(file_cfg.m == 5);
  CHECK(file_cfg.d == "rank:2");
}

TEST_CASE("config errors name the source line") {
  const auto message = [](const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    try {
      parse_config(in, cfg, "exp.cfg");
    } catch (const parse_error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("seed=1\nn=abc\n").starts_with("exp.cfg:2: key 'n'"));
  CHECK(message("colour=blue\n").find("unknown key 'colour'") != std::string::npos);
  CHECK(message("c=0\n").find("must be positive") != std::string::npos);
  CHECK(message("just text\n").starts_with("exp.cfg:1:"));
  CHECK(message("ballot-policy=keep\n").find("drop or complete") != std::string::npos);
}

TEST_CASE("rules and distributions from text") {
  CHECK(std::ranges::equal(make_rule("borda", 4).alpha(), std::vector<Score>{3, 2, 1, 0}));
  CHECK(make_rule("kapproval:2", 4).approval_k() == 2);
  CHECK(std::ranges::equal(make_rule("alpha:5,2,0", 3).alpha(), std::vector<Score>{5, 2, 0}));
  CHECK_THROWS_AS(make_rule("alpha:5,2", 3), parse_error);
  CHECK_THROWS_AS(make_rule("copeland", 3), parse_error);

  Rng rng(1);
  const auto none = TruncatedPolicy::drop;
  CHECK(std::holds_alternative<ImpartialCulture>(make_distribution("ic", 4, std::nullopt, none, rng)));
  CHECK_THROWS_AS(make_distribution("ic", std::nullopt, std::nullopt, none, rng), parse_error);
  const auto mallows = make_distribution("mallows:0.5:2,0,1", std::nullopt, std::nullopt, none, rng);
  CHECK(std::get<MallowsModel>(mallows).reference() == Ranking({2, 0, 1}));
  CHECK(std::get<MallowsModel>(make_distribution("mallows:0.5", 3, 0.9, none, rng)).phi() == 0.9);
  CHECK(candidate_count(make_distribution("mixture:" + kData + "/mixture6.txt", 6, std::nullopt, none, rng)) == 6);
  CHECK_THROWS_AS(make_distribution("mixture:" + kData + "/mixture6.txt", 5, std::nullopt, none, rng), parse_error);
  CHECK(std::get<PointMass>(make_distribution("point:" + kData + "/point3.txt", std::nullopt, std::nullopt, none, rng))
            .profile.size() == 4);
  CHECK_THROWS_AS(make_distribution("ballots:/nonexistent/file", 3, std::nullopt, none, rng), parse_error);

  const DistributionSpec belief = MallowsModel(Ranking({3, 1, 0, 2}), 0.3);
  CHECK(resolve_candidate("rank:1", belief, rng) == 3);
  CHECK(resolve_candidate("2", belief, rng) == 2);
  CHECK_THROWS_AS(resolve_candidate("7", belief, rng), parse_error);
}

TEST_CASE("sweep grid order") {
  auto cfg = small_config();
  cfg.sweep_phi = {0.5, 0.9};
  cfg.sweep_d = {"0", "rank:2"};
  cfg.sweep_n = {10, 20, 30};
  const auto grid = sweep_grid(cfg);
  REQUIRE(grid.size() == 12);
  CHECK(grid[0].phi == 0.5);
  CHECK(grid[0].d == "0");
  CHECK(grid[2].n == 30);
  CHECK(grid[3].d == "rank:2");
  CHECK(grid[6].phi == 0.9);
}

TEST_CASE("sweep output is reproducible and independent of thread count") {
  auto cfg = small_config();
  cfg.sweep_phi = {0.6, 1.0};
  cfg.sweep_n = {10, 20};
  cfg.threads = 1;
  const auto first = sweep_csv(cfg);
  CHECK(first == sweep_csv(cfg));
  cfg.threads = 3;
  CHECK(first == sweep_csv(cfg));
  CHECK(first.starts_with(std::string(sweep_header()) + "\n"));
  CHECK(std::count(first.begin(), first.end(), '\n') == 5);

  cfg.seed = 12;
  CHECK(first != sweep_csv(cfg));
}

TEST_CASE("solve sample size does not perturb evaluation draws") {
  auto cfg = small_config();
  const auto strategy = balanced_strategy(4, 2, 3, 1);
  const auto a = run_evaluate(cfg, strategy);
  cfg.tsolve = 99;
  const auto b = run_evaluate(cfg, strategy);
  CHECK(a.expected_regret == b.expected_regret);
  CHECK(a.p_flip_to_d == b.p_flip_to_d);
}

TEST_CASE("a failing grid point is reported in its row") {
  auto cfg = small_config();
  cfg.sweep_d = {"1", "9"};
  std::ostringstream out;
  CHECK_FALSE(run_sweep(cfg, out));
  const auto csv = out.str();
  CHECK(csv.find("candidate out of range") != std::string::npos);
  CHECK(csv.find("NA,NA,NA,NA,NA,NA,NA") != std::string::npos);
}

TEST_CASE("missing required settings") {
  auto cfg = small_config();
  cfg.seed.reset();
  std::ostringstream out;
  CHECK_THROWS_AS(run_sweep(cfg, out), parse_error);
  cfg = small_config();
  cfg.dist.clear();
  CHECK_THROWS_AS(run_solve(cfg), parse_error);
}

TEST_CASE("point-mass solve is all or nothing") {
  ExperimentConfig cfg;
  cfg.dist = "point:" + kData + "/point3.txt";
  cfg.n = 4;
  cfg.c = 2;
  cfg.tsolve = 5;
  cfg.seed = 3;
  for (Candidate d = 0; d < 3; ++d) {
    cfg.d = std::to_string(d);
    const auto s = run_solve(cfg);
    CHECK((s.result.win_probability == 0.0 || s.result.win_probability == 1.0));
    CHECK(psm_of_votes(s.ballots) == s.result.strategy.matrix());
  }
  // Sincere Borda scores are (5,3,4). One manipulator can lift a2 past a0,
  // but a1 at best ties.
  cfg.c = 1;
  cfg.d = "2";
  CHECK(run_solve(cfg).result.win_probability == 1.0);
  cfg.d = "1";
  CHECK(run_solve(cfg).result.win_probability == 0.0);
}

TEST_CASE("solve output") {
  auto cfg = small_config();
  const auto s = run_solve(cfg);
  CHECK(s.d == 1);
  CHECK(s.ballots.size() == 3);
  std::ostringstream out;
  write_solve(out, cfg, s);
  const auto text = out.str();
  CHECK(text.starts_with("d,n,c,T,impossible,guaranteed,contested,objective,"));
  CHECK(text.find("# psm\n") != std::string::npos);
  CHECK(text.find("# ballots\n# m=4\n") != std::string::npos);
  CHECK(text.find(",NA,1\n") != std::string::npos);

  std::ostringstream again;
  write_solve(again, cfg, run_solve(cfg));
  CHECK(again.str() == text);
}

TEST_CASE("strategy from a PSM file") {
  CHECK(strategy_from_psm(Psm(3, {0, 1, 1, 2, 0, 0, 0, 1, 1})).d() == 1);
  CHECK_THROWS_AS(strategy_from_psm(Psm(3, {1, 1, 0, 1, 0, 1, 0, 1, 1})), invalid_input);
}

TEST_CASE("sample output parses back as ballots") {
  auto cfg = small_config();
  std::ostringstream out;
  run_sample(cfg, 3, out);
  std::istringstream in(out.str());
  const auto pool = parse_ballots(in);
  CHECK(pool.ballots().size() == 45);
  CHECK(pool.m() == 4);
}

TEST_CASE("number formatting") {
  CHECK(detail::format_number(0.46) == "0.46");
  CHECK(detail::format_number(1.0 / 3.0) == "0.333333");
  CHECK(detail::format_number(0.000032) == "3.2e-05");
  CHECK(detail::format_number(std::nan("")) == "NA");
  CHECK(detail::csv_field("a,b") == "\"a,b\"");
}
