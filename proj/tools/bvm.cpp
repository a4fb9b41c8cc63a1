// bvm: optimal Bayesian coalition manipulation experiments.
//
//   bvm solve      --seed S --dist mallows:0.6 --m 6 --n 100 --c 10 --d rank:2
//   bvm evaluate   --seed S --dist ... --n 100 --psm strategy.psm
//   bvm sweep      --seed S --dist mallows:0.6 --m 6 --c 10 --sweep-n 100,200 --sweep-phi 0.6,0.8
//   bvm recover    --psm strategy.psm
//   bvm complexity --c 10 --m 6 --k 2 --eps 0.1 --delta 0.05 [--C 1]
//   bvm sample     --seed S --dist ic --m 4 --n 20 --count 3

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bvm/bvm.hpp"

namespace {

const std::vector<std::string> kSettingKeys = {
    "rule",  "dist",   "eval-dist", "m",        "n",       "c",       "d",             "tsolve",  "trials",
    "seed",  "budget-secs", "sweep-n", "sweep-phi", "sweep-d", "ballot-policy", "threads", "timing"};

struct CommonFlags {
  std::string config;
  std::string out;
  std::map<std::string, std::string> settings;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "key=value configuration file");
  cmd->add_option("--out", flags.out, "output path (default stdout)");
  for (const auto& key : kSettingKeys) {
    if (key == "timing") {
      cmd->add_flag_callback("--timing", [&flags] { flags.settings["timing"] = "true"; }, "report solve times");
      continue;
    }
    cmd->add_option_function<std::string>(
        "--" + key, [&flags, key](const std::string& v) { flags.settings[key] = v; }, "overrides config key '" + key + "'");
  }
}

bvm::ExperimentConfig build_config(const CommonFlags& flags) {
  bvm::ExperimentConfig cfg;
  cfg.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (!flags.config.empty()) bvm::load_config(flags.config, cfg);
  for (const auto& key : kSettingKeys) {
    auto it = flags.settings.find(key);
    if (it != flags.settings.end()) bvm::apply_setting(cfg, key, it->second);
  }
  return cfg;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw bvm::parse_error("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal Bayesian coalition manipulation for positional scoring rules"};
  app.require_subcommand(1);

  CommonFlags solve_flags, eval_flags, sweep_flags, sample_flags;
  std::string psm_out, psm_in, recover_psm, recover_out;
  int sample_count = 1;

  auto* solve = app.add_subcommand("solve", "compute a strategy from sampled beliefs and recover its ballots");
  add_common(solve, solve_flags);
  solve->add_option("--psm-out", psm_out, "also write the strategy PSM to this file");

  auto* evaluate = app.add_subcommand("evaluate", "test a strategy PSM on fresh profiles");
  add_common(evaluate, eval_flags);
  evaluate->add_option("--psm", psm_in, "strategy PSM file")->required();

  auto* sweep = app.add_subcommand("sweep", "solve and evaluate over a (phi, d, n) grid");
  add_common(sweep, sweep_flags);

  auto* recover = app.add_subcommand("recover", "decompose a PSM file into ballots");
  recover->add_option("--psm", recover_psm, "PSM file")->required();
  recover->add_option("--out", recover_out, "output path (default stdout)");

  int cx_c = 0, cx_m = 0;
  std::optional<int> cx_k;
  double cx_eps = 0, cx_delta = 0;
  std::optional<double> cx_constant;
  auto* complexity = app.add_subcommand("complexity", "sample sizes for an eps-accurate strategy");
  complexity->add_option("--c", cx_c)->required();
  complexity->add_option("--m", cx_m)->required();
  complexity->add_option("--k", cx_k, "k for the k-approval bound");
  complexity->add_option("--eps", cx_eps)->required();
  complexity->add_option("--delta", cx_delta)->required();
  complexity->add_option("--C", cx_constant, "constant of the general bound (no default)");

  auto* sample = app.add_subcommand("sample", "write sampled profiles in ballot-file form");
  add_common(sample, sample_flags);
  sample->add_option("--count", sample_count, "number of profiles")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      const auto cfg = build_config(solve_flags);
      const auto result = bvm::run_solve(cfg);
      Output out(solve_flags.out);
      bvm::write_solve(out.stream(), cfg, result);
      if (!psm_out.empty()) {
        Output psm(psm_out);
        bvm::write_psm(psm.stream(), result.result.strategy.matrix());
      }
      if (!result.result.optimal) std::cerr << "warning: solver budget exhausted; strategy is not certified optimal\n";
    } else if (*evaluate) {
      const auto cfg = build_config(eval_flags);
      const auto strategy = bvm::strategy_from_psm(bvm::load_psm(psm_in));
      const auto report = bvm::run_evaluate(cfg, strategy);
      Output out(eval_flags.out);
      bvm::write_evaluate(out.stream(), cfg, strategy, report);
    } else if (*sweep) {
      const auto cfg = build_config(sweep_flags);
      Output out(sweep_flags.out);
      if (!bvm::run_sweep(cfg, out.stream())) return 1;
    } else if (*recover) {
      const auto votes = bvm::recover_votes(bvm::load_psm(recover_psm));
      Output out(recover_out);
      bvm::write_ballots(out.stream(), votes);
    } else if (*complexity) {
      if (!cx_constant && !cx_k) throw bvm::invalid_input("give --C for the general bound and/or --k for k-approval");
      std::cout << "bound,T\n";
      if (cx_constant)
        std::cout << "general," << bvm::sample_complexity_general(cx_c, cx_m, cx_eps, cx_delta, *cx_constant) << '\n';
      if (cx_k) std::cout << "kapproval," << bvm::sample_complexity_kapproval(cx_c, *cx_k, cx_m, cx_eps, cx_delta) << '\n';
    } else if (*sample) {
      const auto cfg = build_config(sample_flags);
      Output out(sample_flags.out);
      bvm::run_sample(cfg, sample_count, out.stream());
    }
  } catch (const std::exception& e) {
    std::cerr << "bvm: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
