#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stochreg/pipeline.hpp"

namespace {

using namespace stochreg;

// Exit-code contract: 0 success, 2 infeasible, 3 assumption failure,
// 4 I/O or parse error, 1 anything else.
int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const AssumptionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

void print_report(const RunReport& report) {
  for (const auto& s : report.stages) {
    std::printf("  [%s] %s%s%s\n", s.status.c_str(), s.name.c_str(),
                s.detail.empty() ? "" : ": ", s.detail.c_str());
  }
}

std::string out_path(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) grid.push_back(std::stod(tok));
  }
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochreg: output-regulation synthesis and verification for LTI plants "
               "under Poisson-sampled measurements"};
  app.require_subcommand(1);

  std::string config_path;
  std::string regulator_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  double gamma_arg = 0.0;
  bool gamma_given = false;
  double lambda_arg = 0.0;
  bool lambda_given = false;
  bool force = false;
  double tol_arg = 0.0;
  bool tol_given = false;
  std::string lambda_grid_csv;
  std::string gamma_grid_csv;
  double lambda_hi = 100.0;

  auto add_common = [&](CLI::App* cmd, bool needs_regulator) {
    cmd->add_option("--config", config_path, "problem configuration (JSON)")->required();
    cmd->add_option("--out", out_dir, "output directory (default .)");
    if (needs_regulator) {
      cmd->add_option("--regulator", regulator_path, "regulator file (JSON)");
    }
  };

  CLI::App* cmd_check = app.add_subcommand("check", "run the assumption suite");
  add_common(cmd_check, false);

  CLI::App* cmd_synth = app.add_subcommand(
      "synthesize", "design the regulator and certify it (writes regulator.json)");
  add_common(cmd_synth, false);
  cmd_synth->add_option("--gamma", gamma_arg, "fix the decay rate instead of maximizing")
      ->each([&](const std::string&) { gamma_given = true; });
  cmd_synth->add_flag("--force", force, "continue despite failed assumption checks");

  CLI::App* cmd_sim = app.add_subcommand("simulate", "single sample path (writes simulate.csv)");
  add_common(cmd_sim, true);
  cmd_sim->add_option("--seed", seed, "RNG seed override")
      ->each([&](const std::string&) { seed_given = true; });

  CLI::App* cmd_mc =
      app.add_subcommand("montecarlo", "ensemble moment curve and decay fit (writes moments.csv)");
  add_common(cmd_mc, true);
  cmd_mc->add_option("--seed", seed, "RNG seed override")
      ->each([&](const std::string&) { seed_given = true; });

  CLI::App* cmd_sweep = app.add_subcommand(
      "sweep", "gamma*(lambda) or lambda*(gamma) line searches (writes sweep.csv)");
  add_common(cmd_sweep, false);
  cmd_sweep->add_option("--lambda-grid", lambda_grid_csv, "comma-separated lambda grid");
  cmd_sweep->add_option("--gamma-grid", gamma_grid_csv, "comma-separated gamma grid");
  cmd_sweep->add_option("--lambda-hi", lambda_hi, "upper bracket for lambda searches");

  CLI::App* cmd_verify = app.add_subcommand(
      "verify", "certify fixed gains (from --regulator or the config's paper_gains)");
  add_common(cmd_verify, true);
  cmd_verify->add_option("--gamma", gamma_arg, "decay rate to certify at")
      ->each([&](const std::string&) { gamma_given = true; });
  cmd_verify->add_option("--lambda", lambda_arg, "sampling rate to certify at")
      ->each([&](const std::string&) { lambda_given = true; });
  cmd_verify->add_option("--tol", tol_arg, "certificate tolerance override")
      ->each([&](const std::string&) { tol_given = true; });
  cmd_verify->add_option("--seed", seed, "RNG seed override")
      ->each([&](const std::string&) { seed_given = true; });

  CLI11_PARSE(app, argc, argv);

  if (cmd_check->parsed()) {
    return guarded([&] {
      const ProblemConfig cfg = parse_config(config_path);
      const RunReport report = run_check(cfg);
      print_report(report);
      write_text_file(out_path(out_dir, "report.json"), report.to_json());
      if (!report.all_ok()) throw AssumptionError("assumption checks failed");
    });
  }

  if (cmd_synth->parsed()) {
    return guarded([&] {
      const ProblemConfig cfg = parse_config(config_path);
      RunReport report;
      std::optional<double> gamma_cli;
      if (gamma_given) gamma_cli = gamma_arg;
      SynthesisResult result;
      try {
        result = run_synthesize(cfg, force, gamma_cli, report);
      } catch (...) {
        print_report(report);
        write_text_file(out_path(out_dir, "report.json"), report.to_json());
        throw;
      }
      print_report(report);
      write_text_file(out_path(out_dir, "report.json"), report.to_json());
      write_regulator_file(out_path(out_dir, "regulator.json"), result.file);
      std::printf("regulator written: gamma = %.6g, beta = %.6g, certificate = %.3g\n",
                  result.file.gamma, result.file.beta_achieved, result.file.certificate);
    });
  }

  if (cmd_sim->parsed()) {
    return guarded([&] {
      const ProblemConfig cfg = parse_config(config_path);
      if (regulator_path.empty()) throw ConfigError("simulate requires --regulator");
      const RegulatorFile file = read_regulator_file(regulator_path);
      RunReport report;
      run_simulate(cfg, file, seed_given ? seed : cfg.sim.seed,
                   out_path(out_dir, "simulate.csv"), report);
      print_report(report);
    });
  }

  if (cmd_mc->parsed()) {
    return guarded([&] {
      const ProblemConfig cfg = parse_config(config_path);
      if (regulator_path.empty()) throw ConfigError("montecarlo requires --regulator");
      const RegulatorFile file = read_regulator_file(regulator_path);
      RunReport report;
      const MonteCarloSummary mc = run_montecarlo(cfg, file, seed_given ? seed : cfg.sim.seed,
                                                  out_path(out_dir, "moments.csv"), report);
      print_report(report);
      write_text_file(out_path(out_dir, "report.json"), report.to_json());
      if (!mc.pass) throw InfeasibleError("Monte Carlo decay check failed");
    });
  }

  if (cmd_sweep->parsed()) {
    return guarded([&] {
      const ProblemConfig cfg = parse_config(config_path);
      if (lambda_grid_csv.empty() == gamma_grid_csv.empty()) {
        throw ConfigError("sweep requires exactly one of --lambda-grid or --gamma-grid");
      }
      RunReport report;
      if (!lambda_grid_csv.empty()) {
        const auto rows = run_sweep_lambda(cfg, parse_grid(lambda_grid_csv),
                                           out_path(out_dir, "sweep.csv"), report);
        for (const auto& r : rows) {
          std::printf("lambda = %-8g gamma* = %s\n", r.x,
                      r.feasible ? std::to_string(r.value).c_str() : "infeasible");
        }
      } else {
        const auto rows = run_sweep_gamma(cfg, parse_grid(gamma_grid_csv), lambda_hi,
                                          out_path(out_dir, "sweep.csv"), report);
        for (const auto& r : rows) {
          std::printf("gamma = %-8g lambda* = %s\n", r.x,
                      r.feasible ? std::to_string(r.value).c_str() : "infeasible");
        }
      }
    });
  }

  if (cmd_verify->parsed()) {
    return guarded([&] {
      ProblemConfig cfg = parse_config(config_path);
      if (tol_given) cfg.lmi.options.feas_tol = tol_arg;

      Matrix q, w;
      double gamma = cfg.lmi.maximize ? 0.1 : cfg.lmi.gamma;
      double lambda = cfg.sampling.lambda;
      if (!regulator_path.empty()) {
        const RegulatorFile file = read_regulator_file(regulator_path);
        q = file.regulator.obs.Q;
        w = file.regulator.obs.W;
        gamma = file.gamma;
        lambda = file.lambda;
      } else if (cfg.paper_gains) {
        q = cfg.paper_gains->first;
        w = cfg.paper_gains->second;
      } else {
        throw ConfigError("verify needs --regulator or a paper_gains block in the config");
      }
      if (gamma_given) gamma = gamma_arg;
      if (lambda_given) lambda = lambda_arg;

      RunReport report;
      const VerifySummary summary =
          run_verify(cfg, q, w, gamma, lambda, /*with_monte_carlo=*/true,
                     seed_given ? seed : cfg.sim.seed, report);
      print_report(report);
      write_text_file(out_path(out_dir, "report.json"), report.to_json());
      if (!summary.pass) {
        throw InfeasibleError("gains not certified at gamma = " + std::to_string(gamma) +
                              ", lambda = " + std::to_string(lambda));
      }
      std::printf("gains certified at gamma = %.6g, lambda = %.6g (certificate %.3g)\n", gamma,
                  lambda, summary.cert.certificate);
    });
  }

  return 0;
}
