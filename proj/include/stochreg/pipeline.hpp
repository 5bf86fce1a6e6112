#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stochreg/config.hpp"
#include "stochreg/pdmp.hpp"
#include "stochreg/verify.hpp"

// Orchestration of the synthesize -> certify -> simulate -> verify pipeline
// plus CSV/JSON artifact emission. The CLI front end maps the exceptions
// below onto its exit-code contract (0 ok, 2 infeasible, 3 assumption
// failure, 4 I/O or parse).

namespace stochreg {

struct AssumptionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StageReport {
  std::string name;
  std::string status;  // "pass", "fail", "warn", or "skipped"
  std::string detail;
};

struct RunReport {
  std::vector<StageReport> stages;

  void add(const std::string& name, const std::string& status, const std::string& detail = "");
  bool all_ok() const;  // no "fail" entries
  std::string to_json() const;
};

// Assumption suite: stabilizability, detectability, non-resonance at
// sigma(S), neutral stability, sampling parameters.
RunReport run_check(const ProblemConfig& cfg);

InternalModel internal_model_from_config(const ProblemConfig& cfg);
StabilizerParams stabilizer_from_config(const ProblemConfig& cfg, const InternalModel& im);

struct SynthesisResult {
  RegulatorFile file;
  AugmentedSystem aug;
  bool monotone_ok = true;
};

// Checks -> internal model -> stabilizer -> Francis -> LMI (fixed gamma or
// line search) -> gain recovery -> observer assembly. `gamma_cli` overrides
// the config's gamma setting. Throws AssumptionError unless `force`, and
// InfeasibleError when the LMI has no solution.
SynthesisResult run_synthesize(const ProblemConfig& cfg, bool force,
                               std::optional<double> gamma_cli, RunReport& report);

ClosedLoop closed_loop_from(const ProblemConfig& cfg, const RegulatorFile& file);

// Stacked (w0, x_p0, 0, 0, 0) initial state.
Vector initial_state_original(const ProblemConfig& cfg, const ClosedLoop& cl);

// Single path in original coordinates; CSV columns
// t, jump_flag, e_p*, x_p*, y_p*, y_w*.
void run_simulate(const ProblemConfig& cfg, const RegulatorFile& file, std::uint64_t seed,
                  const std::string& csv_path, RunReport& report);

struct MonteCarloSummary {
  MomentCurve curve;
  DecayEstimate fit;
  double gamma_0_theory = 0.0;
  double endpoint_ratio = 0.0;      // m(end) / m(0)
  double endpoint_threshold = 0.0;  // exp(-0.5 gamma_0 horizon)
  bool pass = false;
};

// Ensemble moment curve (CSV columns t, m, stderr) plus the decay fit
// against gamma_0 = min(2 beta, gamma / 2) at the half-rate threshold.
MonteCarloSummary run_montecarlo(const ProblemConfig& cfg, const RegulatorFile& file,
                                 std::uint64_t seed, const std::string& csv_path,
                                 RunReport& report);

// gamma*(lambda) over the grid; infeasible entries are recorded as the
// string "infeasible" in the CSV.
struct SweepRow {
  double x = 0.0;
  bool feasible = false;
  double value = 0.0;
};
std::vector<SweepRow> run_sweep_lambda(const ProblemConfig& cfg,
                                       const std::vector<double>& lambda_grid,
                                       const std::string& csv_path, RunReport& report);
std::vector<SweepRow> run_sweep_gamma(const ProblemConfig& cfg,
                                      const std::vector<double>& gamma_grid, double lambda_hi,
                                      const std::string& csv_path, RunReport& report);

struct VerifySummary {
  GainCertificate cert;
  DynkinReport dynkin;
  std::optional<MonteCarloSummary> mc;
  bool pass = false;
};

// Certifies fixed gains (Q, W) at (gamma, lambda): verification LMI, Dynkin
// generator check, and (optionally) Monte Carlo decay.
VerifySummary run_verify(const ProblemConfig& cfg, const Matrix& q, const Matrix& w,
                         double gamma, double lambda, bool with_monte_carlo,
                         std::uint64_t seed, RunReport& report);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace stochreg
