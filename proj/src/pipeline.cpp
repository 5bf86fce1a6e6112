#include "stochreg/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace stochreg {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

// RFC-4180 style, '.' decimal, no locale dependence.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw ConfigError("cannot write CSV file: " + path);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ",";
      out_ << cells[i];
    }
    out_ << "\r\n";
  }

 private:
  std::ofstream out_;
};

std::string check_detail(const CheckResult& r) {
  if (r.ok) return "ok";
  std::ostringstream os;
  os << "fails at";
  for (const auto& z : r.witness) {
    os << " (" << z.real() << (z.imag() >= 0 ? "+" : "") << z.imag() << "i)";
  }
  return os.str();
}

}  // namespace

void RunReport::add(const std::string& name, const std::string& status,
                    const std::string& detail) {
  stages.push_back({name, status, detail});
}

bool RunReport::all_ok() const {
  for (const auto& s : stages) {
    if (s.status == "fail") return false;
  }
  return true;
}

std::string RunReport::to_json() const {
  nlohmann::json j;
  j["stages"] = nlohmann::json::array();
  for (const auto& s : stages) {
    j["stages"].push_back({{"name", s.name}, {"status", s.status}, {"detail", s.detail}});
  }
  j["ok"] = all_ok();
  return j.dump(2) + "\n";
}

RunReport run_check(const ProblemConfig& cfg) {
  RunReport report;

  const CheckResult stab = check_stabilizable(cfg.plant.A_p, cfg.plant.B_p);
  report.add("stabilizable", stab.ok ? "pass" : "fail", check_detail(stab));

  const CheckResult det = check_detectable(cfg.plant.A_p, cfg.plant.C_p);
  report.add("detectable", det.ok ? "pass" : "fail", check_detail(det));

  const CheckResult nr = check_nonresonance(cfg.plant, cfg.exo);
  report.add("nonresonance", nr.ok ? "pass" : "fail", check_detail(nr));

  const NeutralStabilityResult ns = check_neutrally_stable(cfg.exo);
  if (!ns.ok) {
    report.add("neutral_stability", "fail", "eigenvalues off the imaginary axis");
  } else if (!ns.warning.empty()) {
    report.add("neutral_stability", "warn", ns.warning);
  } else {
    report.add("neutral_stability", "pass", "ok");
  }

  report.add("sampling", cfg.sampling.lambda > 0 ? "pass" : "fail",
             "lambda = " + fmt17(cfg.sampling.lambda));
  return report;
}

InternalModel internal_model_from_config(const ProblemConfig& cfg) {
  if (cfg.g1_override) {
    if (!cfg.g2_override || !cfg.k_override) {
      throw ConfigError("internal_model: a G1 override requires G2 and K as well");
    }
    InternalModel im;
    im.G1 = *cfg.g1_override;
    im.G2 = *cfg.g2_override;
    im.K = *cfg.k_override;
    // sigma(G1) must contain sigma(S).
    const Spectrum s_spec = eig(cfg.exo.S);
    const Spectrum g_spec = eig(im.G1);
    for (Eigen::Index i = 0; i < s_spec.eigenvalues.size(); ++i) {
      double best = 1e300;
      for (Eigen::Index k = 0; k < g_spec.eigenvalues.size(); ++k) {
        best = std::min(best, std::abs(g_spec.eigenvalues(k) - s_spec.eigenvalues(i)));
      }
      if (best > 1e-6) {
        throw ConfigError("internal_model.G1: sigma(G1) does not contain sigma(S)");
      }
    }
    const CheckResult ctrb = check_stabilizable(im.G1, im.G2);
    if (!ctrb.ok) throw ConfigError("internal_model: (G1, G2) is not controllable");
    return im;
  }
  return build_internal_model(cfg.exo, cfg.plant.p(), cfg.g2_override, cfg.k_override);
}

StabilizerParams stabilizer_from_config(const ProblemConfig& cfg, const InternalModel& im) {
  if (cfg.stab_override) {
    StabilizerParams stab;
    stab.A_zeta = cfg.stab_override->A_zeta;
    stab.B_zeta = cfg.stab_override->B_zeta;
    stab.C_zeta = cfg.stab_override->C_zeta;
    stab.D_zeta = cfg.stab_override->D_zeta;
    return stab;
  }
  return design_stabilizer(cfg.plant, im, cfg.stab_design->beta_target, cfg.stab_design->D_zeta);
}

SynthesisResult run_synthesize(const ProblemConfig& cfg, bool force,
                               std::optional<double> gamma_cli, RunReport& report) {
  const RunReport checks = run_check(cfg);
  for (const auto& s : checks.stages) report.add("check." + s.name, s.status, s.detail);
  if (!checks.all_ok()) {
    if (!force) throw AssumptionError("assumption checks failed (use --force to override)");
    report.add("checks_forced", "warn", "continuing despite failed assumption checks");
  }

  SynthesisResult result;
  const InternalModel im = internal_model_from_config(cfg);
  report.add("internal_model", "pass",
             "n_z = " + std::to_string(im.n_z()) + ", sigma(G1) copies sigma(S)");

  const StabilizerParams stab = stabilizer_from_config(cfg, im);
  report.add("stabilizer", "pass",
             cfg.stab_override ? "matrices supplied by config"
                               : "designed for beta_target = " + fmt17(cfg.stab_design->beta_target));

  result.aug = assemble_augmented(cfg.plant, im, stab);
  report.add("assemble", "pass", "beta_achieved = " + fmt17(result.aug.beta_achieved));

  const RegulatorEquationsSolution regeq = solve_regulator_equations(cfg.plant, cfg.exo);
  report.add("regulator_equations", "pass", "residual = " + fmt17(regeq.residual));

  FrancisSolution francis =
      solve_francis(result.aug, im, cfg.exo, result.aug.E_cl, cfg.plant.F_p);
  francis.X_p = regeq.X_p;
  francis.R = regeq.R;
  report.add("francis", "pass", "residual = " + fmt17(francis.residual));

  // Internal-model-principle consistency of K: {Z S = G1 Z, K Z = R} must be
  // solvable.
  const auto [z_ss, z_res] = solve_steady_state_gain(im, cfg.exo, regeq.R);
  (void)z_ss;
  if (z_res > 1e-6 * (1.0 + regeq.R.norm())) {
    report.add("gain_consistency", "warn",
               "K Z = R is inconsistent (residual " + fmt17(z_res) +
                   "); regulation may fail, supply K explicitly");
  } else {
    report.add("gain_consistency", "pass", "residual = " + fmt17(z_res));
  }

  const double lambda = cfg.sampling.lambda;
  double gamma_used = 0.0;
  LmiSolution sol;
  if (gamma_cli) {
    gamma_used = *gamma_cli;
    sol = solve_sdp_feasibility(
        build_synthesis_lmi(result.aug.frakA, result.aug.H2, lambda, gamma_used, cfg.lmi.options));
    if (sol.status != LmiStatus::Feasible) {
      report.add("lmi", "fail", "infeasible at gamma = " + fmt17(gamma_used));
      throw InfeasibleError("LMI infeasible at gamma = " + fmt17(gamma_used) +
                            ", lambda = " + fmt17(lambda));
    }
  } else if (cfg.lmi.maximize) {
    const double gamma_hi =
        cfg.lmi.gamma_hi.value_or(lambda + 2.0 * spectral_norm(result.aug.frakA) + 10.0);
    const MaxGammaResult mg =
        max_gamma(result.aug.frakA, result.aug.H2, lambda, gamma_hi, cfg.lmi.options);
    if (!mg.feasible_at_zero) {
      report.add("lmi", "fail", "infeasible at gamma = 0");
      throw InfeasibleError("LMI infeasible even at gamma = 0 for lambda = " + fmt17(lambda));
    }
    gamma_used = mg.gamma_star;
    sol = mg.solution;
    result.monotone_ok = mg.monotone_ok;
  } else {
    gamma_used = cfg.lmi.gamma;
    sol = solve_sdp_feasibility(
        build_synthesis_lmi(result.aug.frakA, result.aug.H2, lambda, gamma_used, cfg.lmi.options));
    if (sol.status != LmiStatus::Feasible) {
      report.add("lmi", "fail", "infeasible at gamma = " + fmt17(gamma_used));
      throw InfeasibleError("LMI infeasible at gamma = " + fmt17(gamma_used) +
                            ", lambda = " + fmt17(lambda));
    }
  }
  report.add("lmi", "pass",
             "gamma = " + fmt17(gamma_used) + ", certificate = " + fmt17(sol.certificate));

  const auto [q_gain, w_gain] = recover_observer_gains(sol);
  const GainCertificate cert = verify_gains_lmi(result.aug.frakA, result.aug.H2, q_gain, w_gain,
                                                lambda, gamma_used, cfg.lmi.options);
  report.add("gain_certificate", cert.status == LmiStatus::Feasible ? "pass" : "fail",
             "certificate = " + fmt17(cert.certificate));

  result.file.regulator.im = im;
  result.file.regulator.stab = stab;
  result.file.regulator.obs = build_observer_matrices(result.aug, q_gain, w_gain);
  result.file.francis = francis;
  result.file.beta_achieved = result.aug.beta_achieved;
  result.file.gamma = gamma_used;
  result.file.lambda = lambda;
  result.file.certificate = cert.certificate;
  return result;
}

ClosedLoop closed_loop_from(const ProblemConfig& cfg, const RegulatorFile& file) {
  return assemble_closed_loop(cfg.plant, cfg.exo, file.regulator, file.francis);
}

Vector initial_state_original(const ProblemConfig& cfg, const ClosedLoop& cl) {
  Vector x0 = Vector::Zero(cl.dim_orig());
  x0.head(cl.q) = cfg.sim.w0.value_or(cfg.default_w0());
  x0.segment(cl.q, cl.n_p) = cfg.sim.x_p0.value_or(cfg.default_x_p0());
  return x0;
}

void run_simulate(const ProblemConfig& cfg, const RegulatorFile& file, std::uint64_t seed,
                  const std::string& csv_path, RunReport& report) {
  const ClosedLoop cl = closed_loop_from(cfg, file);
  const Vector x0 = initial_state_original(cfg, cl);
  const SamplePath path = simulate(cl, x0, cfg.sim.horizon, cfg.sim.output_dt,
                                   cfg.sampling.lambda, seed, Coordinates::Original);

  CsvWriter csv(csv_path);
  std::vector<std::string> header{"t", "jump_flag"};
  for (Eigen::Index i = 0; i < cl.p; ++i) header.push_back("e_p_" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < cl.n_p; ++i) header.push_back("x_p_" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < cl.p; ++i) header.push_back("y_p_" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < cl.p; ++i) header.push_back("y_w_" + std::to_string(i + 1));
  csv.row(header);

  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    const Vector& x = path.states[k];
    const Vector w = x.head(cl.q);
    const Vector x_p = x.segment(cl.q, cl.n_p);
    const Vector y_p = cl.C_p * x_p;
    const Vector y_w = cl.F_p * w;
    std::vector<std::string> cells{fmt17(path.grid[k]), std::to_string(path.jump_flag[k])};
    for (Eigen::Index i = 0; i < cl.p; ++i) cells.push_back(fmt17(path.e_p[k](i)));
    for (Eigen::Index i = 0; i < cl.n_p; ++i) cells.push_back(fmt17(x_p(i)));
    for (Eigen::Index i = 0; i < cl.p; ++i) cells.push_back(fmt17(y_p(i)));
    for (Eigen::Index i = 0; i < cl.p; ++i) cells.push_back(fmt17(y_w(i)));
    csv.row(cells);
  }
  report.add("simulate", "pass",
             std::to_string(path.grid.size()) + " grid points, " +
                 std::to_string(path.jump_times.size()) + " jumps");
}

MonteCarloSummary run_montecarlo(const ProblemConfig& cfg, const RegulatorFile& file,
                                 std::uint64_t seed, const std::string& csv_path,
                                 RunReport& report) {
  if (cfg.sim.trajectories < 2) {
    throw ConfigError("simulation.trajectories: Monte Carlo needs N >= 2");
  }
  const ClosedLoop cl = closed_loop_from(cfg, file);
  const Vector x0 = transform_state(cl, initial_state_original(cfg, cl));

  MonteCarloSummary summary;
  summary.curve = monte_carlo_moment(cl, x0, cfg.sim.trajectories, cfg.sim.horizon,
                                     cfg.sim.output_dt, cfg.sampling.lambda, seed);

  if (!csv_path.empty()) {
    CsvWriter csv(csv_path);
    csv.row({"t", "m", "stderr"});
    for (std::size_t k = 0; k < summary.curve.grid.size(); ++k) {
      csv.row({fmt17(summary.curve.grid[k]), fmt17(summary.curve.m[k]),
               fmt17(summary.curve.std_error[k])});
    }
  }

  summary.gamma_0_theory = std::min(2.0 * file.beta_achieved, file.gamma / 2.0);
  const auto window = cfg.sim.fit_window.value_or(cfg.default_fit_window());

  const double m0 = summary.curve.m.front();
  const double m_end = summary.curve.m.back();
  summary.endpoint_threshold = std::exp(-0.5 * summary.gamma_0_theory * cfg.sim.horizon);
  if (m0 > 0.0) {
    summary.endpoint_ratio = m_end / m0;
    summary.fit = fit_decay_rate(summary.curve, window.first, window.second);
    summary.fit.gamma_0_theory = summary.gamma_0_theory;
    summary.pass = summary.fit.gamma_hat >= 0.5 * summary.gamma_0_theory &&
                   summary.endpoint_ratio <= summary.endpoint_threshold;
  } else {
    // Zero initial condition: the path is identically zero.
    summary.endpoint_ratio = 0.0;
    summary.pass = m_end == 0.0;
  }
  report.add("montecarlo", summary.pass ? "pass" : "fail",
             "gamma_hat = " + fmt17(summary.fit.gamma_hat) +
                 ", gamma_0 = " + fmt17(summary.gamma_0_theory) +
                 ", m(T)/m(0) = " + fmt17(summary.endpoint_ratio));
  return summary;
}

namespace {

std::vector<SweepRow> sweep_impl(const ProblemConfig& cfg, const std::vector<double>& grid,
                                 bool lambda_mode, double lambda_hi,
                                 const std::string& csv_path, RunReport& report) {
  if (grid.empty()) throw ConfigError("sweep: grid must be non-empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] <= grid[i - 1]) throw ConfigError("sweep: grid must be strictly increasing");
  }

  const InternalModel im = internal_model_from_config(cfg);
  const StabilizerParams stab = stabilizer_from_config(cfg, im);
  const AugmentedSystem aug = assemble_augmented(cfg.plant, im, stab);

  std::vector<SweepRow> rows;
  for (double x : grid) {
    SweepRow row;
    row.x = x;
    if (lambda_mode) {
      const double gamma_hi =
          cfg.lmi.gamma_hi.value_or(x + 2.0 * spectral_norm(aug.frakA) + 10.0);
      const MaxGammaResult mg = max_gamma(aug.frakA, aug.H2, x, gamma_hi, cfg.lmi.options);
      row.feasible = mg.feasible_at_zero;
      row.value = mg.gamma_star;
    } else {
      const MinLambdaResult ml = min_lambda(aug.frakA, aug.H2, x, lambda_hi, cfg.lmi.options);
      row.feasible = ml.feasible_at_hi;
      row.value = ml.lambda_star;
    }
    rows.push_back(row);
  }

  if (!csv_path.empty()) {
    CsvWriter csv(csv_path);
    csv.row(lambda_mode ? std::vector<std::string>{"lambda", "gamma_star"}
                        : std::vector<std::string>{"gamma", "lambda_star"});
    for (const auto& row : rows) {
      csv.row({fmt17(row.x), row.feasible ? fmt17(row.value) : "infeasible"});
    }
  }
  report.add("sweep", "pass", std::to_string(rows.size()) + " grid points");
  return rows;
}

}  // namespace

std::vector<SweepRow> run_sweep_lambda(const ProblemConfig& cfg,
                                       const std::vector<double>& lambda_grid,
                                       const std::string& csv_path, RunReport& report) {
  return sweep_impl(cfg, lambda_grid, /*lambda_mode=*/true, 0.0, csv_path, report);
}

std::vector<SweepRow> run_sweep_gamma(const ProblemConfig& cfg,
                                      const std::vector<double>& gamma_grid, double lambda_hi,
                                      const std::string& csv_path, RunReport& report) {
  return sweep_impl(cfg, gamma_grid, /*lambda_mode=*/false, lambda_hi, csv_path, report);
}

VerifySummary run_verify(const ProblemConfig& cfg, const Matrix& q, const Matrix& w,
                         double gamma, double lambda, bool with_monte_carlo,
                         std::uint64_t seed, RunReport& report) {
  const InternalModel im = internal_model_from_config(cfg);
  const StabilizerParams stab = stabilizer_from_config(cfg, im);
  const AugmentedSystem aug = assemble_augmented(cfg.plant, im, stab);

  VerifySummary summary;
  summary.cert = verify_gains_lmi(aug.frakA, aug.H2, q, w, lambda, gamma, cfg.lmi.options);
  report.add("verify_lmi", summary.cert.status == LmiStatus::Feasible ? "pass" : "fail",
             "certificate = " + fmt17(summary.cert.certificate));

  const MBlock mb = build_M(aug.frakA, aug.H2, q, w);
  summary.dynkin = dynkin_check(mb, summary.cert.P1, summary.cert.P2, lambda, 1000, seed);
  const bool dynkin_ok = summary.dynkin.max_quadform <= 1e-6;
  report.add("dynkin", dynkin_ok ? "pass" : "fail",
             "max UV = " + fmt17(summary.dynkin.max_quadform));

  summary.pass = summary.cert.status == LmiStatus::Feasible && dynkin_ok;

  if (with_monte_carlo) {
    RegulatorFile file;
    file.regulator.im = im;
    file.regulator.stab = stab;
    file.regulator.obs = build_observer_matrices(aug, q, w);
    const RegulatorEquationsSolution regeq = solve_regulator_equations(cfg.plant, cfg.exo);
    file.francis = solve_francis(aug, im, cfg.exo, aug.E_cl, cfg.plant.F_p);
    file.francis.X_p = regeq.X_p;
    file.francis.R = regeq.R;
    file.beta_achieved = aug.beta_achieved;
    file.gamma = gamma;
    file.lambda = lambda;
    summary.mc = run_montecarlo(cfg, file, seed, "", report);
    summary.pass = summary.pass && summary.mc->pass;
  }
  return summary;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

}  // namespace stochreg
