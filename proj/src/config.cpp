#include "stochreg/config.hpp"

#include <fstream>
#include <json.hpp>

namespace stochreg {

namespace {

using nlohmann::json;

Matrix parse_matrix(const json& j, const std::string& field) {
  if (j.is_number()) {
    Matrix m(1, 1);
    m(0, 0) = j.get<double>();
    return m;
  }
  if (!j.is_array() || j.empty()) {
    throw ConfigError(field + ": expected a non-empty array of rows");
  }
  const auto& first = j.front();
  if (!first.is_array()) {
    // Flat array: interpret as a column vector.
    Matrix m(static_cast<Eigen::Index>(j.size()), 1);
    Eigen::Index i = 0;
    for (const auto& v : j) {
      if (!v.is_number()) throw ConfigError(field + ": expected numeric entries");
      m(i++, 0) = v.get<double>();
    }
    return m;
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(first.size());
  Matrix m(rows, cols);
  Eigen::Index r = 0;
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(field + ": ragged rows (row " + std::to_string(r) + ")");
    }
    Eigen::Index c = 0;
    for (const auto& v : row) {
      if (!v.is_number()) throw ConfigError(field + ": expected numeric entries");
      m(r, c++) = v.get<double>();
    }
    ++r;
  }
  return m;
}

Vector parse_vector(const json& j, const std::string& field) {
  const Matrix m = parse_matrix(j, field);
  if (m.cols() != 1) throw ConfigError(field + ": expected a flat array");
  return m.col(0);
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

const json& require_field(const json& j, const std::string& key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(ctx + ": missing required field '" + key + "'");
  return *it;
}

void check_dims(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                const std::string& field) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ConfigError(field + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                      ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

ProblemConfig parse_json(const json& root, const std::string& origin) {
  ProblemConfig cfg;

  const json& plant = require_field(root, "plant", origin);
  cfg.plant.A_p = parse_matrix(require_field(plant, "A_p", "plant"), "plant.A_p");
  cfg.plant.B_p = parse_matrix(require_field(plant, "B_p", "plant"), "plant.B_p");
  cfg.plant.E_p = parse_matrix(require_field(plant, "E_p", "plant"), "plant.E_p");
  cfg.plant.C_p = parse_matrix(require_field(plant, "C_p", "plant"), "plant.C_p");
  cfg.plant.F_p = parse_matrix(require_field(plant, "F_p", "plant"), "plant.F_p");

  const json& exo = require_field(root, "exosystem", origin);
  cfg.exo.S = parse_matrix(require_field(exo, "S", "exosystem"), "exosystem.S");

  const json& sampling = require_field(root, "sampling", origin);
  const json& lam = require_field(sampling, "lambda", "sampling");
  if (!lam.is_number()) throw ConfigError("sampling.lambda: expected a number");
  cfg.sampling.lambda = lam.get<double>();

  // Dimension consistency with the named field in every message.
  const Eigen::Index n_p = cfg.plant.n_p();
  const Eigen::Index q = cfg.exo.q();
  if (cfg.plant.A_p.rows() != cfg.plant.A_p.cols()) throw ConfigError("plant.A_p: must be square");
  check_dims(cfg.plant.B_p, n_p, cfg.plant.m_p(), "plant.B_p");
  check_dims(cfg.plant.E_p, n_p, q, "plant.E_p");
  check_dims(cfg.plant.C_p, cfg.plant.p(), n_p, "plant.C_p");
  check_dims(cfg.plant.F_p, cfg.plant.p(), q, "plant.F_p");
  try {
    cfg.plant.validate();
    cfg.exo.validate();
    cfg.sampling.validate();
  } catch (const std::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  if (auto it = root.find("internal_model"); it != root.end()) {
    const json& im = *it;
    if (im.contains("G1")) cfg.g1_override = parse_matrix(im["G1"], "internal_model.G1");
    if (im.contains("G2")) cfg.g2_override = parse_matrix(im["G2"], "internal_model.G2");
    if (im.contains("K")) cfg.k_override = parse_matrix(im["K"], "internal_model.K");
  }

  const json& stab = require_field(root, "stabilizer", origin);
  const bool has_override = stab.contains("A_zeta");
  const bool has_design = stab.contains("beta_target");
  if (has_override == has_design) {
    throw ConfigError(
        "stabilizer: exactly one of matrix override (A_zeta/B_zeta/C_zeta) or "
        "beta_target must be present");
  }
  const Eigen::Index m_p = cfg.plant.m_p();
  Matrix d_zeta = Matrix::Zero(m_p, m_p);
  if (stab.contains("D_zeta")) {
    d_zeta = parse_matrix(stab["D_zeta"], "stabilizer.D_zeta");
    check_dims(d_zeta, m_p, m_p, "stabilizer.D_zeta");
  }
  if (has_override) {
    StabilizerOverride so;
    so.A_zeta = parse_matrix(require_field(stab, "A_zeta", "stabilizer"), "stabilizer.A_zeta");
    so.B_zeta = parse_matrix(require_field(stab, "B_zeta", "stabilizer"), "stabilizer.B_zeta");
    so.C_zeta = parse_matrix(require_field(stab, "C_zeta", "stabilizer"), "stabilizer.C_zeta");
    so.D_zeta = d_zeta;
    const Eigen::Index n_zeta = so.A_zeta.rows();
    if (so.A_zeta.cols() != n_zeta) throw ConfigError("stabilizer.A_zeta: must be square");
    check_dims(so.B_zeta, n_zeta, m_p, "stabilizer.B_zeta");
    check_dims(so.C_zeta, m_p, n_zeta, "stabilizer.C_zeta");
    cfg.stab_override = so;
  } else {
    StabilizerDesign sd;
    sd.beta_target = stab["beta_target"].get<double>();
    sd.D_zeta = d_zeta;
    cfg.stab_design = sd;
  }

  if (auto it = root.find("lmi"); it != root.end()) {
    const json& lmi = *it;
    if (lmi.contains("gamma")) {
      if (lmi["gamma"].is_string()) {
        if (lmi["gamma"].get<std::string>() != "maximize") {
          throw ConfigError("lmi.gamma: expected a number or \"maximize\"");
        }
        cfg.lmi.maximize = true;
      } else {
        cfg.lmi.maximize = false;
        cfg.lmi.gamma = lmi["gamma"].get<double>();
        if (cfg.lmi.gamma < 0.0) throw ConfigError("lmi.gamma: must be nonnegative");
      }
    }
    if (lmi.contains("gamma_hi")) cfg.lmi.gamma_hi = lmi["gamma_hi"].get<double>();
    if (lmi.contains("epsilon")) cfg.lmi.options.epsilon = lmi["epsilon"].get<double>();
    if (lmi.contains("feas_tol")) cfg.lmi.options.feas_tol = lmi["feas_tol"].get<double>();
    if (lmi.contains("trace_budget_factor")) {
      cfg.lmi.options.trace_budget_factor = lmi["trace_budget_factor"].get<double>();
    }
  }

  if (auto it = root.find("simulation"); it != root.end()) {
    const json& sim = *it;
    if (sim.contains("horizon")) cfg.sim.horizon = sim["horizon"].get<double>();
    if (sim.contains("output_dt")) cfg.sim.output_dt = sim["output_dt"].get<double>();
    if (sim.contains("trajectories")) cfg.sim.trajectories = sim["trajectories"].get<int>();
    if (sim.contains("seed")) cfg.sim.seed = sim["seed"].get<std::uint64_t>();
    if (sim.contains("x_p0")) {
      Vector v = parse_vector(sim["x_p0"], "simulation.x_p0");
      if (v.size() != n_p) throw ConfigError("simulation.x_p0: expected length n_p");
      cfg.sim.x_p0 = v;
    }
    if (sim.contains("w0")) {
      Vector v = parse_vector(sim["w0"], "simulation.w0");
      if (v.size() != q) throw ConfigError("simulation.w0: expected length q");
      cfg.sim.w0 = v;
    }
    if (sim.contains("fit_window")) {
      Vector v = parse_vector(sim["fit_window"], "simulation.fit_window");
      if (v.size() != 2 || !(v(0) < v(1))) {
        throw ConfigError("simulation.fit_window: expected [t_start, t_end] with t_start < t_end");
      }
      cfg.sim.fit_window = std::make_pair(v(0), v(1));
    }
    if (!(cfg.sim.horizon > 0.0) || !(cfg.sim.output_dt > 0.0)) {
      throw ConfigError("simulation: horizon and output_dt must be positive");
    }
  }

  if (auto it = root.find("paper_gains"); it != root.end()) {
    const json& pg = *it;
    Matrix qm = parse_matrix(require_field(pg, "Q", "paper_gains"), "paper_gains.Q");
    Matrix wm = parse_matrix(require_field(pg, "W", "paper_gains"), "paper_gains.W");
    cfg.paper_gains = std::make_pair(qm, wm);
  }
  return cfg;
}

}  // namespace

Vector ProblemConfig::default_x_p0() const {
  Vector v(plant.n_p());
  double val = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = val;
    val *= 0.5;
  }
  return v;
}

Vector ProblemConfig::default_w0() const { return Vector::Unit(exo.q(), 0); }

std::pair<double, double> ProblemConfig::default_fit_window() const {
  return {0.25 * sim.horizon, sim.horizon};
}

ProblemConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text, path);
}

ProblemConfig parse_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return parse_json(root, origin);
}

void write_regulator_file(const std::string& path, const RegulatorFile& file) {
  json j;
  json reg;
  reg["G1"] = matrix_to_json(file.regulator.im.G1);
  reg["G2"] = matrix_to_json(file.regulator.im.G2);
  reg["K"] = matrix_to_json(file.regulator.im.K);
  reg["A_zeta"] = matrix_to_json(file.regulator.stab.A_zeta);
  reg["B_zeta"] = matrix_to_json(file.regulator.stab.B_zeta);
  reg["C_zeta"] = matrix_to_json(file.regulator.stab.C_zeta);
  reg["D_zeta"] = matrix_to_json(file.regulator.stab.D_zeta);
  reg["Q"] = matrix_to_json(file.regulator.obs.Q);
  reg["W"] = matrix_to_json(file.regulator.obs.W);
  reg["T"] = matrix_to_json(file.regulator.obs.T);
  reg["L1"] = matrix_to_json(file.regulator.obs.L1);
  reg["L2"] = matrix_to_json(file.regulator.obs.L2);
  reg["H"] = matrix_to_json(file.regulator.obs.H);
  j["regulator"] = reg;

  json fr;
  fr["X_p"] = matrix_to_json(file.francis.X_p);
  fr["R"] = matrix_to_json(file.francis.R);
  fr["X_M"] = matrix_to_json(file.francis.X_M);
  fr["Z"] = matrix_to_json(file.francis.Z);
  fr["residual"] = file.francis.residual;
  j["francis"] = fr;

  json meta;
  meta["beta_achieved"] = file.beta_achieved;
  meta["gamma"] = file.gamma;
  meta["lambda"] = file.lambda;
  meta["certificate"] = file.certificate;
  j["meta"] = meta;

  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write regulator file: " + path);
  out << j.dump(2) << "\n";
}

RegulatorFile read_regulator_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open regulator file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }

  RegulatorFile file;
  const json& reg = require_field(j, "regulator", path);
  file.regulator.im.G1 = parse_matrix(require_field(reg, "G1", "regulator"), "regulator.G1");
  file.regulator.im.G2 = parse_matrix(require_field(reg, "G2", "regulator"), "regulator.G2");
  file.regulator.im.K = parse_matrix(require_field(reg, "K", "regulator"), "regulator.K");
  file.regulator.stab.A_zeta =
      parse_matrix(require_field(reg, "A_zeta", "regulator"), "regulator.A_zeta");
  file.regulator.stab.B_zeta =
      parse_matrix(require_field(reg, "B_zeta", "regulator"), "regulator.B_zeta");
  file.regulator.stab.C_zeta =
      parse_matrix(require_field(reg, "C_zeta", "regulator"), "regulator.C_zeta");
  file.regulator.stab.D_zeta =
      parse_matrix(require_field(reg, "D_zeta", "regulator"), "regulator.D_zeta");
  file.regulator.obs.Q = parse_matrix(require_field(reg, "Q", "regulator"), "regulator.Q");
  file.regulator.obs.W = parse_matrix(require_field(reg, "W", "regulator"), "regulator.W");
  file.regulator.obs.T = parse_matrix(require_field(reg, "T", "regulator"), "regulator.T");
  file.regulator.obs.L1 = parse_matrix(require_field(reg, "L1", "regulator"), "regulator.L1");
  file.regulator.obs.L2 = parse_matrix(require_field(reg, "L2", "regulator"), "regulator.L2");
  file.regulator.obs.H = parse_matrix(require_field(reg, "H", "regulator"), "regulator.H");

  const json& fr = require_field(j, "francis", path);
  file.francis.X_p = parse_matrix(require_field(fr, "X_p", "francis"), "francis.X_p");
  file.francis.R = parse_matrix(require_field(fr, "R", "francis"), "francis.R");
  file.francis.X_M = parse_matrix(require_field(fr, "X_M", "francis"), "francis.X_M");
  file.francis.Z = parse_matrix(require_field(fr, "Z", "francis"), "francis.Z");
  file.francis.residual = require_field(fr, "residual", "francis").get<double>();

  const json& meta = require_field(j, "meta", path);
  file.beta_achieved = require_field(meta, "beta_achieved", "meta").get<double>();
  file.gamma = require_field(meta, "gamma", "meta").get<double>();
  file.lambda = require_field(meta, "lambda", "meta").get<double>();
  file.certificate = require_field(meta, "certificate", "meta").get<double>();
  return file;
}

}  // namespace stochreg
