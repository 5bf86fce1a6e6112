#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "stochreg/lmi.hpp"
#include "stochreg/model.hpp"
#include "stochreg/synthesis.hpp"

// Problem configuration files (JSON) and the regulator file format. Matrix
// keys mirror the usual symbols (A_p, B_p, E_p, C_p, F_p, S, G1, G2, K,
// A_zeta, ...); matrices are nested row arrays.

namespace stochreg {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StabilizerOverride {
  Matrix A_zeta;
  Matrix B_zeta;
  Matrix C_zeta;
  Matrix D_zeta;
};

struct StabilizerDesign {
  double beta_target = 0.1;
  Matrix D_zeta;  // m_p x m_p, defaults to zero
};

struct LmiSettings {
  bool maximize = true;               // line search for gamma* by default
  double gamma = 0.1;                 // used when maximize == false
  std::optional<double> gamma_hi;     // default: lambda + 2 ||frakA|| + 10
  LmiOptions options;
};

struct SimulationSettings {
  double horizon = 40.0;
  double output_dt = 0.05;
  int trajectories = 200;
  std::uint64_t seed = 1;
  std::optional<Vector> x_p0;  // default [1, 0.5, 0.25, ...]
  std::optional<Vector> w0;    // default e_1
  std::optional<std::pair<double, double>> fit_window;  // default [horizon/4, horizon]
};

struct ProblemConfig {
  PlantModel plant;
  ExoSystem exo;
  SamplingProcess sampling;

  std::optional<Matrix> g1_override;
  std::optional<Matrix> g2_override;
  std::optional<Matrix> k_override;

  // Exactly one of override / design must be present.
  std::optional<StabilizerOverride> stab_override;
  std::optional<StabilizerDesign> stab_design;

  LmiSettings lmi;
  SimulationSettings sim;

  std::optional<std::pair<Matrix, Matrix>> paper_gains;  // (Q, W)

  Vector default_x_p0() const;
  Vector default_w0() const;
  std::pair<double, double> default_fit_window() const;
};

// Throws ConfigError with the offending field named.
ProblemConfig parse_config(const std::string& path);
ProblemConfig parse_config_text(const std::string& text, const std::string& origin);

// Regulator file: every matrix of the synthesized regulator plus the Francis
// solution and certification metadata, serialized at full precision.
struct RegulatorFile {
  RegulatorParams regulator;
  FrancisSolution francis;
  double beta_achieved = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  double certificate = 0.0;
};

void write_regulator_file(const std::string& path, const RegulatorFile& file);
RegulatorFile read_regulator_file(const std::string& path);

}  // namespace stochreg
