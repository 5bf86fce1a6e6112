#pragma once

#include <complex>
#include <string>
#include <vector>

#include "stochreg/linalg.hpp"

// Problem data: LTI plant, neutrally stable exosystem, Poisson sampling
// process, and the solvability checks (stabilizability, detectability,
// non-resonance, neutral stability).

namespace stochreg {

// dx_p = A_p x_p + B_p u + E_p w,  y_p = C_p x_p,  e_p = y_p - F_p w
struct PlantModel {
  Matrix A_p;  // n_p x n_p
  Matrix B_p;  // n_p x m_p
  Matrix E_p;  // n_p x q
  Matrix C_p;  // p x n_p
  Matrix F_p;  // p x q

  Eigen::Index n_p() const { return A_p.rows(); }
  Eigen::Index m_p() const { return B_p.cols(); }
  Eigen::Index p() const { return C_p.rows(); }
  Eigen::Index q() const { return E_p.cols(); }

  // Throws std::invalid_argument (with the offending field named) on
  // dimension inconsistency or non-finite entries.
  void validate() const;
};

// dw = S w, all eigenvalues on the imaginary axis
struct ExoSystem {
  Matrix S;  // q x q

  Eigen::Index q() const { return S.rows(); }
  void validate() const;
};

// Inter-sample intervals are i.i.d. Exp(lambda); mean interval 1/lambda.
struct SamplingProcess {
  double lambda = 1.0;

  void validate() const;
};

// Outcome of a PBH-style rank test; `witness` lists the eigenvalues at which
// the rank drops.
struct CheckResult {
  bool ok = false;
  std::vector<std::complex<double>> witness;
};

// rank [A - lambda I, B] == n at every eigenvalue with Re >= -tol.
CheckResult check_stabilizable(const Matrix& a, const Matrix& b);

// Dual test via (A^T, C^T).
CheckResult check_detectable(const Matrix& a, const Matrix& c);

// rank [[A_p - lambda I, B_p], [C_p, 0]] full at every eigenvalue of S.
CheckResult check_nonresonance(const PlantModel& plant, const ExoSystem& exo);

struct NeutralStabilityResult {
  bool ok = false;            // eigenvalues on the axis (within tol::kNeutral)
  bool diagonalizable = false;
  std::string warning;        // set when accepted despite a Jordan block
};

// Eigenvalues within tol::kNeutral of the imaginary axis AND S
// diagonalizable. A defective S with on-axis eigenvalues is accepted with a
// warning so that ramp-generating exosystems still pass through.
NeutralStabilityResult check_neutrally_stable(const ExoSystem& exo);

}  // namespace stochreg
