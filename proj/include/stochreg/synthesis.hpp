#pragma once

#include <optional>

#include "stochreg/linalg.hpp"
#include "stochreg/model.hpp"

// Regulator construction: internal model, observer-based stabilizer via the
// separation principle, regulator/Francis equation solving, and the hybrid
// observer structural matrices.

namespace stochreg {

// Error copy of the exosystem: dz = G1 z + G2 e_hat, u_G = K z.
struct InternalModel {
  Matrix G1;  // n_z x n_z, sigma(G1) contains sigma(S)
  Matrix G2;  // n_z x p
  Matrix K;   // m_p x n_z

  Eigen::Index n_z() const { return G1.rows(); }
};

// Continuous-time stabilizer dzeta = A_zeta zeta + B_zeta u_G,
// u = C_zeta zeta + D_zeta u_G.
struct StabilizerParams {
  Matrix A_zeta;  // n_zeta x n_zeta
  Matrix B_zeta;  // n_zeta x m_p
  Matrix C_zeta;  // m_p x n_zeta
  Matrix D_zeta;  // m_p x m_p

  Eigen::Index n_zeta() const { return A_zeta.rows(); }
};

// Hybrid observer matrices: flow dchi = T chi, jump chi+ = L1 chi + L2 e_p,
// output e_hat = H chi.
struct ObserverParams {
  Matrix T;   // n_chi x n_chi with n_chi = n + p
  Matrix L1;  // n_chi x n_chi
  Matrix L2;  // n_chi x p
  Matrix H;   // p x n_chi
  Matrix Q;   // n x p
  Matrix W;   // p x p

  Eigen::Index n_chi() const { return T.rows(); }
};

// Stabilizer-plant cascade plus internal model in stacked coordinates
// (x_p, zeta, z).
struct AugmentedSystem {
  Matrix A_cl;    // (n_p + n_zeta) square: [[A_p, B_p C_zeta], [0, A_zeta]]
  Matrix B_cl;    // (n_p + n_zeta) x n_z: [B_p D_zeta; B_zeta] K
  Matrix E_cl;    // (n_p + n_zeta) x q: [E_p; 0]
  Matrix H1;      // p x (n_p + n_zeta): [C_p, 0]
  Matrix frakA;   // n x n: [[A_cl, B_cl], [0, G1]]
  Matrix frakAc;  // n x n: frakA + frakBc H2 (Hurwitz by construction)
  Matrix frakBc;  // n x p: [0; G2]
  Matrix H2;      // p x n: [H1, 0]
  double beta_achieved = 0.0;  // -spectral_abscissa(frakAc)

  Eigen::Index n() const { return frakA.rows(); }
  Eigen::Index p() const { return H2.rows(); }
  Eigen::Index n_cl() const { return A_cl.rows(); }
};

struct RegulatorEquationsSolution {
  Matrix X_p;  // n_p x q
  Matrix R;    // m_p x q
  double residual = 0.0;
};

struct FrancisSolution {
  Matrix X_p;  // n_p x q (plant-level solution, filled by the pipeline)
  Matrix R;    // m_p x q
  Matrix X_M;  // (n_p + n_zeta) x q
  Matrix Z;    // n_z x q
  double residual = 0.0;
};

// p-copy internal model: G1 = blkdiag(S, ..., S). The default G2 stacks one
// controllable input column per copy; the default K is the [1 0 ... 0]
// pattern (single error channel only). Overrides pass through verbatim after
// a controllability check.
InternalModel build_internal_model(const ExoSystem& exo, Eigen::Index p,
                                   const std::optional<Matrix>& g2_override = std::nullopt,
                                   const std::optional<Matrix>& k_override = std::nullopt);

// Solves X_p S = A_p X_p + B_p R + E_p, C_p X_p = F_p by Kronecker
// vectorization into a single least-squares system.
RegulatorEquationsSolution solve_regulator_equations(const PlantModel& plant,
                                                     const ExoSystem& exo);

// Single-input pole placement: returns the row gain k with
// sigma(A + b k) == desired (Ackermann). `desired` must be closed under
// conjugation; throws on an uncontrollable pair.
Matrix place_poles_si(const Matrix& a, const Matrix& b, const ComplexVector& desired);

struct PoleSpec {
  ComplexVector controller;
  ComplexVector observer;
};

// Separation-principle design on the composite pair
// A = [[A_p, B_p D_zeta K], [G2 C_p, G1]], B = [B_p; 0], C = [0 K]:
// C_zeta places sigma(A + B C_zeta) at Re <= -beta_target, B_zeta places the
// dual pair twice as fast, A_zeta = A + B C_zeta - B_zeta C. Single-input,
// single-error plants only; MIMO regulators enter via stabilizer overrides.
StabilizerParams design_stabilizer(const PlantModel& plant, const InternalModel& im,
                                   double beta_target, const Matrix& d_zeta,
                                   const std::optional<PoleSpec>& pole_spec = std::nullopt);

// Literal block assembly; throws if frakAc is not Hurwitz.
AugmentedSystem assemble_augmented(const PlantModel& plant, const InternalModel& im,
                                   const StabilizerParams& stab);

// Joint minimum-norm solve of {X_M S - A_cl X_M - B_cl Z = E_cl,
// H1 X_M = F_p, Z S - G1 Z = 0}. X_p and R are left empty.
FrancisSolution solve_francis(const AugmentedSystem& aug, const InternalModel& im,
                              const ExoSystem& exo, const Matrix& e_cl, const Matrix& f_p);

ObserverParams build_observer_matrices(const AugmentedSystem& aug, const Matrix& q,
                                       const Matrix& w);

// Permutation T_zeta mapping reordered coordinates (x_p, z, zeta) to the
// stacked order (x_p, zeta, z); similarity-transforms frakAc to the
// three-block form used by the separation argument.
Matrix bar_transform(Eigen::Index n_p, Eigen::Index n_zeta, Eigen::Index n_z);

// Least-squares solve of {Z S = G1 Z, K Z = R} in Z; returns the solution
// and its residual. Used to validate that a chosen K is consistent with the
// internal model principle.
std::pair<Matrix, double> solve_steady_state_gain(const InternalModel& im,
                                                  const ExoSystem& exo, const Matrix& r);

// Everything the plant needs to close the loop.
struct RegulatorParams {
  InternalModel im;
  StabilizerParams stab;
  ObserverParams obs;
};

}  // namespace stochreg
