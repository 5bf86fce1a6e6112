#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stochreg/linalg.hpp"
#include "stochreg/lmi.hpp"
#include "stochreg/model.hpp"
#include "stochreg/synthesis.hpp"

// Exact simulation of the closed-loop piecewise deterministic Markov
// process: Poisson sampling times, matrix-exponential flow between jumps,
// and the observer reset at each sample. Paths can be generated either in
// the original stacked coordinates (w, x_p, zeta, z, chi) or in the
// transformed error coordinates (x_alpha~, chi1~, chi2~).

namespace stochreg {

enum class Coordinates { Original, Transformed };

struct ClosedLoop {
  // Original stacked state (w, x_p, zeta, z, chi), chi = (chi1, chi2).
  Matrix F_orig;  // flow matrix
  Matrix J_orig;  // jump map (identity except the observer rows)
  // Transformed state (x_alpha~, chi1~, chi2~) of dimension 2n + p.
  Matrix F_tr;    // [[frakAc, -frakBc H], [0, M]]
  Matrix J_tr;    // diag(I_{2n}, 0_p)
  // Linear map original -> transformed (w is projected out).
  Matrix transform;

  // Pieces kept for the inverse transform and error extraction.
  Matrix X_M;  // (n_p + n_zeta) x q
  Matrix Z;    // n_z x q
  Matrix C_p;
  Matrix F_p;
  Matrix H2;

  Eigen::Index q = 0;
  Eigen::Index n_p = 0;
  Eigen::Index n_zeta = 0;
  Eigen::Index n_z = 0;
  Eigen::Index n = 0;  // n_p + n_zeta + n_z
  Eigen::Index p = 0;

  Eigen::Index dim_orig() const { return q + n + (n + p); }
  Eigen::Index dim_tr() const { return 2 * n + p; }
  Eigen::Index dim(Coordinates c) const {
    return c == Coordinates::Original ? dim_orig() : dim_tr();
  }
};

struct SamplePath {
  Coordinates coords = Coordinates::Original;
  std::uint64_t seed = 0;
  std::vector<double> jump_times;           // strictly increasing, <= horizon
  std::vector<double> grid;                 // output times, grid[0] == 0
  std::vector<Vector> states;               // state per grid time
  std::vector<Vector> e_p;                  // regulated error per grid time
  std::vector<int> jump_flag;               // jumps in (grid[i-1], grid[i]]
  std::vector<Vector> jump_states_pre;      // left limits at jump times
  std::vector<Vector> jump_states_post;     // states right after each jump
};

// Cumulative Poisson event times on [0, horizon]: delta_k = -ln(U_k)/lambda
// with U_k from a SplitMix64 stream. Same seed, same sequence, bit-exactly.
std::vector<double> sample_intervals(double lambda, double horizon, std::uint64_t seed);

ClosedLoop assemble_closed_loop(const PlantModel& plant, const ExoSystem& exo,
                                const RegulatorParams& regulator,
                                const FrancisSolution& francis);

// Exact integration: within each inter-jump interval the state advances by
// expm(F, h); jumps apply the jump map to the left-limit state. Output is
// sampled on the uniform grid (cached expm(F, dt) for regular steps). A
// forced jump list overrides the Poisson sampler (used to replay a jump
// sequence across coordinate systems).
SamplePath simulate(const ClosedLoop& cl, const Vector& x0, double horizon, double output_dt,
                    double lambda, std::uint64_t seed, Coordinates coords,
                    const std::optional<std::vector<double>>& forced_jumps = std::nullopt);

// x~_M = x_M - X_M w, z~ = z - Z w, chi1~ = x~_alpha - chi1,
// chi2~ = chi2 - H2 chi1~.
Vector transform_state(const ClosedLoop& cl, const Vector& x_orig);

// Inverse map; needs the exosystem state that the transform projected out.
Vector inverse_transform_state(const ClosedLoop& cl, const Vector& w, const Vector& x_tr);

// Regulated error for a state in either coordinate system.
Vector regulated_error(const ClosedLoop& cl, const Vector& state, Coordinates coords);

}  // namespace stochreg
