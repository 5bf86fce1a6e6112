#pragma once

#include <stdexcept>
#include <vector>

#include "stochreg/linalg.hpp"

// Semidefinite feasibility machinery for the observer-gain design: the
// synthesis LMI in (P1, P2, Qbar, Rbar), the fixed-gain verification LMI in
// (P1, P2), and line searches over the decay rate gamma and the sampling
// intensity lambda.
//
// Feasibility problems are solved by a small phase-I interior-point method:
// maximize the slack t subject to -Block(theta) >= t I with a log-det
// barrier over the semidefinite constraints, Newton steps on (theta, t), and
// a geometric barrier-parameter schedule. The contract is the returned
// residual certificate, not the algorithm. A trace normalization
// trace(P1) + trace(P2) <= 10 (n+p) and a large box on the decision
// variables compactify the feasible set so the max-slack problem is
// well-posed. The solver is deterministic: fixed starting point, fixed
// schedule, no randomized restarts.

namespace stochreg {

struct SolverBreakdown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LmiOptions {
  // P_i >= epsilon I. Must sit well above feas_tol (or scaled-down points
  // masquerade as feasible) and well below the trace budget per dimension
  // (or ill-conditioned certificates are excluded; the worked examples need
  // lambda_min(P)/trace(P) ~ 1e-7).
  double epsilon = 1e-5;
  double trace_budget_factor = 10.0; // trace(P1)+trace(P2) <= factor * (n+p)
  double var_bound = 1e7;            // |theta_k| <= var_bound
  double feas_tol = 1e-7;            // feasible iff lambda_max(Block) <= feas_tol
  double early_exit_slack = 1e-3;    // stop once the slack clears this margin
  double mu_min = 1e-11;
  double mu_shrink = 0.2;
  int max_newton_per_mu = 80;
};

struct LmiProblem {
  Matrix frakA;  // n x n
  Matrix H2;     // p x n
  double lambda = 1.0;
  double gamma = 0.0;
  LmiOptions options;

  Eigen::Index n() const { return frakA.rows(); }
  Eigen::Index p() const { return H2.rows(); }
};

enum class LmiStatus { Feasible, Infeasible };

struct LmiSolution {
  LmiStatus status = LmiStatus::Infeasible;
  Matrix P1;     // n x n symmetric, >= epsilon I
  Matrix P2;     // p x p symmetric, >= epsilon I
  Matrix Qbar;   // n x p
  Matrix Rbar;   // p x p
  Matrix H2;     // copied from the problem for gain recovery
  // lambda_max of the assembled constraint block at the returned point;
  // <= feas_tol when feasible, best achieved violation otherwise.
  double certificate = 0.0;
};

LmiProblem build_synthesis_lmi(const Matrix& frak_a, const Matrix& h2, double lambda,
                               double gamma, const LmiOptions& options = {});

// The Eq.-23-style constraint block for given decision variables; exposed so
// certificates can be recomputed independently of the solver path.
Matrix assemble_lmi_block(const LmiProblem& problem, const Matrix& p1, const Matrix& p2,
                          const Matrix& qbar, const Matrix& rbar);

// Throws SolverBreakdown on numerical failure (distinct from Infeasible).
LmiSolution solve_sdp_feasibility(const LmiProblem& problem);

// Q = P1^{-1} Qbar, W = P2^{-1} Rbar - H2 Q.
std::pair<Matrix, Matrix> recover_observer_gains(const LmiSolution& sol);

// Estimation-error PDMP matrices: flow M, jump N = diag(I_n, 0_p), and
// R_w = W + H2 Q (the paper's jump-block R, renamed to avoid the clash with
// the regulator-equation R).
struct MBlock {
  Matrix M;
  Matrix N;
  Matrix R_w;

  Eigen::Index n_plus_p() const { return M.rows(); }
};

MBlock build_M(const Matrix& frak_a, const Matrix& h2, const Matrix& q, const Matrix& w);

struct GainCertificate {
  LmiStatus status = LmiStatus::Infeasible;
  Matrix P1;
  Matrix P2;
  double certificate = 0.0;  // lambda_max of the fixed-gain block
};

// Fixed-gain Lyapunov LMI, linear in (P1, P2) only.
GainCertificate verify_gains_lmi(const Matrix& frak_a, const Matrix& h2, const Matrix& q,
                                 const Matrix& w, double lambda, double gamma,
                                 const LmiOptions& options = {});

Matrix assemble_gain_block(const Matrix& frak_a, const Matrix& h2, const Matrix& q,
                           const Matrix& w, double lambda, double gamma, const Matrix& p1,
                           const Matrix& p2);

struct MaxGammaResult {
  bool feasible_at_zero = false;
  double gamma_star = 0.0;
  LmiSolution solution;  // solution at gamma_star
  // 10-point sweep around the boundary confirmed the assumed monotonicity.
  bool monotone_ok = true;
};

// Bisection for the largest feasible gamma in [0, gamma_hi], absolute
// tolerance 1e-3.
MaxGammaResult max_gamma(const Matrix& frak_a, const Matrix& h2, double lambda,
                         double gamma_hi, const LmiOptions& options = {});

struct MinLambdaResult {
  bool feasible_at_hi = false;
  double lambda_star = 0.0;
  LmiSolution solution;  // solution at lambda_star
};

// Bisection for the smallest lambda in (0, lambda_hi] keeping the LMI
// feasible at the given gamma, absolute tolerance 1e-3.
MinLambdaResult min_lambda(const Matrix& frak_a, const Matrix& h2, double gamma,
                           double lambda_hi, const LmiOptions& options = {});

}  // namespace stochreg
