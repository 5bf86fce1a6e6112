#include "stochreg/lmi.hpp"

#include <cmath>
#include <limits>

namespace stochreg {

namespace {

// ---------------------------------------------------------------------------
// Phase-I max-slack solver for affine semidefinite feasibility.
//
// Variables theta in R^m plus a scalar slack t. Matrix blocks
// G_b(theta) = C_b + sum_k theta_k A_{b,k} must stay positive definite;
// blocks flagged `slack` are shifted to G_b(theta) - t I. Scalar constraints
// c + a^T theta > 0 and a symmetric box |theta_k| <= B complete the barrier.
// ---------------------------------------------------------------------------

struct MatrixBlockSpec {
  Matrix c0;
  std::vector<Matrix> basis;        // one entry per variable (may be zero)
  std::vector<int> active;          // variables with a nonzero basis matrix
  bool slack = false;

  void finalize() {
    active.clear();
    for (int k = 0; k < static_cast<int>(basis.size()); ++k) {
      if (basis[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff() > 0.0) active.push_back(k);
    }
  }

  Matrix evaluate(const Vector& theta, double t) const {
    Matrix g = c0;
    for (int k : active) g += theta(k) * basis[static_cast<std::size_t>(k)];
    if (slack) g.diagonal().array() -= t;
    return g;
  }
};

struct ScalarConstraint {
  double c0 = 0.0;
  Vector a;

  double evaluate(const Vector& theta) const { return c0 + a.dot(theta); }
};

struct PhaseOneProblem {
  std::vector<MatrixBlockSpec> blocks;
  std::vector<ScalarConstraint> scalars;
  Vector box_bounds;  // per-variable |theta_k| <= box_bounds(k)
  Vector theta0;
};

struct PhaseOneResult {
  Vector theta;
  double slack = 0.0;
};

bool interior_point_ok(const PhaseOneProblem& pb, const Vector& theta, double t,
                       double* barrier_sum) {
  double total = 0.0;
  for (const auto& block : pb.blocks) {
    const Matrix g = block.evaluate(theta, t);
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) return false;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) return false;
      total += 2.0 * std::log(l(i, i));
    }
  }
  for (const auto& sc : pb.scalars) {
    const double s = sc.evaluate(theta);
    if (!(s > 0.0)) return false;
    total += std::log(s);
  }
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double lo = pb.box_bounds(k) + theta(k);
    const double hi = pb.box_bounds(k) - theta(k);
    if (!(lo > 0.0) || !(hi > 0.0)) return false;
    total += std::log(lo) + std::log(hi);
  }
  if (!std::isfinite(total)) return false;
  if (barrier_sum) *barrier_sum = total;
  return true;
}

// Equilibrate decision variables so every basis matrix has roughly unit
// magnitude: theta_k = d_k * theta'_k. Returns the scaling d.
Vector equilibrate(PhaseOneProblem& pb) {
  const Eigen::Index m = pb.theta0.size();
  Vector d = Vector::Ones(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    double mag = 0.0;
    for (const auto& block : pb.blocks) {
      mag = std::max(mag, block.basis[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff());
    }
    for (const auto& sc : pb.scalars) mag = std::max(mag, std::abs(sc.a(k)));
    if (mag > 0.0) d(k) = 1.0 / mag;
  }
  for (auto& block : pb.blocks) {
    for (Eigen::Index k = 0; k < m; ++k) block.basis[static_cast<std::size_t>(k)] *= d(k);
  }
  for (auto& sc : pb.scalars) sc.a = sc.a.cwiseProduct(d);
  pb.theta0 = pb.theta0.cwiseQuotient(d);
  pb.box_bounds = pb.box_bounds.cwiseQuotient(d);
  return d;
}

// f(theta, t) = -objective_t * t - mu * (sum of barrier logs); +inf outside
// the interior.
double barrier_objective(const PhaseOneProblem& pb, const Vector& theta, double t, double mu,
                         double objective_t) {
  double logs = 0.0;
  if (!interior_point_ok(pb, theta, t, &logs)) {
    return std::numeric_limits<double>::infinity();
  }
  return -objective_t * t - mu * logs;
}

// One centering sweep of damped Newton iterations at fixed mu. When
// `with_t` the slack is an extra variable with objective -t; otherwise t
// stays frozen at its current value. Returns false if the sweep stalled.
bool newton_sweep(const PhaseOneProblem& pb, Vector& theta, double& t, double mu, bool with_t,
                  int max_iters, double early_exit_slack) {
  const Eigen::Index m = theta.size();
  const Eigen::Index dim = with_t ? m + 1 : m;

  for (int it = 0; it < max_iters; ++it) {
    if (with_t && t >= early_exit_slack) return true;

    Vector grad = Vector::Zero(dim);
    Matrix hess = Matrix::Zero(dim, dim);
    if (with_t) grad(m) = -1.0;

    for (const auto& block : pb.blocks) {
      const Matrix g = block.evaluate(theta, t);
      Eigen::LLT<Matrix> llt(g);
      if (llt.info() != Eigen::Success) throw SolverBreakdown("barrier block lost definiteness");
      const Matrix s = llt.solve(Matrix::Identity(g.rows(), g.rows()));

      std::vector<Matrix> y;
      y.reserve(block.active.size());
      for (int k : block.active) y.push_back(s * block.basis[static_cast<std::size_t>(k)]);

      for (std::size_t a = 0; a < block.active.size(); ++a) {
        const int ka = block.active[a];
        grad(ka) -= mu * y[a].trace();
        for (std::size_t b = a; b < block.active.size(); ++b) {
          const int kb = block.active[b];
          const double h = mu * (y[a].array() * y[b].transpose().array()).sum();
          hess(ka, kb) += h;
          if (ka != kb) hess(kb, ka) += h;
        }
      }
      if (block.slack && with_t) {
        grad(m) += mu * s.trace();
        for (std::size_t a = 0; a < block.active.size(); ++a) {
          const int ka = block.active[a];
          const double h = -mu * (y[a].array() * s.transpose().array()).sum();
          hess(ka, m) += h;
          hess(m, ka) += h;
        }
        hess(m, m) += mu * (s.array() * s.transpose().array()).sum();
      }
    }

    for (const auto& sc : pb.scalars) {
      const double s = sc.evaluate(theta);
      grad.head(m) -= (mu / s) * sc.a;
      hess.topLeftCorner(m, m) += (mu / (s * s)) * (sc.a * sc.a.transpose());
    }
    for (Eigen::Index k = 0; k < m; ++k) {
      const double lo = pb.box_bounds(k) + theta(k);
      const double hi = pb.box_bounds(k) - theta(k);
      grad(k) += mu * (1.0 / hi - 1.0 / lo);
      hess(k, k) += mu * (1.0 / (hi * hi) + 1.0 / (lo * lo));
    }

    // Damped Newton step with a ridge fallback.
    Vector step;
    double ridge = 0.0;
    const double ridge0 = 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 40; ++attempt) {
      Matrix h = hess;
      h.diagonal().array() += ridge;
      Eigen::LDLT<Matrix> ldlt(h);
      if (ldlt.info() == Eigen::Success) {
        step = ldlt.solve(-grad);
        if (step.allFinite() && grad.dot(step) < 0.0) break;
      }
      ridge = (ridge == 0.0) ? ridge0 : ridge * 10.0;
      step.resize(0);
    }
    if (step.size() == 0) throw SolverBreakdown("Newton system could not be solved");

    const double gd = grad.dot(step);
    const double objective_t = with_t ? 1.0 : 0.0;
    const double f0 = barrier_objective(pb, theta, t, mu, objective_t);
    double alpha = 1.0;
    bool accepted = false;
    while (alpha > 1e-14) {
      const Vector theta_new = theta + alpha * step.head(m);
      const double t_new = with_t ? t + alpha * step(m) : t;
      const double f_new = barrier_objective(pb, theta_new, t_new, mu, objective_t);
      if (f_new <= f0 + 1e-4 * alpha * gd) {
        theta = theta_new;
        t = t_new;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) return false;                                 // stalled
    if (std::abs(gd) < 1e-12 * (1.0 + std::abs(f0))) return true;  // converged
  }
  return true;
}

PhaseOneResult maximize_slack(PhaseOneProblem pb, const LmiOptions& opt) {
  const Vector scale = equilibrate(pb);
  Vector theta = pb.theta0;

  // Initial slack strictly below the smallest eigenvalue of every slack
  // block so the shifted blocks start positive definite.
  double min_lmin = std::numeric_limits<double>::infinity();
  for (const auto& block : pb.blocks) {
    if (!block.slack) continue;
    min_lmin = std::min(min_lmin, min_eig_sym(block.evaluate(theta, 0.0)));
  }
  if (!std::isfinite(min_lmin)) min_lmin = 0.0;
  double t = min_lmin - 0.5 * (1.0 + std::abs(min_lmin));

  if (!interior_point_ok(pb, theta, t, nullptr)) {
    throw SolverBreakdown("phase-I start is not interior");
  }

  double mu = std::max(1.0, std::abs(t));
  while (mu >= opt.mu_min) {
    newton_sweep(pb, theta, t, mu, /*with_t=*/true, opt.max_newton_per_mu,
                 opt.early_exit_slack);
    if (t >= opt.early_exit_slack) break;
    mu *= opt.mu_shrink;
  }

  // Centering pass: with the slack frozen at half the achieved margin, walk
  // to the analytic center so the returned point (and any gains recovered
  // from it) is well-conditioned instead of an extreme vertex.
  if (t > 0.0) {
    Vector centered = theta;
    double t_freeze = 0.5 * t;
    bool ok = true;
    for (int round = 0; round < 6 && ok; ++round) {
      ok = newton_sweep(pb, centered, t_freeze, 1.0, /*with_t=*/false, opt.max_newton_per_mu,
                        opt.early_exit_slack);
    }
    if (interior_point_ok(pb, centered, t_freeze, nullptr)) theta = centered;
  }

  // Report the final slack of the returned point.
  double slack = std::numeric_limits<double>::infinity();
  for (const auto& block : pb.blocks) {
    if (!block.slack) continue;
    slack = std::min(slack, min_eig_sym(block.evaluate(theta, 0.0)));
  }
  if (!std::isfinite(slack)) slack = t;
  return {theta.cwiseProduct(scale), slack};
}

// ---------------------------------------------------------------------------
// Variable layouts
// ---------------------------------------------------------------------------

// Packed layout [svec(P1), svec(P2), Qbar, Rbar]; the last two groups are
// omitted for the fixed-gain problem.
struct VarLayout {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  bool with_gain_vars = true;

  Eigen::Index sym1() const { return n * (n + 1) / 2; }
  Eigen::Index sym2() const { return p * (p + 1) / 2; }
  Eigen::Index count() const {
    return sym1() + sym2() + (with_gain_vars ? n * p + p * p : 0);
  }

  void unpack(const Vector& theta, Matrix& p1, Matrix& p2, Matrix& qbar, Matrix& rbar) const {
    p1 = Matrix::Zero(n, n);
    p2 = Matrix::Zero(p, p);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        p1(i, j) = p1(j, i) = theta(k++);
      }
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        p2(i, j) = p2(j, i) = theta(k++);
      }
    if (with_gain_vars) {
      qbar = Matrix::Zero(n, p);
      rbar = Matrix::Zero(p, p);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) qbar(i, j) = theta(k++);
      for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) rbar(i, j) = theta(k++);
    } else {
      qbar.resize(0, 0);
      rbar.resize(0, 0);
    }
  }

  Vector pack(const Matrix& p1, const Matrix& p2, const Matrix& qbar, const Matrix& rbar) const {
    Vector theta = Vector::Zero(count());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) theta(k++) = p1(i, j);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) theta(k++) = p2(i, j);
    if (with_gain_vars) {
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) theta(k++) = qbar(i, j);
      for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) theta(k++) = rbar(i, j);
    }
    return theta;
  }

  // Indices of diagonal entries of P1 and P2 in the packed vector (for the
  // trace constraint).
  std::vector<Eigen::Index> diag_indices() const {
    std::vector<Eigen::Index> idx;
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        if (i == j) idx.push_back(k);
        ++k;
      }
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        if (i == j) idx.push_back(k);
        ++k;
      }
    return idx;
  }
};

// Builds a matrix block spec by probing an affine map with unit variable
// vectors (the maps here are linear, so the constant term is map(0)).
template <typename MapFn>
MatrixBlockSpec probe_linear_block(const VarLayout& layout, MapFn&& map, bool slack) {
  MatrixBlockSpec spec;
  const Eigen::Index m = layout.count();
  spec.c0 = map(Vector::Zero(m));
  spec.basis.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index k = 0; k < m; ++k) {
    Vector unit = Vector::Zero(m);
    unit(k) = 1.0;
    spec.basis.push_back(map(unit) - spec.c0);
  }
  spec.slack = slack;
  spec.finalize();
  return spec;
}

void append_floor_blocks(PhaseOneProblem& pb, const VarLayout& layout, double epsilon) {
  // P1 - eps I > 0 and P2 - eps I > 0.
  auto p1_map = [&](const Vector& theta) {
    Matrix p1, p2, qb, rb;
    layout.unpack(theta, p1, p2, qb, rb);
    Matrix g = p1;
    g.diagonal().array() -= epsilon;
    return g;
  };
  auto p2_map = [&](const Vector& theta) {
    Matrix p1, p2, qb, rb;
    layout.unpack(theta, p1, p2, qb, rb);
    Matrix g = p2;
    g.diagonal().array() -= epsilon;
    return g;
  };
  pb.blocks.push_back(probe_linear_block(layout, p1_map, /*slack=*/false));
  pb.blocks.push_back(probe_linear_block(layout, p2_map, /*slack=*/false));
}

void append_trace_budget(PhaseOneProblem& pb, const VarLayout& layout, double budget) {
  ScalarConstraint sc;
  sc.c0 = budget;
  sc.a = Vector::Zero(layout.count());
  for (Eigen::Index idx : layout.diag_indices()) sc.a(idx) = -1.0;
  pb.scalars.push_back(sc);
}

void validate_problem_data(const Matrix& frak_a, const Matrix& h2, double lambda,
                           double gamma) {
  if (frak_a.rows() != frak_a.cols()) throw std::invalid_argument("frakA must be square");
  if (h2.cols() != frak_a.rows()) throw std::invalid_argument("H2 must be p x n");
  if (h2.rows() < 1) throw std::invalid_argument("H2 must have at least one row");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
  if (!all_finite(frak_a) || !all_finite(h2)) {
    throw std::invalid_argument("LMI data has non-finite entries");
  }
}

}  // namespace

LmiProblem build_synthesis_lmi(const Matrix& frak_a, const Matrix& h2, double lambda,
                               double gamma, const LmiOptions& options) {
  validate_problem_data(frak_a, h2, lambda, gamma);
  LmiProblem problem;
  problem.frakA = frak_a;
  problem.H2 = h2;
  problem.lambda = lambda;
  problem.gamma = gamma;
  problem.options = options;
  return problem;
}

Matrix assemble_lmi_block(const LmiProblem& problem, const Matrix& p1, const Matrix& p2,
                          const Matrix& qbar, const Matrix& rbar) {
  const Eigen::Index n = problem.n();
  const Eigen::Index p = problem.p();
  const Matrix& a = problem.frakA;
  const Matrix& h2 = problem.H2;

  Matrix block(n + p, n + p);
  block.topLeftCorner(n, n) = he(p1 * a - qbar * h2) + problem.gamma * p1;
  const Matrix offdiag =
      -a.transpose() * h2.transpose() * p2 + h2.transpose() * rbar.transpose() - qbar;
  block.topRightCorner(n, p) = offdiag;
  block.bottomLeftCorner(p, n) = offdiag.transpose();
  block.bottomRightCorner(p, p) = he(rbar) + (problem.gamma - problem.lambda) * p2;
  return block;
}

namespace {

// One synthesis solve. A finite gain_box c adds the Schur blocks
// [[c P1, Qbar], [Qbar^T, c I]] >= 0 and [[c P2, Rbar], [Rbar^T, c I]] >= 0,
// which bound ||P1^{-1/2} Qbar|| <= c and hence keep the recovered gains
// Q = P1^{-1} Qbar moderate instead of letting them blow up along the thin
// directions of P1.
LmiSolution solve_synthesis_once(const LmiProblem& problem, double gain_box) {
  const Eigen::Index n = problem.n();
  const Eigen::Index p = problem.p();
  const LmiOptions& opt = problem.options;

  VarLayout layout{n, p, /*with_gain_vars=*/true};

  PhaseOneProblem pb;
  auto main_map = [&](const Vector& theta) {
    Matrix p1, p2, qb, rb;
    layout.unpack(theta, p1, p2, qb, rb);
    return Matrix(-assemble_lmi_block(problem, p1, p2, qb, rb));
  };
  pb.blocks.push_back(probe_linear_block(layout, main_map, /*slack=*/true));
  append_floor_blocks(pb, layout, opt.epsilon);
  const double budget = opt.trace_budget_factor * static_cast<double>(n + p);
  append_trace_budget(pb, layout, budget);

  if (std::isfinite(gain_box)) {
    auto q_box = [&](const Vector& theta) {
      Matrix p1, p2, qb, rb;
      layout.unpack(theta, p1, p2, qb, rb);
      Matrix g = Matrix::Zero(n + p, n + p);
      g.topLeftCorner(n, n) = gain_box * p1;
      g.topRightCorner(n, p) = qb;
      g.bottomLeftCorner(p, n) = qb.transpose();
      g.bottomRightCorner(p, p) = gain_box * Matrix::Identity(p, p);
      return g;
    };
    auto r_box = [&](const Vector& theta) {
      Matrix p1, p2, qb, rb;
      layout.unpack(theta, p1, p2, qb, rb);
      Matrix g = Matrix::Zero(2 * p, 2 * p);
      g.topLeftCorner(p, p) = gain_box * p2;
      g.topRightCorner(p, p) = rb;
      g.bottomLeftCorner(p, p) = rb.transpose();
      g.bottomRightCorner(p, p) = gain_box * Matrix::Identity(p, p);
      return g;
    };
    pb.blocks.push_back(probe_linear_block(layout, q_box, /*slack=*/false));
    pb.blocks.push_back(probe_linear_block(layout, r_box, /*slack=*/false));
  }

  const double alpha = budget / (2.0 * static_cast<double>(n + p));
  pb.theta0 = layout.pack(alpha * Matrix::Identity(n, n), alpha * Matrix::Identity(p, p),
                          Matrix::Zero(n, p), Matrix::Zero(p, p));
  pb.box_bounds = Vector::Constant(layout.count(), opt.var_bound);

  const PhaseOneResult res = maximize_slack(pb, opt);

  LmiSolution sol;
  layout.unpack(res.theta, sol.P1, sol.P2, sol.Qbar, sol.Rbar);
  sol.H2 = problem.H2;
  sol.certificate =
      max_eig_sym(assemble_lmi_block(problem, sol.P1, sol.P2, sol.Qbar, sol.Rbar));
  const bool floors_ok = min_eig_sym(sol.P1) >= opt.epsilon - 1e-9 &&
                         min_eig_sym(sol.P2) >= opt.epsilon - 1e-9;
  sol.status = (sol.certificate <= opt.feas_tol && floors_ok) ? LmiStatus::Feasible
                                                              : LmiStatus::Infeasible;
  return sol;
}

}  // namespace

LmiSolution solve_sdp_feasibility(const LmiProblem& problem) {
  // Status comes from the unconstrained-gain problem (sharp feasibility
  // boundary); the returned point is then re-solved under the tightest
  // feasible gain box so the recovered observer is numerically usable.
  LmiSolution plain = solve_synthesis_once(problem, std::numeric_limits<double>::infinity());
  if (plain.status != LmiStatus::Feasible) return plain;
  for (double c : {1e2, 1e3, 1e4, 1e5}) {
    const LmiSolution boxed = solve_synthesis_once(problem, c);
    if (boxed.status == LmiStatus::Feasible) return boxed;
  }
  return plain;
}

std::pair<Matrix, Matrix> recover_observer_gains(const LmiSolution& sol) {
  Eigen::LLT<Matrix> llt1(sol.P1);
  Eigen::LLT<Matrix> llt2(sol.P2);
  if (llt1.info() != Eigen::Success || llt2.info() != Eigen::Success) {
    throw std::invalid_argument("recover_observer_gains: P1, P2 must be positive definite");
  }
  const Matrix q = llt1.solve(sol.Qbar);
  const Matrix w = llt2.solve(sol.Rbar) - sol.H2 * q;
  return {q, w};
}

MBlock build_M(const Matrix& frak_a, const Matrix& h2, const Matrix& q, const Matrix& w) {
  const Eigen::Index n = frak_a.rows();
  const Eigen::Index p = h2.rows();
  if (frak_a.cols() != n || h2.cols() != n || q.rows() != n || q.cols() != p ||
      w.rows() != p || w.cols() != p) {
    throw std::invalid_argument("build_M: dimension mismatch");
  }
  MBlock mb;
  mb.R_w = w + h2 * q;
  mb.M = Matrix::Zero(n + p, n + p);
  mb.M.topLeftCorner(n, n) = frak_a - q * h2;
  mb.M.topRightCorner(n, p) = -q;
  mb.M.bottomLeftCorner(p, n) = -h2 * frak_a + mb.R_w * h2;
  mb.M.bottomRightCorner(p, p) = mb.R_w;
  mb.N = Matrix::Zero(n + p, n + p);
  mb.N.topLeftCorner(n, n) = Matrix::Identity(n, n);
  return mb;
}

Matrix assemble_gain_block(const Matrix& frak_a, const Matrix& h2, const Matrix& q,
                           const Matrix& w, double lambda, double gamma, const Matrix& p1,
                           const Matrix& p2) {
  const Eigen::Index n = frak_a.rows();
  const Eigen::Index p = h2.rows();
  const Matrix r_w = w + h2 * q;

  Matrix block(n + p, n + p);
  block.topLeftCorner(n, n) = he(p1 * (frak_a - q * h2)) + gamma * p1;
  const Matrix offdiag = -frak_a.transpose() * h2.transpose() * p2 +
                         h2.transpose() * r_w.transpose() * p2 - p1 * q;
  block.topRightCorner(n, p) = offdiag;
  block.bottomLeftCorner(p, n) = offdiag.transpose();
  block.bottomRightCorner(p, p) = he(p2 * r_w) + (gamma - lambda) * p2;
  return block;
}

GainCertificate verify_gains_lmi(const Matrix& frak_a, const Matrix& h2, const Matrix& q,
                                 const Matrix& w, double lambda, double gamma,
                                 const LmiOptions& options) {
  validate_problem_data(frak_a, h2, lambda, gamma);
  const Eigen::Index n = frak_a.rows();
  const Eigen::Index p = h2.rows();
  if (q.rows() != n || q.cols() != p || w.rows() != p || w.cols() != p) {
    throw std::invalid_argument("verify_gains_lmi: Q must be n x p and W p x p");
  }

  VarLayout layout{n, p, /*with_gain_vars=*/false};

  PhaseOneProblem pb;
  // box bounds set after theta0 below
  auto main_map = [&](const Vector& theta) {
    Matrix p1, p2, qb, rb;
    layout.unpack(theta, p1, p2, qb, rb);
    return Matrix(-assemble_gain_block(frak_a, h2, q, w, lambda, gamma, p1, p2));
  };
  pb.blocks.push_back(probe_linear_block(layout, main_map, /*slack=*/true));
  append_floor_blocks(pb, layout, options.epsilon);
  const double budget = options.trace_budget_factor * static_cast<double>(n + p);
  append_trace_budget(pb, layout, budget);

  const double alpha = budget / (2.0 * static_cast<double>(n + p));
  pb.theta0 = layout.pack(alpha * Matrix::Identity(n, n), alpha * Matrix::Identity(p, p),
                          Matrix(), Matrix());
  pb.box_bounds = Vector::Constant(layout.count(), options.var_bound);

  const PhaseOneResult res = maximize_slack(pb, options);

  GainCertificate cert;
  Matrix qb, rb;
  layout.unpack(res.theta, cert.P1, cert.P2, qb, rb);
  cert.certificate =
      max_eig_sym(assemble_gain_block(frak_a, h2, q, w, lambda, gamma, cert.P1, cert.P2));
  const bool floors_ok = min_eig_sym(cert.P1) >= options.epsilon - 1e-9 &&
                         min_eig_sym(cert.P2) >= options.epsilon - 1e-9;
  cert.status = (cert.certificate <= options.feas_tol && floors_ok) ? LmiStatus::Feasible
                                                                    : LmiStatus::Infeasible;
  return cert;
}

namespace {

bool synthesis_feasible(const Matrix& frak_a, const Matrix& h2, double lambda, double gamma,
                        const LmiOptions& options, LmiSolution* out) {
  const LmiSolution sol =
      solve_sdp_feasibility(build_synthesis_lmi(frak_a, h2, lambda, gamma, options));
  if (out) *out = sol;
  return sol.status == LmiStatus::Feasible;
}

}  // namespace

MaxGammaResult max_gamma(const Matrix& frak_a, const Matrix& h2, double lambda,
                         double gamma_hi, const LmiOptions& options) {
  if (!(gamma_hi > 0.0)) throw std::invalid_argument("max_gamma: gamma_hi must be positive");
  MaxGammaResult result;

  LmiSolution at_lo;
  if (!synthesis_feasible(frak_a, h2, lambda, 0.0, options, &at_lo)) {
    result.feasible_at_zero = false;
    result.solution = at_lo;
    return result;
  }
  result.feasible_at_zero = true;
  result.gamma_star = 0.0;
  result.solution = at_lo;

  double lo = 0.0;
  double hi = gamma_hi;
  LmiSolution at_hi;
  if (synthesis_feasible(frak_a, h2, lambda, gamma_hi, options, &at_hi)) {
    result.gamma_star = gamma_hi;
    result.solution = at_hi;
  } else {
    while (hi - lo > 1e-3) {
      const double mid = 0.5 * (lo + hi);
      LmiSolution at_mid;
      if (synthesis_feasible(frak_a, h2, lambda, mid, options, &at_mid)) {
        lo = mid;
        result.solution = at_mid;
      } else {
        hi = mid;
      }
    }
    result.gamma_star = lo;
  }

  // Monotonicity cross-check: feasibility along 10 points spanning the
  // boundary must switch from feasible to infeasible exactly once.
  bool seen_infeasible = false;
  for (int j = 0; j < 10; ++j) {
    const double g = result.gamma_star + (j - 5) * 1e-3;
    if (g < 0.0 || g > gamma_hi) continue;
    const bool feas = synthesis_feasible(frak_a, h2, lambda, g, options, nullptr);
    if (!feas) seen_infeasible = true;
    if (feas && seen_infeasible) result.monotone_ok = false;
  }
  return result;
}

MinLambdaResult min_lambda(const Matrix& frak_a, const Matrix& h2, double gamma,
                           double lambda_hi, const LmiOptions& options) {
  if (!(lambda_hi > 0.0)) throw std::invalid_argument("min_lambda: lambda_hi must be positive");
  MinLambdaResult result;

  LmiSolution at_hi;
  if (!synthesis_feasible(frak_a, h2, lambda_hi, gamma, options, &at_hi)) {
    result.feasible_at_hi = false;
    result.solution = at_hi;
    return result;
  }
  result.feasible_at_hi = true;

  double lo = 0.0;
  double hi = lambda_hi;
  result.solution = at_hi;
  // The LMI is evaluated at lambda = 0 as the limiting problem; build_*
  // requires lambda > 0, so probe just above zero.
  const double lambda_floor = 1e-12;
  LmiSolution at_floor;
  if (synthesis_feasible(frak_a, h2, lambda_floor, gamma, options, &at_floor)) {
    result.lambda_star = lambda_floor;
    result.solution = at_floor;
    return result;
  }
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    LmiSolution at_mid;
    if (synthesis_feasible(frak_a, h2, std::max(mid, lambda_floor), gamma, options, &at_mid)) {
      hi = mid;
      result.solution = at_mid;
    } else {
      lo = mid;
    }
  }
  result.lambda_star = hi;
  return result;
}

}  // namespace stochreg
