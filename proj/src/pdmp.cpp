#include "stochreg/pdmp.hpp"

#include <algorithm>
#include <cmath>

#include "stochreg/rng.hpp"

namespace stochreg {

std::vector<double> sample_intervals(double lambda, double horizon, std::uint64_t seed) {
  if (!(lambda > 0.0)) throw std::invalid_argument("sample_intervals: lambda must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("sample_intervals: horizon must be positive");
  SplitMix64 rng(seed);
  std::vector<double> times;
  double t = 0.0;
  while (true) {
    t += -std::log(rng.uniform_open_closed()) / lambda;
    if (t > horizon) break;
    times.push_back(t);
  }
  return times;
}

ClosedLoop assemble_closed_loop(const PlantModel& plant, const ExoSystem& exo,
                                const RegulatorParams& regulator,
                                const FrancisSolution& francis) {
  plant.validate();
  exo.validate();
  const AugmentedSystem aug = assemble_augmented(plant, regulator.im, regulator.stab);

  const Eigen::Index q = exo.q();
  const Eigen::Index n_p = plant.n_p();
  const Eigen::Index n_zeta = regulator.stab.n_zeta();
  const Eigen::Index n_z = regulator.im.n_z();
  const Eigen::Index n = aug.n();
  const Eigen::Index p = aug.p();
  const Eigen::Index n_chi = n + p;
  const ObserverParams& obs = regulator.obs;
  if (obs.T.rows() != n_chi) {
    throw std::invalid_argument("assemble_closed_loop: observer dimension mismatch");
  }
  if (francis.X_M.rows() != n_p + n_zeta || francis.X_M.cols() != q ||
      francis.Z.rows() != n_z || francis.Z.cols() != q) {
    throw std::invalid_argument("assemble_closed_loop: Francis solution dimension mismatch");
  }

  ClosedLoop cl;
  cl.q = q;
  cl.n_p = n_p;
  cl.n_zeta = n_zeta;
  cl.n_z = n_z;
  cl.n = n;
  cl.p = p;
  cl.X_M = francis.X_M;
  cl.Z = francis.Z;
  cl.C_p = plant.C_p;
  cl.F_p = plant.F_p;
  cl.H2 = aug.H2;

  // Offsets into the original stacked state.
  const Eigen::Index ow = 0;
  const Eigen::Index oxp = q;
  const Eigen::Index ozeta = oxp + n_p;
  const Eigen::Index oz = ozeta + n_zeta;
  const Eigen::Index ochi = oz + n_z;
  const Eigen::Index dim = cl.dim_orig();

  cl.F_orig = Matrix::Zero(dim, dim);
  cl.F_orig.block(ow, ow, q, q) = exo.S;
  cl.F_orig.block(oxp, ow, n_p, q) = plant.E_p;
  cl.F_orig.block(oxp, oxp, n_p, n_p) = plant.A_p;
  cl.F_orig.block(oxp, ozeta, n_p, n_zeta) = plant.B_p * regulator.stab.C_zeta;
  cl.F_orig.block(oxp, oz, n_p, n_z) = plant.B_p * regulator.stab.D_zeta * regulator.im.K;
  cl.F_orig.block(ozeta, ozeta, n_zeta, n_zeta) = regulator.stab.A_zeta;
  cl.F_orig.block(ozeta, oz, n_zeta, n_z) = regulator.stab.B_zeta * regulator.im.K;
  cl.F_orig.block(oz, oz, n_z, n_z) = regulator.im.G1;
  cl.F_orig.block(oz, ochi, n_z, n_chi) = regulator.im.G2 * obs.H;
  cl.F_orig.block(ochi, ochi, n_chi, n_chi) = obs.T;

  // chi+ = L1 chi + L2 (C_p x_p - F_p w); everything else is held.
  cl.J_orig = Matrix::Identity(dim, dim);
  cl.J_orig.block(ochi, ochi, n_chi, n_chi) = obs.L1;
  cl.J_orig.block(ochi, oxp, n_chi, n_p) = obs.L2 * plant.C_p;
  cl.J_orig.block(ochi, ow, n_chi, q) = -obs.L2 * plant.F_p;

  const MBlock mb = build_M(aug.frakA, aug.H2, obs.Q, obs.W);
  const Eigen::Index dim_tr = cl.dim_tr();
  cl.F_tr = Matrix::Zero(dim_tr, dim_tr);
  cl.F_tr.topLeftCorner(n, n) = aug.frakAc;
  cl.F_tr.topRightCorner(n, n_chi) = -aug.frakBc * obs.H;
  cl.F_tr.bottomRightCorner(n_chi, n_chi) = mb.M;

  cl.J_tr = Matrix::Identity(dim_tr, dim_tr);
  cl.J_tr.bottomRightCorner(p, p).setZero();

  // x~_alpha selects (x_p, zeta, z) minus the steady-state manifold.
  Matrix proj_alpha = Matrix::Zero(n, dim);
  proj_alpha.block(0, oxp, n, n) = Matrix::Identity(n, n);
  proj_alpha.block(0, ow, n_p + n_zeta, q) = -francis.X_M;
  proj_alpha.block(n_p + n_zeta, ow, n_z, q) = -francis.Z;

  Matrix sel_chi1 = Matrix::Zero(n, dim);
  sel_chi1.block(0, ochi, n, n) = Matrix::Identity(n, n);
  Matrix sel_chi2 = Matrix::Zero(p, dim);
  sel_chi2.block(0, ochi + n, p, p) = Matrix::Identity(p, p);

  cl.transform = Matrix::Zero(dim_tr, dim);
  cl.transform.topRows(n) = proj_alpha;
  cl.transform.middleRows(n, n) = proj_alpha - sel_chi1;
  cl.transform.bottomRows(p) = sel_chi2 - aug.H2 * (proj_alpha - sel_chi1);
  return cl;
}

Vector transform_state(const ClosedLoop& cl, const Vector& x_orig) {
  if (x_orig.size() != cl.dim_orig()) {
    throw std::invalid_argument("transform_state: state dimension mismatch");
  }
  return cl.transform * x_orig;
}

Vector inverse_transform_state(const ClosedLoop& cl, const Vector& w, const Vector& x_tr) {
  if (w.size() != cl.q || x_tr.size() != cl.dim_tr()) {
    throw std::invalid_argument("inverse_transform_state: dimension mismatch");
  }
  const Vector x_alpha = x_tr.head(cl.n);
  const Vector chi1_t = x_tr.segment(cl.n, cl.n);
  const Vector chi2_t = x_tr.tail(cl.p);

  Vector out(cl.dim_orig());
  out.head(cl.q) = w;
  Vector x_alpha_abs = x_alpha;
  x_alpha_abs.head(cl.n_p + cl.n_zeta) += cl.X_M * w;
  x_alpha_abs.tail(cl.n_z) += cl.Z * w;
  out.segment(cl.q, cl.n) = x_alpha_abs;
  const Vector chi1 = x_alpha - chi1_t;
  out.segment(cl.q + cl.n, cl.n) = chi1;
  out.tail(cl.p) = chi2_t + cl.H2 * chi1_t;
  return out;
}

Vector regulated_error(const ClosedLoop& cl, const Vector& state, Coordinates coords) {
  if (coords == Coordinates::Original) {
    const Vector w = state.head(cl.q);
    const Vector x_p = state.segment(cl.q, cl.n_p);
    return cl.C_p * x_p - cl.F_p * w;
  }
  return cl.H2 * state.head(cl.n);
}

SamplePath simulate(const ClosedLoop& cl, const Vector& x0, double horizon, double output_dt,
                    double lambda, std::uint64_t seed, Coordinates coords,
                    const std::optional<std::vector<double>>& forced_jumps) {
  if (!(horizon > 0.0) || !(output_dt > 0.0)) {
    throw std::invalid_argument("simulate: horizon and output_dt must be positive");
  }
  if (x0.size() != cl.dim(coords)) {
    throw std::invalid_argument("simulate: x0 dimension mismatch for requested coordinates");
  }

  const Matrix& flow = coords == Coordinates::Original ? cl.F_orig : cl.F_tr;
  const Matrix& jump = coords == Coordinates::Original ? cl.J_orig : cl.J_tr;

  SamplePath path;
  path.coords = coords;
  path.seed = seed;
  path.jump_times = forced_jumps ? *forced_jumps : sample_intervals(lambda, horizon, seed);

  const auto n_grid = static_cast<Eigen::Index>(std::floor(horizon / output_dt + 1e-9)) + 1;
  path.grid.reserve(static_cast<std::size_t>(n_grid));
  for (Eigen::Index i = 0; i < n_grid; ++i) path.grid.push_back(static_cast<double>(i) * output_dt);

  const Matrix step_dt = expm(flow, output_dt);

  Vector x = x0;
  double t = 0.0;
  std::size_t ji = 0;

  auto advance_to = [&](double target) {
    const double h = target - t;
    if (h <= 0.0) return;
    if (std::abs(h - output_dt) < 1e-12) {
      x = step_dt * x;
    } else {
      x = expm(flow, h) * x;
    }
    t = target;
  };

  path.states.push_back(x);
  path.e_p.push_back(regulated_error(cl, x, coords));
  path.jump_flag.push_back(0);

  for (std::size_t gi = 1; gi < path.grid.size(); ++gi) {
    const double t_grid = path.grid[gi];
    int jumps_here = 0;
    while (ji < path.jump_times.size() && path.jump_times[ji] <= t_grid) {
      advance_to(path.jump_times[ji]);
      path.jump_states_pre.push_back(x);
      x = jump * x;  // left limit feeds the jump map
      path.jump_states_post.push_back(x);
      ++ji;
      ++jumps_here;
    }
    advance_to(t_grid);
    path.states.push_back(x);
    path.e_p.push_back(regulated_error(cl, x, coords));
    path.jump_flag.push_back(jumps_here);
  }
  return path;
}

}  // namespace stochreg
