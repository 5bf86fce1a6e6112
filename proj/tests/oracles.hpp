#pragma once

#include <cmath>
#include <functional>

#include "stochreg/linalg.hpp"
#include "stochreg/rng.hpp"

// Independent test oracles. These deliberately avoid the implementation
// paths they check: the matrix exponential oracle is a plain truncated
// Taylor series, the flow-integration oracle is adaptive small-step Taylor
// on vectors, and the LMI oracle is a grid search.

namespace oracles {

using stochreg::Matrix;
using stochreg::Vector;

// 30-term Taylor series for e^{A t}; accurate to ~1e-16 for ||A t|| <= ~2.
inline Matrix taylor_expm(const Matrix& a, double t, int terms = 30) {
  const Eigen::Index n = a.rows();
  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= terms; ++k) {
    term = term * a * (t / k);
    sum += term;
  }
  return sum;
}

// High-order adaptive reference integrator for dx/dt = F x over [0, t]:
// small steps with a per-step Taylor expansion run to term-level
// convergence. Independent of the scaling-and-squaring + Pade path.
inline Vector reference_flow(const Matrix& f, const Vector& x0, double t,
                             double tol = 1e-14) {
  const double norm = f.cwiseAbs().rowwise().sum().maxCoeff();
  const double h_max = norm > 0.0 ? 0.5 / norm : t;
  Vector x = x0;
  double remaining = t;
  while (remaining > 0.0) {
    const double h = std::min(h_max, remaining);
    Vector term = x;
    Vector sum = x;
    for (int k = 1; k <= 40; ++k) {
      term = f * term * (h / k);
      sum += term;
      if (term.norm() <= tol * (1.0 + sum.norm())) break;
    }
    x = sum;
    remaining -= h;
  }
  return x;
}

// max_i |det(A - lambda_i I)| over a spectrum, via a complex LU determinant.
inline double char_poly_residual(const Matrix& a, const stochreg::ComplexVector& eigs) {
  double worst = 0.0;
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    stochreg::ComplexMatrix shifted =
        a.cast<std::complex<double>>() - eigs(i) * stochreg::ComplexMatrix::Identity(n, n);
    worst = std::max(worst, std::abs(shifted.fullPivLu().determinant()));
  }
  return worst;
}

// Scalar-instance (n = p = 1) LMI feasibility by brute force: coarse grid
// over (p1, p2, qbar, rbar) in [-10, 10]^4 followed by local refinement
// around the best point. Mirrors the 2x2 block
//   [[2(a p1 - qbar) + gamma p1,  -a p2 + rbar - qbar],
//    [*,                          2 rbar + (gamma - lambda) p2]] <= 0
// with p1, p2 >= epsilon.
inline bool scalar_lmi_grid_feasible(double a, double lambda, double gamma,
                                     double epsilon = 1e-5) {
  auto violation = [&](double p1, double p2, double qb, double rb) {
    const double b11 = 2.0 * (a * p1 - qb) + gamma * p1;
    const double b22 = 2.0 * rb + (gamma - lambda) * p2;
    const double b12 = -a * p2 + rb - qb;
    // lambda_max of the symmetric 2x2 [[b11, b12], [b12, b22]].
    const double mean = 0.5 * (b11 + b22);
    const double diff = 0.5 * (b11 - b22);
    return mean + std::sqrt(diff * diff + b12 * b12);
  };

  double best = 1e300;
  double best_pt[4] = {1, 1, 0, 0};
  const int steps = 21;
  for (int i1 = 0; i1 < steps; ++i1) {
    const double p1 = epsilon + (10.0 - epsilon) * i1 / (steps - 1);
    for (int i2 = 0; i2 < steps; ++i2) {
      const double p2 = epsilon + (10.0 - epsilon) * i2 / (steps - 1);
      for (int i3 = 0; i3 < steps; ++i3) {
        const double qb = -10.0 + 20.0 * i3 / (steps - 1);
        for (int i4 = 0; i4 < steps; ++i4) {
          const double rb = -10.0 + 20.0 * i4 / (steps - 1);
          const double v = violation(p1, p2, qb, rb);
          if (v < best) {
            best = v;
            best_pt[0] = p1;
            best_pt[1] = p2;
            best_pt[2] = qb;
            best_pt[3] = rb;
          }
        }
      }
    }
  }

  // Local refinement: shrink a box around the best point.
  double box = 1.0;
  for (int round = 0; round < 12; ++round) {
    double cur[4];
    std::copy(best_pt, best_pt + 4, cur);
    const int local = 5;
    for (int i1 = -local; i1 <= local; ++i1)
      for (int i2 = -local; i2 <= local; ++i2)
        for (int i3 = -local; i3 <= local; ++i3)
          for (int i4 = -local; i4 <= local; ++i4) {
            const double p1 = std::max(epsilon, cur[0] + box * i1 / local);
            const double p2 = std::max(epsilon, cur[1] + box * i2 / local);
            const double qb = cur[2] + box * i3 / local;
            const double rb = cur[3] + box * i4 / local;
            const double v = violation(p1, p2, qb, rb);
            if (v < best) {
              best = v;
              best_pt[0] = p1;
              best_pt[1] = p2;
              best_pt[2] = qb;
              best_pt[3] = rb;
            }
          }
    box *= 0.5;
  }
  return best <= 1e-9;
}

// Deterministic pseudo-random matrices for property tests.
inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                            double scale = 1.0) {
  stochreg::SplitMix64 rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = scale * (2.0 * rng.uniform_open_closed() - 1.0);
    }
  return m;
}

inline Matrix random_symmetric(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
  const Matrix m = random_matrix(n, n, seed, scale);
  return 0.5 * (m + m.transpose());
}

}  // namespace oracles
