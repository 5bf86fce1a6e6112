#pragma once

#include <cstdint>
#include <vector>

#include "stochreg/lmi.hpp"
#include "stochreg/pdmp.hpp"

// Statistical and certificate-based verification: Monte Carlo second-moment
// curves, exponential decay fitting, the Dynkin generator check, and sampler
// distribution tests.

namespace stochreg {

struct MomentCurve {
  std::vector<double> grid;
  std::vector<double> m;          // estimated E[||x~(t)||^2]
  std::vector<double> std_error;  // per-point standard errors
  int n_trajectories = 0;
};

// N independent sample paths in transformed coordinates with per-trajectory
// derived seeds; m(t) = (1/N) sum ||x_i(t)||^2.
MomentCurve monte_carlo_moment(const ClosedLoop& cl, const Vector& x0_transformed, int n,
                               double horizon, double output_dt, double lambda,
                               std::uint64_t seed);

struct DecayEstimate {
  double gamma_hat = 0.0;  // -slope of ln m(t) over the window
  double t_start = 0.0;
  double t_end = 0.0;
  double r_squared = 0.0;
  double gamma_0_theory = 0.0;  // min(2 beta, gamma / 2), filled by the caller
};

// Least-squares fit of ln m(t) over [t_start, t_end]; throws if the curve is
// not strictly positive on the window.
DecayEstimate fit_decay_rate(const MomentCurve& curve, double t_start, double t_end);

struct DynkinReport {
  double max_quadform = 0.0;      // max of the generator form on sampled unit vectors
  double exact_min_eig = 0.0;     // min_eig_sym of the negated generator matrix
  double generator_max_eig = 0.0; // = -exact_min_eig
};

// Generator of V(x) = x^T P x along the error PDMP:
// UV(x) = x^T (He(PM) + lambda (N^T P N - P)) x, evaluated on n_samples
// random unit vectors plus the exact eigenvalue test.
DynkinReport dynkin_check(const MBlock& mb, const Matrix& p1, const Matrix& p2, double lambda,
                          int n_samples, std::uint64_t seed);

struct SamplerReport {
  int n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double ks_statistic = 0.0;     // vs Exp(lambda)
  double ks_critical_1pct = 0.0; // 1.63 / sqrt(n)
  double chi2_statistic = 0.0;   // N_t counts at t = 1 vs Poisson(lambda)
  double chi2_critical_1pct = 0.0;
  int chi2_dof = 0;
};

// Empirical interval statistics over n draws plus a chi-squared test of the
// per-unit-time event counts over n independent runs.
SamplerReport sampler_stats(double lambda, int n, std::uint64_t seed);

}  // namespace stochreg
