#include "stochreg/verify.hpp"

#include <algorithm>
#include <cmath>

#include "stochreg/rng.hpp"

namespace stochreg {

MomentCurve monte_carlo_moment(const ClosedLoop& cl, const Vector& x0_transformed, int n,
                               double horizon, double output_dt, double lambda,
                               std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("monte_carlo_moment: need at least 2 trajectories");

  MomentCurve curve;
  curve.n_trajectories = n;
  std::vector<double> sum;
  std::vector<double> sum_sq;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t stream = derive_stream_seed(seed, static_cast<std::uint64_t>(i));
    const SamplePath path = simulate(cl, x0_transformed, horizon, output_dt, lambda, stream,
                                     Coordinates::Transformed);
    if (curve.grid.empty()) {
      curve.grid = path.grid;
      sum.assign(curve.grid.size(), 0.0);
      sum_sq.assign(curve.grid.size(), 0.0);
    }
    for (std::size_t k = 0; k < path.states.size(); ++k) {
      const double v = path.states[k].squaredNorm();
      sum[k] += v;
      sum_sq[k] += v * v;
    }
  }

  curve.m.resize(curve.grid.size());
  curve.std_error.resize(curve.grid.size());
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    const double mean = sum[k] / n;
    curve.m[k] = mean;
    const double var = std::max(0.0, (sum_sq[k] / n - mean * mean) * n / (n - 1.0));
    curve.std_error[k] = std::sqrt(var / n);
  }
  return curve;
}

DecayEstimate fit_decay_rate(const MomentCurve& curve, double t_start, double t_end) {
  if (!(t_end > t_start)) throw std::invalid_argument("fit_decay_rate: empty window");

  std::vector<double> ts;
  std::vector<double> ys;
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    const double t = curve.grid[k];
    if (t < t_start || t > t_end) continue;
    if (!(curve.m[k] > 0.0)) {
      throw std::invalid_argument("fit_decay_rate: non-positive moment inside the window");
    }
    ts.push_back(t);
    ys.push_back(std::log(curve.m[k]));
  }
  if (ts.size() < 2) throw std::invalid_argument("fit_decay_rate: window contains <2 grid points");

  const double n = static_cast<double>(ts.size());
  double st = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sy += ys[i];
  }
  const double tbar = st / n;
  const double ybar = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxx += (ts[i] - tbar) * (ts[i] - tbar);
    sxy += (ts[i] - tbar) * (ys[i] - ybar);
    syy += (ys[i] - ybar) * (ys[i] - ybar);
  }
  const double slope = sxy / sxx;

  DecayEstimate est;
  est.gamma_hat = -slope;
  est.t_start = ts.front();
  est.t_end = ts.back();
  double ss_res = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double pred = ybar + slope * (ts[i] - tbar);
    ss_res += (ys[i] - pred) * (ys[i] - pred);
  }
  est.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return est;
}

DynkinReport dynkin_check(const MBlock& mb, const Matrix& p1, const Matrix& p2, double lambda,
                          int n_samples, std::uint64_t seed) {
  const Eigen::Index n = p1.rows();
  const Eigen::Index p = p2.rows();
  if (mb.M.rows() != n + p) throw std::invalid_argument("dynkin_check: dimension mismatch");

  Matrix big_p = Matrix::Zero(n + p, n + p);
  big_p.topLeftCorner(n, n) = p1;
  big_p.bottomRightCorner(p, p) = p2;

  const Matrix generator =
      he(big_p * mb.M) + lambda * (mb.N.transpose() * big_p * mb.N - big_p);

  DynkinReport report;
  report.exact_min_eig = min_eig_sym(-generator);
  report.generator_max_eig = -report.exact_min_eig;

  SplitMix64 rng(seed);
  double max_form = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_samples; ++s) {
    Vector x(n + p);
    for (Eigen::Index i = 0; i < n + p; ++i) {
      // Box-Muller; the pair's second member is discarded for simplicity.
      const double u1 = rng.uniform_open_closed();
      const double u2 = rng.uniform_open_closed();
      x(i) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    const double norm = x.norm();
    if (norm == 0.0) continue;
    x /= norm;
    max_form = std::max(max_form, x.dot(generator * x));
  }
  report.max_quadform = max_form;
  return report;
}

namespace {

// chi^2 inverse CDF at 0.99 by the Wilson-Hilferty approximation; used only
// as a test-harness constant.
double chi2_critical_1pct(int dof) {
  const double k = static_cast<double>(dof);
  const double z = 2.3263478740408408;  // Phi^{-1}(0.99)
  const double a = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * a * a * a;
}

double poisson_pmf(double mean, int k) {
  double log_p = -mean + k * std::log(mean);
  for (int i = 2; i <= k; ++i) log_p -= std::log(static_cast<double>(i));
  return std::exp(log_p);
}

}  // namespace

SamplerReport sampler_stats(double lambda, int n, std::uint64_t seed) {
  if (!(lambda > 0.0)) throw std::invalid_argument("sampler_stats: lambda must be positive");
  if (n < 1000) throw std::invalid_argument("sampler_stats: need at least 1e3 samples");

  SamplerReport report;
  report.n = n;

  SplitMix64 rng(seed);
  std::vector<double> deltas(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (auto& d : deltas) {
    d = -std::log(rng.uniform_open_closed()) / lambda;
    sum += d;
  }
  report.mean = sum / n;
  double ss = 0.0;
  for (double d : deltas) ss += (d - report.mean) * (d - report.mean);
  report.variance = ss / (n - 1.0);

  // Kolmogorov-Smirnov against Exp(lambda).
  std::sort(deltas.begin(), deltas.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double cdf = 1.0 - std::exp(-lambda * deltas[i]);
    const double hi = (static_cast<double>(i) + 1.0) / n - cdf;
    const double lo = cdf - static_cast<double>(i) / n;
    ks = std::max(ks, std::max(hi, lo));
  }
  report.ks_statistic = ks;
  report.ks_critical_1pct = 1.63 / std::sqrt(static_cast<double>(n));

  // Counts of events in [0, 1] over n independent runs vs Poisson(lambda).
  std::vector<int> counts;
  int max_count = 0;
  for (int r = 0; r < n; ++r) {
    SplitMix64 run(derive_stream_seed(seed ^ 0x5bf03635ull, static_cast<std::uint64_t>(r)));
    double t = 0.0;
    int c = 0;
    while (true) {
      t += -std::log(run.uniform_open_closed()) / lambda;
      if (t > 1.0) break;
      ++c;
    }
    counts.push_back(c);
    max_count = std::max(max_count, c);
  }

  // Pool right-tail bins until every expected count is >= 5.
  std::vector<double> expected;
  std::vector<double> observed;
  double tail_prob = 1.0;
  for (int k = 0; k <= max_count; ++k) {
    const double pk = poisson_pmf(lambda, k);
    if (pk * n < 5.0 && k > 0) break;
    expected.push_back(pk * n);
    tail_prob -= pk;
    int obs = 0;
    for (int c : counts) obs += (c == k);
    observed.push_back(obs);
  }
  // Remaining mass lumped into one tail bin.
  const int covered = static_cast<int>(expected.size());
  int tail_obs = 0;
  for (int c : counts) tail_obs += (c >= covered);
  expected.push_back(std::max(tail_prob, 0.0) * n);
  observed.push_back(tail_obs);

  double chi2 = 0.0;
  for (std::size_t b = 0; b < expected.size(); ++b) {
    if (expected[b] <= 0.0) continue;
    const double diff = observed[b] - expected[b];
    chi2 += diff * diff / expected[b];
  }
  report.chi2_statistic = chi2;
  report.chi2_dof = static_cast<int>(expected.size()) - 1;
  report.chi2_critical_1pct = chi2_critical_1pct(report.chi2_dof);
  return report;
}

}  // namespace stochreg
