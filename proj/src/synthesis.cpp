#include "stochreg/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace stochreg {

namespace {

std::string complex_to_string(const std::complex<double>& z) {
  std::ostringstream os;
  os << z.real() << (z.imag() >= 0 ? "+" : "") << z.imag() << "i";
  return os.str();
}

// PBH controllability over the full spectrum.
void require_controllable(const Matrix& g1, const Matrix& g2, const char* who) {
  const Spectrum spec = eig(g1);
  const Eigen::Index n = g1.rows();
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
    const std::complex<double> lam = spec.eigenvalues(i);
    ComplexMatrix pencil(n, n + g2.cols());
    pencil.leftCols(n) =
        g1.cast<std::complex<double>>() - lam * ComplexMatrix::Identity(n, n);
    pencil.rightCols(g2.cols()) = g2.cast<std::complex<double>>();
    if (rank_of(pencil) < n) {
      throw std::invalid_argument(std::string(who) + ": pair uncontrollable at eigenvalue " +
                                  complex_to_string(lam));
    }
  }
}

// First canonical basis column (then simple combinations) making (S, b)
// controllable.
Matrix default_input_column(const Matrix& s) {
  const Eigen::Index q = s.rows();
  std::vector<Vector> candidates;
  for (Eigen::Index i = 0; i < q; ++i) candidates.push_back(Vector::Unit(q, i));
  candidates.push_back(Vector::Ones(q));
  Vector ramp(q);
  for (Eigen::Index i = 0; i < q; ++i) ramp(i) = static_cast<double>(i + 1);
  candidates.push_back(ramp);

  for (const Vector& b : candidates) {
    Matrix ctrb(q, q);
    Vector col = b;
    for (Eigen::Index k = 0; k < q; ++k) {
      ctrb.col(k) = col;
      col = s * col;
    }
    if (rank_of(ctrb) == q) return b;
  }
  throw std::invalid_argument(
      "build_internal_model: no single input column makes (S, b) controllable "
      "(S is derogatory); supply G2 explicitly");
}

Matrix block_diag(const std::vector<Matrix>& blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const Matrix& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const Matrix& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace

InternalModel build_internal_model(const ExoSystem& exo, Eigen::Index p,
                                   const std::optional<Matrix>& g2_override,
                                   const std::optional<Matrix>& k_override) {
  exo.validate();
  if (p < 1) throw std::invalid_argument("build_internal_model: p must be >= 1");
  const Eigen::Index q = exo.q();
  const Eigen::Index n_z = p * q;

  InternalModel im;
  im.G1 = block_diag(std::vector<Matrix>(p, exo.S));

  if (g2_override) {
    if (g2_override->rows() != n_z || g2_override->cols() != p) {
      throw std::invalid_argument("build_internal_model: G2 override must be " +
                                  std::to_string(n_z) + "x" + std::to_string(p));
    }
    im.G2 = *g2_override;
  } else {
    const Matrix b = default_input_column(exo.S);
    im.G2 = block_diag(std::vector<Matrix>(p, b));
  }

  if (k_override) {
    if (k_override->cols() != n_z) {
      throw std::invalid_argument("build_internal_model: K override must have " +
                                  std::to_string(n_z) + " columns");
    }
    im.K = *k_override;
  } else if (p == 1) {
    im.K = Matrix::Zero(1, n_z);
    im.K(0, 0) = 1.0;
  } else {
    throw std::invalid_argument(
        "build_internal_model: default K is only defined for a single error "
        "channel; supply K explicitly");
  }

  require_controllable(im.G1, im.G2, "build_internal_model");
  return im;
}

RegulatorEquationsSolution solve_regulator_equations(const PlantModel& plant,
                                                     const ExoSystem& exo) {
  plant.validate();
  exo.validate();
  const Eigen::Index n_p = plant.n_p();
  const Eigen::Index m_p = plant.m_p();
  const Eigen::Index p = plant.p();
  const Eigen::Index q = exo.q();
  const Matrix iq = Matrix::Identity(q, q);

  // Unknowns [vec(X_p); vec(R)].
  const Eigen::Index nx = n_p * q;
  const Eigen::Index nr = m_p * q;
  Matrix sys = Matrix::Zero(n_p * q + p * q, nx + nr);
  Vector rhs(n_p * q + p * q);

  sys.topLeftCorner(n_p * q, nx) =
      kron(exo.S.transpose(), Matrix::Identity(n_p, n_p)) - kron(iq, plant.A_p);
  sys.topRightCorner(n_p * q, nr) = -kron(iq, plant.B_p);
  sys.bottomLeftCorner(p * q, nx) = kron(iq, plant.C_p);
  rhs.head(n_p * q) = vec(plant.E_p);
  rhs.tail(p * q) = vec(plant.F_p);

  const Matrix sol = lstsq(sys, rhs);
  RegulatorEquationsSolution out;
  out.X_p = unvec(sol.col(0).head(nx), n_p, q);
  out.R = unvec(sol.col(0).tail(nr), m_p, q);
  out.residual = (sys * sol - rhs).norm();

  const double scale = 1.0 + plant.E_p.norm() + plant.F_p.norm();
  if (out.residual > 1e-8 * scale) {
    throw std::runtime_error(
        "solve_regulator_equations: residual " + std::to_string(out.residual) +
        " above tolerance (resonance or inconsistent data)");
  }
  return out;
}

Matrix place_poles_si(const Matrix& a, const Matrix& b, const ComplexVector& desired) {
  if (a.rows() != a.cols()) throw std::invalid_argument("place_poles_si: A must be square");
  const Eigen::Index n = a.rows();
  if (b.rows() != n || b.cols() != 1) {
    throw std::invalid_argument("place_poles_si: b must be a column of height n");
  }
  if (desired.size() != n) {
    throw std::invalid_argument("place_poles_si: need exactly n desired eigenvalues");
  }

  // Real characteristic polynomial prod (s - lambda_i); the imaginary parts
  // must cancel for a conjugate-closed spec.
  ComplexVector coeffs = ComplexVector::Zero(n + 1);
  coeffs(0) = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    ComplexVector next = ComplexVector::Zero(n + 1);
    for (Eigen::Index k = 0; k <= i; ++k) {
      next(k) += coeffs(k);                  // s * p(s)
      next(k + 1) -= coeffs(k) * desired(i); // -lambda_i * p(s)
    }
    coeffs = next;
  }
  double scale = 0.0;
  for (Eigen::Index k = 0; k <= n; ++k) scale = std::max(scale, std::abs(coeffs(k)));
  for (Eigen::Index k = 0; k <= n; ++k) {
    if (std::abs(coeffs(k).imag()) > 1e-9 * (1.0 + scale)) {
      throw std::invalid_argument(
          "place_poles_si: desired spectrum is not closed under conjugation");
    }
  }
  // coeffs is ordered highest power first: coeffs(k) multiplies s^{n-k}.

  Matrix ctrb(n, n);
  Vector col = b.col(0);
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.col(k) = col;
    col = a * col;
  }
  if (rank_of(ctrb) < n) {
    throw std::invalid_argument("place_poles_si: pair (A, b) is not controllable");
  }

  // phi(A) by Horner in the matrix argument.
  Matrix phi = Matrix::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    phi = a * phi + coeffs(k).real() * Matrix::Identity(n, n);
  }

  // Ackermann: k = -e_n^T Ctrb^{-1} phi(A); feedback enters as A + b k.
  const Vector en = Vector::Unit(n, n - 1);
  const Vector v = ctrb.transpose().fullPivLu().solve(en);
  return -(v.transpose() * phi);
}

namespace {

struct CompositePair {
  Matrix a;  // composite design matrix
  Matrix b;  // input column
  Matrix c;  // output row
};

CompositePair composite_pair(const PlantModel& plant, const InternalModel& im,
                             const Matrix& d_zeta) {
  const Eigen::Index n_p = plant.n_p();
  const Eigen::Index n_z = im.n_z();
  const Eigen::Index n_e = n_p + n_z;
  CompositePair cp;
  cp.a = Matrix::Zero(n_e, n_e);
  cp.a.topLeftCorner(n_p, n_p) = plant.A_p;
  cp.a.topRightCorner(n_p, n_z) = plant.B_p * d_zeta * im.K;
  cp.a.bottomLeftCorner(n_z, n_p) = im.G2 * plant.C_p;
  cp.a.bottomRightCorner(n_z, n_z) = im.G1;
  cp.b = Matrix::Zero(n_e, 1);
  cp.b.topRows(n_p) = plant.B_p;
  cp.c = Matrix::Zero(1, n_e);
  cp.c.rightCols(n_z) = im.K;
  return cp;
}

// Shift slow/unstable modes of sigma(A) to real parts at or left of -beta,
// spaced 0.1 apart; fast modes are kept. Conjugate pairs keep their
// imaginary parts, so the result stays conjugate-closed.
ComplexVector default_pole_spec(const Matrix& a, double beta) {
  const Spectrum spec = eig(a);
  struct Group {
    double re;
    double im;   // >= 0; 0 marks a real eigenvalue
    bool pair;
  };
  std::vector<Group> groups;
  std::vector<std::complex<double>> eigs(spec.eigenvalues.data(),
                                         spec.eigenvalues.data() + spec.eigenvalues.size());
  std::sort(eigs.begin(), eigs.end(), [](const auto& x, const auto& y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return std::abs(x.imag()) > std::abs(y.imag());
  });
  const double imag_tol = 1e-9;
  for (std::size_t i = 0; i < eigs.size(); ++i) {
    if (std::abs(eigs[i].imag()) <= imag_tol) {
      groups.push_back({eigs[i].real(), 0.0, false});
    } else if (eigs[i].imag() > 0.0) {
      groups.push_back({eigs[i].real(), eigs[i].imag(), true});
    }  // negative-imag member is covered by its conjugate
  }

  int shifted = 0;
  std::vector<std::complex<double>> out;
  for (const Group& g : groups) {
    double re = g.re;
    if (re > -beta) {
      re = -beta - 0.1 * shifted;
      ++shifted;
    }
    if (g.pair) {
      out.emplace_back(re, g.im);
      out.emplace_back(re, -g.im);
    } else {
      out.emplace_back(re, 0.0);
    }
  }
  ComplexVector v(static_cast<Eigen::Index>(out.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = out[static_cast<std::size_t>(i)];
  return v;
}

std::string witness_string(const CheckResult& r) {
  std::string s;
  for (const auto& z : r.witness) {
    if (!s.empty()) s += ", ";
    s += complex_to_string(z);
  }
  return s;
}

}  // namespace

StabilizerParams design_stabilizer(const PlantModel& plant, const InternalModel& im,
                                   double beta_target, const Matrix& d_zeta,
                                   const std::optional<PoleSpec>& pole_spec) {
  plant.validate();
  if (plant.m_p() != 1 || plant.p() != 1) {
    throw std::invalid_argument(
        "design_stabilizer: automatic synthesis handles single-input, "
        "single-error plants only; supply stabilizer matrices for MIMO");
  }
  if (im.K.rows() != 1) {
    throw std::invalid_argument("design_stabilizer: K must have one row");
  }
  if (beta_target <= 0.0) {
    throw std::invalid_argument("design_stabilizer: beta_target must be positive");
  }
  if (d_zeta.rows() != 1 || d_zeta.cols() != 1) {
    throw std::invalid_argument("design_stabilizer: D_zeta must be 1x1");
  }

  const CompositePair cp = composite_pair(plant, im, d_zeta);

  const CheckResult stab = check_stabilizable(cp.a, cp.b);
  if (!stab.ok) {
    throw std::invalid_argument(
        "design_stabilizer: composite pair (A, B) not stabilizable at " + witness_string(stab));
  }
  const CheckResult det = check_detectable(cp.a, cp.c);
  if (!det.ok) {
    throw std::invalid_argument(
        "design_stabilizer: composite pair (A, C) not detectable at " + witness_string(det));
  }

  const ComplexVector ctrl_spec =
      pole_spec ? pole_spec->controller : default_pole_spec(cp.a, beta_target);
  const ComplexVector obs_spec =
      pole_spec ? pole_spec->observer : default_pole_spec(cp.a, 2.0 * beta_target);

  StabilizerParams out;
  out.C_zeta = place_poles_si(cp.a, cp.b, ctrl_spec);
  // Dual placement: sigma(A - B_zeta C) = obs_spec.
  const Matrix g = place_poles_si(cp.a.transpose(), cp.c.transpose(), obs_spec);
  out.B_zeta = -g.transpose();
  out.A_zeta = cp.a + cp.b * out.C_zeta - out.B_zeta * cp.c;
  out.D_zeta = d_zeta;
  return out;
}

AugmentedSystem assemble_augmented(const PlantModel& plant, const InternalModel& im,
                                   const StabilizerParams& stab) {
  plant.validate();
  const Eigen::Index n_p = plant.n_p();
  const Eigen::Index m_p = plant.m_p();
  const Eigen::Index p = plant.p();
  const Eigen::Index q = plant.q();
  const Eigen::Index n_z = im.n_z();
  const Eigen::Index n_zeta = stab.n_zeta();
  if (n_zeta < 1) throw std::invalid_argument("assemble_augmented: stabilizer state is empty");
  if (stab.A_zeta.cols() != n_zeta || stab.B_zeta.rows() != n_zeta ||
      stab.B_zeta.cols() != m_p || stab.C_zeta.rows() != m_p || stab.C_zeta.cols() != n_zeta ||
      stab.D_zeta.rows() != m_p || stab.D_zeta.cols() != m_p) {
    throw std::invalid_argument("assemble_augmented: stabilizer dimensions inconsistent");
  }
  if (im.G2.cols() != p || im.K.rows() != m_p || im.K.cols() != n_z) {
    throw std::invalid_argument("assemble_augmented: internal model dimensions inconsistent");
  }

  const Eigen::Index n_cl = n_p + n_zeta;
  const Eigen::Index n = n_cl + n_z;

  AugmentedSystem aug;
  aug.A_cl = Matrix::Zero(n_cl, n_cl);
  aug.A_cl.topLeftCorner(n_p, n_p) = plant.A_p;
  aug.A_cl.topRightCorner(n_p, n_zeta) = plant.B_p * stab.C_zeta;
  aug.A_cl.bottomRightCorner(n_zeta, n_zeta) = stab.A_zeta;

  Matrix b_col(n_cl, m_p);
  b_col.topRows(n_p) = plant.B_p * stab.D_zeta;
  b_col.bottomRows(n_zeta) = stab.B_zeta;
  aug.B_cl = b_col * im.K;

  aug.E_cl = Matrix::Zero(n_cl, q);
  aug.E_cl.topRows(n_p) = plant.E_p;

  aug.H1 = Matrix::Zero(p, n_cl);
  aug.H1.leftCols(n_p) = plant.C_p;

  aug.frakA = Matrix::Zero(n, n);
  aug.frakA.topLeftCorner(n_cl, n_cl) = aug.A_cl;
  aug.frakA.topRightCorner(n_cl, n_z) = aug.B_cl;
  aug.frakA.bottomRightCorner(n_z, n_z) = im.G1;

  aug.frakBc = Matrix::Zero(n, p);
  aug.frakBc.bottomRows(n_z) = im.G2;

  aug.H2 = Matrix::Zero(p, n);
  aug.H2.leftCols(n_cl) = aug.H1;

  aug.frakAc = aug.frakA + aug.frakBc * aug.H2;

  const double abscissa = spectral_abscissa(aug.frakAc);
  aug.beta_achieved = -abscissa;
  if (abscissa >= 0.0) {
    throw std::runtime_error("assemble_augmented: frakA_c is not Hurwitz (spectral abscissa " +
                             std::to_string(abscissa) + ")");
  }
  return aug;
}

FrancisSolution solve_francis(const AugmentedSystem& aug, const InternalModel& im,
                              const ExoSystem& exo, const Matrix& e_cl, const Matrix& f_p) {
  const Eigen::Index n_cl = aug.n_cl();
  const Eigen::Index n_z = im.n_z();
  const Eigen::Index p = aug.p();
  const Eigen::Index q = exo.q();
  if (e_cl.rows() != n_cl || e_cl.cols() != q) {
    throw std::invalid_argument("solve_francis: E_cl must be (n_p+n_zeta) x q");
  }
  if (f_p.rows() != p || f_p.cols() != q) {
    throw std::invalid_argument("solve_francis: F_p must be p x q");
  }

  const Matrix iq = Matrix::Identity(q, q);
  const Eigen::Index nx = n_cl * q;
  const Eigen::Index nz = n_z * q;
  const Eigen::Index rows = n_cl * q + p * q + n_z * q;
  Matrix sys = Matrix::Zero(rows, nx + nz);
  Vector rhs = Vector::Zero(rows);

  // X_M S - A_cl X_M - B_cl Z = E_cl
  sys.block(0, 0, n_cl * q, nx) =
      kron(exo.S.transpose(), Matrix::Identity(n_cl, n_cl)) - kron(iq, aug.A_cl);
  sys.block(0, nx, n_cl * q, nz) = -kron(iq, aug.B_cl);
  rhs.head(n_cl * q) = vec(e_cl);

  // H1 X_M = F_p
  sys.block(n_cl * q, 0, p * q, nx) = kron(iq, aug.H1);
  rhs.segment(n_cl * q, p * q) = vec(f_p);

  // Z S - G1 Z = 0
  sys.block(n_cl * q + p * q, nx, n_z * q, nz) =
      kron(exo.S.transpose(), Matrix::Identity(n_z, n_z)) - kron(iq, im.G1);

  const Matrix sol = lstsq(sys, rhs);
  FrancisSolution out;
  out.X_M = unvec(sol.col(0).head(nx), n_cl, q);
  out.Z = unvec(sol.col(0).tail(nz), n_z, q);
  out.residual = (sys * sol - rhs).norm();

  const double scale = 1.0 + e_cl.norm() + f_p.norm();
  if (out.residual > 1e-7 * scale) {
    throw std::runtime_error("solve_francis: residual " + std::to_string(out.residual) +
                             " above tolerance (Property 1 fails numerically)");
  }
  return out;
}

ObserverParams build_observer_matrices(const AugmentedSystem& aug, const Matrix& q,
                                       const Matrix& w) {
  const Eigen::Index n = aug.n();
  const Eigen::Index p = aug.p();
  if (q.rows() != n || q.cols() != p) {
    throw std::invalid_argument("build_observer_matrices: Q must be n x p");
  }
  if (w.rows() != p || w.cols() != p) {
    throw std::invalid_argument("build_observer_matrices: W must be p x p");
  }

  ObserverParams obs;
  obs.Q = q;
  obs.W = w;

  obs.T = Matrix::Zero(n + p, n + p);
  obs.T.topLeftCorner(n, n) = aug.frakAc;
  obs.T.topRightCorner(n, p) = q;
  obs.T.bottomRightCorner(p, p) = w;

  obs.L1 = Matrix::Zero(n + p, n + p);
  obs.L1.topLeftCorner(n, n) = Matrix::Identity(n, n);
  obs.L1.block(n, 0, p, n) = -aug.H2;

  obs.L2 = Matrix::Zero(n + p, p);
  obs.L2.bottomRows(p) = Matrix::Identity(p, p);

  obs.H = Matrix::Zero(p, n + p);
  obs.H.leftCols(n) = aug.H2;
  return obs;
}

Matrix bar_transform(Eigen::Index n_p, Eigen::Index n_zeta, Eigen::Index n_z) {
  const Eigen::Index n = n_p + n_zeta + n_z;
  Matrix t = Matrix::Zero(n, n);
  t.topLeftCorner(n_p, n_p) = Matrix::Identity(n_p, n_p);
  t.block(n_p, n_p + n_z, n_zeta, n_zeta) = Matrix::Identity(n_zeta, n_zeta);
  t.block(n_p + n_zeta, n_p, n_z, n_z) = Matrix::Identity(n_z, n_z);
  return t;
}

std::pair<Matrix, double> solve_steady_state_gain(const InternalModel& im,
                                                  const ExoSystem& exo, const Matrix& r) {
  const Eigen::Index n_z = im.n_z();
  const Eigen::Index q = exo.q();
  const Eigen::Index m = im.K.rows();
  if (r.rows() != m || r.cols() != q) {
    throw std::invalid_argument("solve_steady_state_gain: R must be m_p x q");
  }
  const Matrix iq = Matrix::Identity(q, q);
  Matrix sys(n_z * q + m * q, n_z * q);
  sys.topRows(n_z * q) =
      kron(exo.S.transpose(), Matrix::Identity(n_z, n_z)) - kron(iq, im.G1);
  sys.bottomRows(m * q) = kron(iq, im.K);
  Vector rhs = Vector::Zero(n_z * q + m * q);
  rhs.tail(m * q) = vec(r);

  const Matrix sol = lstsq(sys, rhs);
  const double residual = (sys * sol - rhs).norm();
  return {unvec(sol.col(0), n_z, q), residual};
}

}  // namespace stochreg
