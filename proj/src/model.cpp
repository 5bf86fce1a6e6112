#include "stochreg/model.hpp"

#include <cmath>

namespace stochreg {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void require_finite(const Matrix& m, const char* name) {
  require(all_finite(m), std::string(name) + ": non-finite entries");
}

}  // namespace

void PlantModel::validate() const {
  require(A_p.rows() == A_p.cols(), "A_p must be square");
  require(B_p.rows() == n_p(), "B_p row count must equal n_p");
  require(E_p.rows() == n_p(), "E_p row count must equal n_p");
  require(C_p.cols() == n_p(), "C_p column count must equal n_p");
  require(F_p.rows() == p(), "F_p row count must equal p");
  require(F_p.cols() == q(), "F_p column count must equal q");
  require(n_p() > 0, "plant must have at least one state");
  require(m_p() > 0, "plant must have at least one input");
  require(p() > 0, "plant must have at least one output");
  require_finite(A_p, "A_p");
  require_finite(B_p, "B_p");
  require_finite(E_p, "E_p");
  require_finite(C_p, "C_p");
  require_finite(F_p, "F_p");
}

void ExoSystem::validate() const {
  require(S.rows() == S.cols(), "S must be square");
  require(S.rows() > 0, "exosystem must have at least one state");
  require_finite(S, "S");
}

void SamplingProcess::validate() const {
  require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive and finite");
}

namespace {

// PBH rank test at every eigenvalue of A with real part >= -tol::kAbs.
CheckResult pbh_full_row_rank(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols()) throw std::invalid_argument("PBH test: A must be square");
  if (b.rows() != a.rows()) throw std::invalid_argument("PBH test: B row count must match A");
  const Eigen::Index n = a.rows();
  CheckResult result;
  result.ok = true;
  const Spectrum spec = eig(a);
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
    const std::complex<double> lam = spec.eigenvalues(i);
    if (lam.real() < -tol::kAbs) continue;  // stable modes need no control
    ComplexMatrix pencil(n, n + b.cols());
    pencil.leftCols(n) = a.cast<std::complex<double>>() -
                         lam * ComplexMatrix::Identity(n, n);
    pencil.rightCols(b.cols()) = b.cast<std::complex<double>>();
    if (rank_of(pencil) < n) {
      result.ok = false;
      result.witness.push_back(lam);
    }
  }
  return result;
}

}  // namespace

CheckResult check_stabilizable(const Matrix& a, const Matrix& b) {
  return pbh_full_row_rank(a, b);
}

CheckResult check_detectable(const Matrix& a, const Matrix& c) {
  return pbh_full_row_rank(a.transpose(), c.transpose());
}

CheckResult check_nonresonance(const PlantModel& plant, const ExoSystem& exo) {
  plant.validate();
  exo.validate();
  const Eigen::Index n_p = plant.n_p();
  const Eigen::Index m_p = plant.m_p();
  const Eigen::Index p = plant.p();
  const Eigen::Index rows = n_p + p;
  const Eigen::Index cols = n_p + m_p;
  const Eigen::Index full = std::min(rows, cols);

  CheckResult result;
  result.ok = true;
  const Spectrum spec = eig(exo.S);
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
    const std::complex<double> lam = spec.eigenvalues(i);
    ComplexMatrix block = ComplexMatrix::Zero(rows, cols);
    block.topLeftCorner(n_p, n_p) = plant.A_p.cast<std::complex<double>>() -
                                    lam * ComplexMatrix::Identity(n_p, n_p);
    block.topRightCorner(n_p, m_p) = plant.B_p.cast<std::complex<double>>();
    block.bottomLeftCorner(p, n_p) = plant.C_p.cast<std::complex<double>>();
    if (rank_of(block) < full) {
      result.ok = false;
      result.witness.push_back(lam);
    }
  }
  return result;
}

NeutralStabilityResult check_neutrally_stable(const ExoSystem& exo) {
  exo.validate();
  NeutralStabilityResult result;

  Eigen::EigenSolver<Matrix> solver(exo.S, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("check_neutrally_stable: eigenvalue iteration failed");
  }
  bool on_axis = true;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    if (std::abs(solver.eigenvalues()(i).real()) >= tol::kNeutral) on_axis = false;
  }

  // Diagonalizability via eigenvector condition number.
  const ComplexMatrix v = solver.eigenvectors();
  Eigen::JacobiSVD<ComplexMatrix> svd(v);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  result.diagonalizable = smin > 0.0 && smax / smin < tol::kDiagCond;

  if (!on_axis) {
    result.ok = false;
  } else if (result.diagonalizable) {
    result.ok = true;
  } else {
    // On-axis Jordan block: generates polynomially growing exogenous signals.
    result.ok = true;
    result.warning =
        "exosystem eigenvalues lie on the imaginary axis but S is not "
        "diagonalizable; proceeding with a defective (ramp-generating) S";
  }
  return result;
}

}  // namespace stochreg
