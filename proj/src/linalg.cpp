#include "stochreg/linalg.hpp"

#include <cmath>
#include <limits>

namespace stochreg {

namespace {

void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument(std::string(who) + ": matrix must be square, got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

}  // namespace

Spectrum eig(const Matrix& a) {
  require_square(a, "eig");
  if (!all_finite(a)) throw std::invalid_argument("eig: non-finite entries");
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eig: QR iteration did not converge");
  }
  Spectrum s;
  s.eigenvalues = solver.eigenvalues();
  s.spectral_abscissa = s.eigenvalues.size() > 0
                            ? s.eigenvalues.real().maxCoeff()
                            : -std::numeric_limits<double>::infinity();
  return s;
}

double spectral_abscissa(const Matrix& a) { return eig(a).spectral_abscissa; }

Matrix expm(const Matrix& a, double t) {
  require_square(a, "expm");
  const Eigen::Index n = a.rows();
  if (n == 0) return Matrix(0, 0);

  Matrix x = a * t;
  const double norm = x.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    x /= std::ldexp(1.0, squarings);
  }

  // (6,6) Pade coefficients; truncation error ~1e-17 at ||X|| <= 0.5.
  static const double c[7] = {1.0,      1.0 / 2.0,     5.0 / 44.0,   1.0 / 66.0,
                              1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0};
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix x2 = x * x;
  const Matrix x4 = x2 * x2;
  const Matrix u = x * (c[1] * ident + c[3] * x2 + c[5] * x4);
  const Matrix v = c[0] * ident + c[2] * x2 + c[4] * x4 + c[6] * x4 * x2;

  Matrix f = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) f = f * f;
  return f;
}

Matrix lstsq(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("lstsq: A and B must have the same row count");
  }
  // Complete orthogonal decomposition gives the minimum-norm solution in the
  // rank-deficient case.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  return cod.solve(b);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> sym_eig(const Matrix& a, const char* who) {
  require_square(a, who);
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol::kAbs * (1.0 + scale)) {
    throw std::invalid_argument(std::string(who) + ": asymmetry " + std::to_string(asym) +
                                " beyond tolerance");
  }
  Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error(std::string(who) + ": eigenvalue iteration failed");
  }
  return solver;
}

}  // namespace

double min_eig_sym(const Matrix& a) { return sym_eig(a, "min_eig_sym").eigenvalues().minCoeff(); }

double max_eig_sym(const Matrix& a) { return sym_eig(a, "max_eig_sym").eigenvalues().maxCoeff(); }

Vector vec(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("unvec: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix he(const Matrix& a) { return a + a.transpose(); }

bool all_finite(const Matrix& a) { return a.allFinite(); }

namespace {

template <typename Mat>
Eigen::Index rank_impl(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const auto& sv = svd.singularValues();
  const double cutoff = tol::kRankRel * sv(0);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++r;
  }
  return r;
}

}  // namespace

Eigen::Index rank_of(const ComplexMatrix& a) { return rank_impl(a); }
Eigen::Index rank_of(const Matrix& a) { return rank_impl(a); }

}  // namespace stochreg
