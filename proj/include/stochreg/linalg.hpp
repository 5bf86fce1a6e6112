#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

// Dense real linear algebra primitives shared by every module: eigenvalues,
// matrix exponential, least-squares solving, Kronecker products and
// symmetric-definiteness tests. Dimensions here are small (<= ~100), so
// everything is dense double precision.

namespace stochreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Centralized tolerance table. Absolute/relative defaults apply unless an
// operation documents its own threshold.
namespace tol {
inline constexpr double kAbs = 1e-9;
inline constexpr double kRel = 1e-7;
// Rank decision: sigma_min > kRankRel * sigma_max counts as nonzero.
inline constexpr double kRankRel = 1e-8;
// |Re lambda| below this counts as "on the imaginary axis".
inline constexpr double kNeutral = 1e-8;
// Eigenvector condition number above this counts as non-diagonalizable.
inline constexpr double kDiagCond = 1e8;
}  // namespace tol

struct Spectrum {
  ComplexVector eigenvalues;   // all eigenvalues with multiplicity
  double spectral_abscissa;    // max over real parts
};

// Eigenvalues of a square matrix (real Schur reduction under the hood).
// Throws std::invalid_argument on non-square input and std::runtime_error
// if the iteration fails to converge.
Spectrum eig(const Matrix& a);

double spectral_abscissa(const Matrix& a);

// e^{A t} by scaling-and-squaring with a (6,6) Pade approximant; the input
// is scaled until its 1-norm is <= 0.5 before the rational evaluation.
Matrix expm(const Matrix& a, double t = 1.0);

// Minimum-norm least-squares solution of A X = B (rank deficiency handled
// by the minimum-norm convention).
Matrix lstsq(const Matrix& a, const Matrix& b);

Matrix kron(const Matrix& a, const Matrix& b);

// Smallest eigenvalue of the symmetrized input (A + A^T)/2. Throws if the
// asymmetry exceeds tol::kAbs relative to the matrix scale.
double min_eig_sym(const Matrix& a);
double max_eig_sym(const Matrix& a);

// Column-stacking vectorization and its inverse (matches the identity
// vec(A X B) == kron(B^T, A) vec(X)).
Vector vec(const Matrix& a);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

// A + A^T
Matrix he(const Matrix& a);

bool all_finite(const Matrix& a);

// Numerical rank by SVD with the kRankRel threshold.
Eigen::Index rank_of(const ComplexMatrix& a);
Eigen::Index rank_of(const Matrix& a);

}  // namespace stochreg
