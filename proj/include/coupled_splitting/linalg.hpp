#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace coupled_splitting {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using ComplexVector = Eigen::VectorXcd;

namespace linalg {

/// Relative singular-value threshold used for every rank decision.
inline constexpr double kRankTol = 1e-10;

inline Vector sym_eigenvalues(const Matrix& m) {
  if (m.size() == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_eigenvalue(const Matrix& m) {
  const Vector ev = sym_eigenvalues(m);
  return ev.size() ? ev.minCoeff() : 0.0;
}

inline double max_eigenvalue(const Matrix& m) {
  const Vector ev = sym_eigenvalues(m);
  return ev.size() ? ev.maxCoeff() : 0.0;
}

/// Spectral norm (largest singular value).
inline double norm2(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// Number of singular values above rel_tol * sigma_max.
inline Index numeric_rank(const Matrix& m, double rel_tol = kRankTol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = rel_tol * s(0);
  return static_cast<Index>(std::count_if(s.data(), s.data() + s.size(),
                                          [cut](double v) { return v > cut; }));
}

inline ComplexVector eigenvalues(const Matrix& m) {
  if (m.size() == 0) return ComplexVector();
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues();
}

inline double spectral_radius(const Matrix& m) {
  const ComplexVector ev = eigenvalues(m);
  double rho = 0.0;
  for (Index i = 0; i < ev.size(); ++i) rho = std::max(rho, std::abs(ev(i)));
  return rho;
}

/// Largest absolute entry.
inline double max_abs(const Matrix& m) {
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

/// Checks m == c I within rel_tol * max|m| and reports c.
inline bool is_scaled_identity(const Matrix& m, double& c, double rel_tol = 1e-12) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  c = m.diagonal().mean();
  const Matrix diff = m - c * Matrix::Identity(m.rows(), m.cols());
  return max_abs(diff) <= rel_tol * std::max(1.0, max_abs(m));
}

/// Minimum-norm least-squares solution of m x = rhs.
inline Vector min_norm_solve(const Matrix& m, const Vector& rhs) {
  if (m.cols() == 0) return Vector();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(m);
  cod.setThreshold(1e-13);
  Vector x = cod.solve(rhs);
  // One refinement sweep recovers digits lost to conditioning.
  const Vector r = rhs - m * x;
  x += cod.solve(r);
  return x;
}

/// Unit vector for the smallest eigenvalue of a symmetric matrix, sign fixed
/// so that its largest-magnitude entry is positive.
inline Vector min_eigenvector(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  Vector v = es.eigenvectors().col(0);
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0) v = -v;
  return v;
}

/// Symmetric square root of a symmetric PSD matrix.
inline Matrix sym_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Vector s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

/// ||v||_W^2 = v' W v.
inline double wnorm_sq(const Vector& v, const Matrix& w) {
  if (v.size() == 0) return 0.0;
  return v.dot(w * v);
}

}  // namespace linalg
}  // namespace coupled_splitting
