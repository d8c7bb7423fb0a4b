#pragma once

#include <vector>

#include "dip/matrix.hpp"

namespace dip {

/// Thin SVD of an n x d matrix with n <= d.
///
/// Columns of u (n x n) are the left singular vectors, columns of v
/// (d x n) the right ones, sigma holds the n singular values in
/// non-increasing order. Reconstruction sum_i sigma_i u_i v_i^T equals
/// the input to 1e-8 relative Frobenius error; both bases are
/// orthonormal to 1e-10.
struct SvdResult {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;
};

/// Deterministic thin SVD for short-and-wide matrices (rows <= cols).
///
/// Diagonalizes the rows x rows Gram matrix P P^T by cyclic Jacobi
/// rotations, takes sigma_i = sqrt(eigenvalue) and recovers
/// v_i = P^T u_i / sigma_i. Singular values below 1e-12 * sigma_1 are
/// zeroed and their right vectors completed from the orthogonal
/// complement. Sign convention: the first entry of each u_i larger than
/// 1e-12 in magnitude is made positive, so output is reproducible
/// bit-for-bit.
///
/// Throws ShapeError when rows > cols (transpose first) and DomainError
/// on non-finite input.
SvdResult svd_thin(const Matrix& p);

/// Analytic gradient d sigma_i / dP = u_i v_i^T for the i-th singular
/// value (i is 1-based, matching the spectrum order).
///
/// Valid only while sigma_i is simple: throws DegeneracyError carrying
/// the offending gap when a neighboring singular value is closer than
/// 1e-6 * sigma_1.
Matrix singular_value_gradient(const Matrix& p, int i);

/// Number of singular values above tol_ratio * sigma_1; zero for the
/// zero matrix. tol_ratio must lie in (0, 1).
int numerical_rank(const Matrix& p, double tol_ratio);

namespace detail {

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues (descending) and the orthonormal eigenvector matrix whose
/// columns match them. Exposed for reuse; not part of the public API
/// contract.
void jacobi_eigen_symmetric(const Matrix& g, std::vector<double>& eigenvalues,
                            Matrix& eigenvectors);

}  // namespace detail

}  // namespace dip
