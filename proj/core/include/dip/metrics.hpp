#pragma once

#include <span>
#include <vector>

#include "dip/matrix.hpp"

namespace dip {

/// k-th order information density of a singular spectrum: the share of
/// total singular-value mass held by the k largest values. 1 means the
/// matrix lives entirely in a k-dimensional feature subspace.
struct IdValue {
  int k = 0;
  double value = 0.0;
};

/// IDk = (sum of the k largest sigma) / (sum of all sigma).
/// sigma must be non-increasing and non-negative. Throws RangeError for
/// k outside [1, n] and DomainError for an all-zero spectrum.
IdValue information_density(std::span<const double> sigma, int k);

/// Gradient of IDk with respect to the matrix entries:
/// sum_j w_j u_j v_j^T with w_j = (1[j<=k] S_n - S_k) / S_n^2.
/// Requires every singular value simple (adjacent gaps above
/// 1e-6 * sigma_1); throws DegeneracyError otherwise.
Matrix id_gradient(const Matrix& p, int k);

/// Spearman rank correlation with average (fractional) ranks for ties,
/// computed as the Pearson correlation of the two rank vectors.
/// Throws ShapeError on length mismatch, DomainError when either side
/// is constant or shorter than 2.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// 2ab/(a+b) of two accuracy percentages; both must be positive.
double harmonic_mean(double base_acc, double new_acc);

/// Average (fractional) ranks, 1-based; ties share the mean of the
/// positions they occupy.
std::vector<double> fractional_ranks(std::span<const double> xs);

}  // namespace dip
