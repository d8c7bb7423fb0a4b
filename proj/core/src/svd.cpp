#include "dip/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace dip {

namespace detail {

void jacobi_eigen_symmetric(const Matrix& g, std::vector<double>& eigenvalues,
                            Matrix& eigenvectors) {
  const std::size_t n = g.rows();
  Matrix a = g;
  Matrix u = Matrix::identity(n);

  auto off_diagonal_norm = [&a, n]() {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
    }
    return std::sqrt(2.0 * s);
  };

  const double scale = std::max(a.frobenius_norm(),
                                std::numeric_limits<double>::min());
  const double stop = 1e-15 * scale;
  const int max_sweeps = 64;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_norm() <= stop) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Rotation angle that annihilates a(p,q).
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0)
                             ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                             : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double ukp = u(k, p);
          const double ukq = u(k, q);
          u(k, p) = c * ukp - s * ukq;
          u(k, q) = s * ukp + c * ukq;
        }
      }
    }
  }

  // Sort eigenpairs by descending eigenvalue; stable so equal values
  // keep a deterministic column order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&a](std::size_t x, std::size_t y) {
    return a(x, x) > a(y, y);
  });

  eigenvalues.assign(n, 0.0);
  eigenvectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) {
      eigenvectors(k, j) = u(k, order[j]);
    }
  }
}

}  // namespace detail

namespace {

constexpr double kZeroSigmaRatio = 1e-12;
constexpr double kDegeneracyRatio = 1e-6;
constexpr double kSignEpsilon = 1e-12;

// Deterministic orthonormal completion: fills columns [filled, n) of v
// (d x n) with vectors orthogonal to the already accepted ones, chosen
// from the canonical basis by largest residual.
void complete_orthogonal(Matrix& v, std::size_t filled) {
  const std::size_t d = v.rows();
  const std::size_t n = v.cols();
  for (std::size_t slot = filled; slot < n; ++slot) {
    std::size_t best_j = 0;
    double best_norm2 = -1.0;
    std::vector<double> best(d, 0.0);
    std::vector<double> cand(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      std::fill(cand.begin(), cand.end(), 0.0);
      cand[j] = 1.0;
      for (std::size_t k = 0; k < slot; ++k) {
        double dot = 0.0;
        for (std::size_t r = 0; r < d; ++r) dot += cand[r] * v(r, k);
        for (std::size_t r = 0; r < d; ++r) cand[r] -= dot * v(r, k);
      }
      double norm2 = 0.0;
      for (double x : cand) norm2 += x * x;
      if (norm2 > best_norm2) {
        best_norm2 = norm2;
        best_j = j;
        best = cand;
      }
    }
    (void)best_j;
    // Second Gram-Schmidt pass for orthogonality at machine precision.
    for (std::size_t k = 0; k < slot; ++k) {
      double dot = 0.0;
      for (std::size_t r = 0; r < d; ++r) dot += best[r] * v(r, k);
      for (std::size_t r = 0; r < d; ++r) best[r] -= dot * v(r, k);
    }
    double norm = 0.0;
    for (double x : best) norm += x * x;
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < d; ++r) v(r, slot) = best[r] / norm;
  }
}

void apply_sign_convention(Matrix& u, Matrix& v) {
  const std::size_t n = u.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double lead = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (std::fabs(u(k, j)) > kSignEpsilon) {
        lead = u(k, j);
        break;
      }
    }
    if (lead < 0.0) {
      for (std::size_t k = 0; k < n; ++k) u(k, j) = -u(k, j);
      for (std::size_t k = 0; k < v.rows(); ++k) v(k, j) = -v(k, j);
    }
  }
}

}  // namespace

SvdResult svd_thin(const Matrix& p) {
  if (p.rows() > p.cols()) {
    throw ShapeError("svd_thin: rows (" + std::to_string(p.rows()) +
                     ") exceed cols (" + std::to_string(p.cols()) +
                     "); transpose the input first");
  }
  if (p.rows() == 0) {
    throw ShapeError("svd_thin: empty matrix");
  }
  ensure_finite(p, "svd_thin");

  const std::size_t n = p.rows();
  const std::size_t d = p.cols();

  // Gram matrix P P^T.
  Matrix gram(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += p(i, k) * p(j, k);
      gram(i, j) = s;
      gram(j, i) = s;
    }
  }

  std::vector<double> eigenvalues;
  Matrix u;
  detail::jacobi_eigen_symmetric(gram, eigenvalues, u);

  SvdResult result;
  result.u = std::move(u);
  result.sigma.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    result.sigma[i] = std::sqrt(std::max(eigenvalues[i], 0.0));
  }

  const double sigma_max = result.sigma.empty() ? 0.0 : result.sigma[0];
  const double zero_cut = kZeroSigmaRatio * sigma_max;

  result.v = Matrix(d, n);
  std::size_t nonzero = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (result.sigma[j] <= zero_cut || result.sigma[j] == 0.0) {
      result.sigma[j] = 0.0;
      continue;
    }
    // v_j = P^T u_j / sigma_j
    for (std::size_t r = 0; r < d; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += p(k, r) * result.u(k, j);
      result.v(r, j) = s / result.sigma[j];
    }
    nonzero = j + 1;
  }

  // Gram-Schmidt stabilization: near-degenerate spectra can leave the
  // recovered right vectors slightly non-orthogonal.
  for (std::size_t j = 0; j < nonzero; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t r = 0; r < d; ++r) dot += result.v(r, j) * result.v(r, k);
      for (std::size_t r = 0; r < d; ++r) result.v(r, j) -= dot * result.v(r, k);
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < d; ++r) norm += result.v(r, j) * result.v(r, j);
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < d; ++r) result.v(r, j) /= norm;
  }

  complete_orthogonal(result.v, nonzero);
  apply_sign_convention(result.u, result.v);
  return result;
}

Matrix singular_value_gradient(const Matrix& p, int i) {
  const SvdResult svd = svd_thin(p);
  const int n = static_cast<int>(svd.sigma.size());
  if (i < 1 || i > n) {
    throw RangeError("singular_value_gradient: index " + std::to_string(i) +
                     " outside [1, " + std::to_string(n) + "]");
  }
  const double sigma_max = svd.sigma[0];
  const double threshold = kDegeneracyRatio * sigma_max;
  double gap = std::numeric_limits<double>::infinity();
  if (i > 1) gap = std::min(gap, svd.sigma[i - 2] - svd.sigma[i - 1]);
  if (i < n) gap = std::min(gap, svd.sigma[i - 1] - svd.sigma[i]);
  if ((n > 1 && sigma_max == 0.0) || gap < threshold) {
    throw DegeneracyError(
        "singular_value_gradient: sigma_" + std::to_string(i) +
            " is within " + std::to_string(gap) +
            " of a neighbor (needs >= " + std::to_string(threshold) + ")",
        gap);
  }

  Matrix grad(p.rows(), p.cols());
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const double ur = svd.u(r, static_cast<std::size_t>(i - 1));
    for (std::size_t c = 0; c < p.cols(); ++c) {
      grad(r, c) = ur * svd.v(c, static_cast<std::size_t>(i - 1));
    }
  }
  return grad;
}

int numerical_rank(const Matrix& p, double tol_ratio) {
  if (!(tol_ratio > 0.0 && tol_ratio < 1.0)) {
    throw RangeError("numerical_rank: tol_ratio must lie in (0, 1)");
  }
  const SvdResult svd = svd_thin(p);
  const double sigma_max = svd.sigma[0];
  if (sigma_max == 0.0) return 0;
  int rank = 0;
  for (double s : svd.sigma) {
    if (s > tol_ratio * sigma_max) ++rank;
  }
  return rank;
}

}  // namespace dip
