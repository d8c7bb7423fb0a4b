#include "dip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dip/svd.hpp"

namespace dip {

IdValue information_density(std::span<const double> sigma, int k) {
  const int n = static_cast<int>(sigma.size());
  if (k < 1 || k > n) {
    throw RangeError("information_density: k = " + std::to_string(k) +
                     " outside [1, " + std::to_string(n) + "]");
  }
  double total = 0.0;
  double head = 0.0;
  for (int i = 0; i < n; ++i) {
    total += sigma[i];
    if (i < k) head += sigma[i];
  }
  if (total == 0.0) {
    throw DomainError("information_density: all-zero spectrum");
  }
  return IdValue{k, head / total};
}

Matrix id_gradient(const Matrix& p, int k) {
  const SvdResult svd = svd_thin(p);
  const int n = static_cast<int>(svd.sigma.size());
  if (k < 1 || k > n) {
    throw RangeError("id_gradient: k = " + std::to_string(k) +
                     " outside [1, " + std::to_string(n) + "]");
  }

  const double sigma_max = svd.sigma[0];
  const double threshold = 1e-6 * sigma_max;
  if (sigma_max == 0.0) {
    throw DomainError("id_gradient: all-zero spectrum");
  }
  for (int i = 0; i + 1 < n; ++i) {
    const double gap = svd.sigma[i] - svd.sigma[i + 1];
    if (gap < threshold) {
      throw DegeneracyError("id_gradient: sigma_" + std::to_string(i + 1) +
                                " and sigma_" + std::to_string(i + 2) +
                                " differ by only " + std::to_string(gap) +
                                " (needs >= " + std::to_string(threshold) + ")",
                            gap);
    }
  }

  const double s_n = std::accumulate(svd.sigma.begin(), svd.sigma.end(), 0.0);
  double s_k = 0.0;
  for (int i = 0; i < k; ++i) s_k += svd.sigma[i];

  Matrix grad(p.rows(), p.cols());
  for (int j = 0; j < n; ++j) {
    const double w = ((j < k ? s_n : 0.0) - s_k) / (s_n * s_n);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      const double ur = svd.u(r, static_cast<std::size_t>(j));
      if (ur == 0.0) continue;
      for (std::size_t c = 0; c < p.cols(); ++c) {
        grad(r, c) += w * ur * svd.v(c, static_cast<std::size_t>(j));
      }
    }
  }
  return grad;
}

std::vector<double> fractional_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&xs](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    // Positions i..j (0-based) share the average 1-based rank.
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ShapeError("spearman: length mismatch " + std::to_string(xs.size()) +
                     " vs " + std::to_string(ys.size()));
  }
  if (xs.size() < 2) {
    throw DomainError("spearman: need at least 2 observations");
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw DomainError("spearman: non-finite observation");
    }
  }

  const std::vector<double> rx = fractional_ranks(xs);
  const std::vector<double> ry = fractional_ranks(ys);
  const double n = static_cast<double>(xs.size());

  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;

  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    cov += dx * dy;
    vx += dx * dx;
    vy += dy * dy;
  }
  if (vx == 0.0 || vy == 0.0) {
    throw DomainError("spearman: correlation undefined for constant input");
  }
  return cov / std::sqrt(vx * vy);
}

double harmonic_mean(double base_acc, double new_acc) {
  if (!(base_acc > 0.0) || !(new_acc > 0.0)) {
    throw DomainError("harmonic_mean: arguments must be positive");
  }
  return 2.0 * base_acc * new_acc / (base_acc + new_acc);
}

}  // namespace dip
