#include "dip/prompt.hpp"

#include <algorithm>
#include <string>

namespace dip {

namespace {

constexpr std::uint64_t kFactorStreamTag = 0xD1F0;
constexpr std::uint64_t kTemplateStreamTag = 0x7E4C;

}  // namespace

long long DipPrompt::trainable_params() const {
  return param_count_dip(static_cast<long long>(n), static_cast<long long>(d),
                         r);
}

long long FullRankPrompt::trainable_params() const {
  return param_count_full(static_cast<long long>(n),
                          static_cast<long long>(d));
}

DipPrompt init_dip(std::size_t n, std::size_t d, int r, double dropout_p,
                   Matrix p_init, double gaussian_sigma, std::uint64_t seed) {
  const std::size_t min_nd = std::min(n, d);
  if (r < 1 || static_cast<std::size_t>(r) >= min_nd) {
    throw RangeError("init_dip: rank " + std::to_string(r) +
                     " must satisfy 1 <= r < min(n, d) = " +
                     std::to_string(min_nd));
  }
  if (!(gaussian_sigma > 0.0)) {
    throw DomainError("init_dip: gaussian_sigma must be positive");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw DomainError("init_dip: dropout_p must lie in [0, 1)");
  }
  if (p_init.rows() != n || p_init.cols() != d) {
    throw ShapeError("init_dip: p_init is " + shape_string(p_init) +
                     ", expected " + std::to_string(n) + "x" +
                     std::to_string(d));
  }
  ensure_finite(p_init, "init_dip");

  DipPrompt prompt;
  prompt.n = n;
  prompt.d = d;
  prompt.r = r;
  prompt.dropout_p = dropout_p;
  prompt.p_init = std::move(p_init);

  Rng rng = Rng(seed).child(kFactorStreamTag);
  prompt.p_a = Matrix(n, static_cast<std::size_t>(r));
  for (double& x : prompt.p_a.data()) x = rng.gaussian(0.0, gaussian_sigma);
  prompt.p_b = Matrix(static_cast<std::size_t>(r), d);
  for (double& x : prompt.p_b.data()) x = rng.gaussian(0.0, gaussian_sigma);
  return prompt;
}

Matrix dropout_mask(std::size_t n, std::size_t d, double p, Rng& rng) {
  Matrix mask(n, d);
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& x : mask.data()) {
    x = (rng.uniform() < p) ? 0.0 : keep_scale;
  }
  return mask;
}

Matrix effective_prompt(const DipPrompt& prompt, PromptMode mode, Rng* rng) {
  Matrix low_rank = matmul(prompt.p_a, prompt.p_b);
  if (mode == PromptMode::kTrain && prompt.dropout_p > 0.0) {
    if (rng == nullptr) {
      throw DomainError(
          "effective_prompt: train mode with dropout needs an rng");
    }
    low_rank = hadamard(
        low_rank, dropout_mask(prompt.n, prompt.d, prompt.dropout_p, *rng));
  }
  return prompt.p_init + low_rank;
}

Matrix merge(const DipPrompt& prompt) {
  return effective_prompt(prompt, PromptMode::kInfer);
}

long long param_count_dip(long long n, long long d, long long r) {
  return r * (n + d);
}

long long param_count_full(long long n, long long d) { return n * d; }

long long maple_preset_params_per_layer() {
  return param_count_dip(4, 512, 1) + param_count_dip(512, 768, 64);
}

long long maple_preset_params_total() {
  return 9 * maple_preset_params_per_layer();
}

Matrix template_embedding(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng = Rng(seed).child(kTemplateStreamTag);
  Matrix m(n, d);
  for (double& x : m.data()) x = rng.gaussian(0.0, 1.0);
  return m;
}

}  // namespace dip
