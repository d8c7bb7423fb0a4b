#pragma once

#include <cstdint>

#include "dip/matrix.hpp"
#include "dip/rng.hpp"

namespace dip {

enum class PromptMode { kTrain, kInfer };

/// Low-rank prompt parameterization: a frozen full-rank initialization
/// plus a trainable rank-r product passed through dropout.
///
///   effective = p_init + Dropout(p_a * p_b, dropout_p)
///
/// p_init never changes during training; only the r*(n+d) factor
/// entries do. In inference mode dropout is the identity, so the
/// effective prompt is exactly p_init + p_a * p_b.
struct DipPrompt {
  std::size_t n = 0;
  std::size_t d = 0;
  int r = 0;
  Matrix p_init;
  Matrix p_a;
  Matrix p_b;
  double dropout_p = 0.0;

  long long trainable_params() const;
};

/// Classic prompt: every one of the n*d entries trains.
struct FullRankPrompt {
  std::size_t n = 0;
  std::size_t d = 0;
  Matrix p;

  long long trainable_params() const;
};

/// Builds a DipPrompt with factors drawn i.i.d. from N(0, gaussian_sigma^2)
/// by a seeded deterministic generator; p_init is stored frozen.
/// Requires 1 <= r < min(n, d) and gaussian_sigma > 0.
DipPrompt init_dip(std::size_t n, std::size_t d, int r, double dropout_p,
                   Matrix p_init, double gaussian_sigma, std::uint64_t seed);

/// Inverted-dropout mask over an n x d grid: each entry is 0 with
/// probability p, else 1/(1-p).
Matrix dropout_mask(std::size_t n, std::size_t d, double p, Rng& rng);

/// The matrix the encoder consumes. Infer mode: p_init + p_a*p_b.
/// Train mode: p_init + mask .* (p_a*p_b) with a fresh inverted-dropout
/// mask from rng (rng may be null when dropout_p is 0).
Matrix effective_prompt(const DipPrompt& prompt, PromptMode mode,
                        Rng* rng = nullptr);

/// Pre-computed inference prompt, identical to
/// effective_prompt(kInfer): downstream forward passes see the same
/// matrix bit for bit.
Matrix merge(const DipPrompt& prompt);

/// Trainable (= stored) parameters of a rank-r prompt: r*(n+d).
long long param_count_dip(long long n, long long d, long long r);

/// Trainable parameters of a classic full prompt: n*d.
long long param_count_full(long long n, long long d);

/// Parameter accounting for the heavy multi-layer preset: per layer a
/// rank-1 text prompt (4 x 512) plus a rank-64 decomposition of the
/// 512 -> 768 text-to-image projection, over 9 prompted layers.
long long maple_preset_params_per_layer();
long long maple_preset_params_total();

/// Fixed seeded pseudo-embedding standing in for a hand-crafted template
/// prompt ("a photo of a ..."): no tokenizer exists at this scale, so a
/// deterministic N(0,1) matrix plays the role of the template's word
/// embeddings.
Matrix template_embedding(std::size_t n, std::size_t d, std::uint64_t seed);

}  // namespace dip
