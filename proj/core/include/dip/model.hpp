#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dip/autodiff.hpp"
#include "dip/data.hpp"
#include "dip/matrix.hpp"

namespace dip {

/// Pre-norm transformer block: single-head self-attention and a two
/// layer GELU MLP, both with residual connections. All weights frozen.
struct TransformerBlock {
  Matrix wq, wk, wv, wo;  // d x d
  Matrix w1;              // d x hidden
  Matrix b1;              // 1 x hidden
  Matrix w2;              // hidden x d
  Matrix b2;              // 1 x d
};

struct ModelConfig {
  int m_layers = 2;         // text encoder depth
  int n_layers = 2;         // image encoder depth
  std::size_t d_text = 64;  // word-embedding width
  std::size_t d_vis = 64;   // visual width
  double tau = 0.07;        // softmax temperature
  int prompt_depth = 1;     // layers that take substituted prompts
  std::uint64_t seed = 0;
};

/// Miniature frozen dual encoder. Text side runs [prompt tokens; class
/// embedding] through m_layers blocks and projects the class-token
/// state into visual space; image side runs [optional image prompt;
/// class token; patches] through n_layers blocks. Class "word
/// embeddings" are frozen vectors derived once from the dataset's
/// prototypes through a seeded linear map, the desk-scale stand-in for
/// the aligned text embeddings a pre-trained encoder pair would give.
struct ToyDualEncoder {
  ModelConfig config;
  std::vector<TransformerBlock> text_blocks;
  std::vector<TransformerBlock> vis_blocks;
  Matrix proj;              // d_text x d_vis
  Matrix class_embeddings;  // C x d_text, frozen
  Matrix vis_class_token;   // 1 x d_vis, frozen
  std::vector<Matrix> deep_prompt_slots;  // empty unless set_deep_prompts

  static ToyDualEncoder create(const ModelConfig& config,
                               const SyntheticDataset& dataset);

  int num_classes() const {
    return static_cast<int>(class_embeddings.rows());
  }
  /// Digest over every frozen weight; training must not change it.
  std::string weights_hash() const;
};

/// Installs per-layer prompt substitution: layers 1..prompt_depth
/// discard their incoming prompt rows and use these matrices instead.
/// Requires exactly prompt_depth matrices of equal shape n x d_text.
void set_deep_prompts(ToyDualEncoder& model, std::vector<Matrix> per_layer);
void clear_deep_prompts(ToyDualEncoder& model);

/// Shallow text forward: prompt rows are inherited through every layer.
/// Returns the projected class-token feature, 1 x d_vis.
Matrix forward_text(const ToyDualEncoder& model, const Matrix& prompt,
                    int class_id);

/// Deep text forward using the installed per-layer prompts.
Matrix forward_text_deep(const ToyDualEncoder& model, int class_id);

/// Image forward; image_prompt (n_v x d_vis) is optional and prepended
/// before the class token. Returns the class-token feature, 1 x d_vis.
Matrix forward_image(const ToyDualEncoder& model, const Matrix& patches,
                     const Matrix* image_prompt = nullptr);

struct Logits {
  std::vector<double> scores;  // cosine similarity / tau, per class
  std::vector<double> probabilities() const;
};

struct Prediction {
  Logits logits;
  int argmax = 0;  // lowest index wins ties
};

/// Cosine-similarity softmax classifier head. text_features holds one
/// row per class. Throws DomainError on zero-norm features and requires
/// tau > 0.
Prediction predict(const Matrix& image_feature, const Matrix& text_features,
                   double tau);

namespace graph {

/// Tape-level builders shared by training and the plain forwards above.
/// layer_prompts carries the prompt for layer 1 plus substitutions for
/// deeper layers; pass a single Var for shallow prompting.
ad::Var text_feature(ad::Tape& tape, const ToyDualEncoder& model,
                     const std::vector<ad::Var>& layer_prompts, int class_id);

ad::Var image_feature(ad::Tape& tape, const ToyDualEncoder& model,
                      ad::Var patches, const ad::Var* image_prompt = nullptr);

ad::Var block_forward(ad::Tape& tape, const TransformerBlock& block,
                      ad::Var tokens);

}  // namespace graph

}  // namespace dip
