#include "dip/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dip/hashing.hpp"
#include "dip/rng.hpp"

namespace dip {

namespace {

constexpr std::uint64_t kTextBlockTag = 0x7E00;
constexpr std::uint64_t kVisBlockTag = 0x8E00;
constexpr std::uint64_t kProjTag = 0x9901;
constexpr std::uint64_t kVisClassTag = 0x9902;
constexpr std::uint64_t kClassEmbedTag = 0x9903;

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                     double sigma) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.gaussian(0.0, sigma);
  return m;
}

TransformerBlock make_block(Rng rng, std::size_t d) {
  const std::size_t hidden = 2 * d;
  const double wscale = 1.0 / std::sqrt(static_cast<double>(d));
  const double hscale = 1.0 / std::sqrt(static_cast<double>(hidden));
  TransformerBlock b;
  b.wq = random_matrix(rng, d, d, wscale);
  b.wk = random_matrix(rng, d, d, wscale);
  b.wv = random_matrix(rng, d, d, wscale);
  b.wo = random_matrix(rng, d, d, wscale);
  b.w1 = random_matrix(rng, d, hidden, wscale);
  b.b1 = Matrix(1, hidden);
  b.w2 = random_matrix(rng, hidden, d, hscale);
  b.b2 = Matrix(1, d);
  return b;
}

}  // namespace

ToyDualEncoder ToyDualEncoder::create(const ModelConfig& config,
                                      const SyntheticDataset& dataset) {
  if (config.m_layers < 1 || config.n_layers < 1) {
    throw RangeError("ToyDualEncoder: encoder depth must be >= 1");
  }
  if (!(config.tau > 0.0)) {
    throw DomainError("ToyDualEncoder: tau must be positive");
  }
  if (config.prompt_depth < 1 ||
      config.prompt_depth > std::max(config.m_layers, config.n_layers)) {
    throw RangeError("ToyDualEncoder: prompt_depth outside [1, max(M, N)]");
  }

  ToyDualEncoder model;
  model.config = config;

  Rng rng(config.seed);
  for (int k = 0; k < config.m_layers; ++k) {
    model.text_blocks.push_back(
        make_block(rng.child(kTextBlockTag + static_cast<std::uint64_t>(k)),
                   config.d_text));
  }
  for (int k = 0; k < config.n_layers; ++k) {
    model.vis_blocks.push_back(
        make_block(rng.child(kVisBlockTag + static_cast<std::uint64_t>(k)),
                   config.d_vis));
  }
  Rng proj_rng = rng.child(kProjTag);
  model.proj = random_matrix(proj_rng, config.d_text, config.d_vis,
                             1.0 / std::sqrt(static_cast<double>(config.d_text)));
  Rng cls_rng = rng.child(kVisClassTag);
  model.vis_class_token = random_matrix(cls_rng, 1, config.d_vis, 1.0);

  // Class word embeddings: a seeded linear image of the dataset's
  // prototypes. Drawn once per dataset seed, then frozen; this is what
  // lets a prompt trained on base classes carry over to new ones.
  Rng embed_rng = Rng(dataset.seed).child(kClassEmbedTag);
  Matrix w_embed = random_matrix(embed_rng, dataset.d_vis(), config.d_text, 1.0);
  model.class_embeddings = matmul(dataset.prototypes, w_embed);

  return model;
}

std::string ToyDualEncoder::weights_hash() const {
  std::string acc;
  for (const auto& blocks : {&text_blocks, &vis_blocks}) {
    for (const TransformerBlock& b : *blocks) {
      for (const Matrix* m : {&b.wq, &b.wk, &b.wv, &b.wo, &b.w1, &b.b1, &b.w2,
                              &b.b2}) {
        acc += matrix_content_hash(*m);
      }
    }
  }
  acc += matrix_content_hash(proj);
  acc += matrix_content_hash(class_embeddings);
  acc += matrix_content_hash(vis_class_token);
  const std::uint64_t h = fnv1a64(acc.data(), acc.size());
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  std::uint64_t v = h;
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[v & 0xF];
    v >>= 4;
  }
  return out;
}

void set_deep_prompts(ToyDualEncoder& model, std::vector<Matrix> per_layer) {
  if (static_cast<int>(per_layer.size()) != model.config.prompt_depth) {
    throw ShapeError("set_deep_prompts: got " +
                     std::to_string(per_layer.size()) + " prompts, expected " +
                     std::to_string(model.config.prompt_depth));
  }
  for (const Matrix& m : per_layer) {
    if (m.rows() != per_layer[0].rows() || m.cols() != model.config.d_text) {
      throw ShapeError("set_deep_prompts: prompt shape " + shape_string(m) +
                       " does not match n x d_text");
    }
  }
  model.deep_prompt_slots = std::move(per_layer);
}

void clear_deep_prompts(ToyDualEncoder& model) {
  model.deep_prompt_slots.clear();
}

namespace graph {

ad::Var block_forward(ad::Tape& tape, const TransformerBlock& block,
                      ad::Var tokens) {
  const std::size_t d = block.wq.rows();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  ad::Var h = tape.layer_norm_rows(tokens);
  ad::Var q = tape.matmul(h, tape.constant(block.wq));
  ad::Var k = tape.matmul(h, tape.constant(block.wk));
  ad::Var v = tape.matmul(h, tape.constant(block.wv));
  ad::Var scores = tape.scale(tape.matmul(q, tape.transpose(k)), inv_sqrt_d);
  ad::Var attn = tape.softmax_rows(scores);
  ad::Var ctx = tape.matmul(attn, v);
  ad::Var x = tape.add(tokens, tape.matmul(ctx, tape.constant(block.wo)));

  ad::Var h2 = tape.layer_norm_rows(x);
  ad::Var m = tape.add_row_broadcast(
      tape.matmul(h2, tape.constant(block.w1)), tape.constant(block.b1));
  m = tape.gelu(m);
  m = tape.add_row_broadcast(tape.matmul(m, tape.constant(block.w2)),
                             tape.constant(block.b2));
  return tape.add(x, m);
}

ad::Var text_feature(ad::Tape& tape, const ToyDualEncoder& model,
                     const std::vector<ad::Var>& layer_prompts, int class_id) {
  if (layer_prompts.empty()) {
    throw ShapeError("text_feature: at least one prompt layer required");
  }
  if (class_id < 0 || class_id >= model.num_classes()) {
    throw RangeError("text_feature: class_id " + std::to_string(class_id) +
                     " outside [0, " + std::to_string(model.num_classes()) +
                     ")");
  }
  const Matrix& prompt0 = tape.value(layer_prompts[0]);
  if (prompt0.cols() != model.config.d_text) {
    throw ShapeError("text_feature: prompt width " +
                     std::to_string(prompt0.cols()) + " != d_text " +
                     std::to_string(model.config.d_text));
  }
  const std::size_t n = prompt0.rows();

  ad::Var cls = tape.constant(
      model.class_embeddings.row(static_cast<std::size_t>(class_id)));
  ad::Var x = tape.concat_rows({layer_prompts[0], cls});
  const std::size_t total = n + 1;

  for (std::size_t k = 0; k < model.text_blocks.size(); ++k) {
    if (k > 0 && k < layer_prompts.size()) {
      // Deep prompting: discard the propagated prompt rows, keep the
      // class-token state, substitute this layer's own prompt.
      ad::Var rest = tape.slice_rows(x, n, total);
      x = tape.concat_rows({layer_prompts[k], rest});
    }
    x = block_forward(tape, model.text_blocks[k], x);
  }
  x = tape.layer_norm_rows(x);
  ad::Var cls_out = tape.slice_rows(x, n, n + 1);
  return tape.matmul(cls_out, tape.constant(model.proj));
}

ad::Var image_feature(ad::Tape& tape, const ToyDualEncoder& model,
                      ad::Var patches, const ad::Var* image_prompt) {
  const Matrix& pm = tape.value(patches);
  if (pm.cols() != model.config.d_vis) {
    throw ShapeError("image_feature: patch width " +
                     std::to_string(pm.cols()) + " != d_vis " +
                     std::to_string(model.config.d_vis));
  }
  std::size_t cls_row = 0;
  ad::Var cls = tape.constant(model.vis_class_token);
  ad::Var x;
  if (image_prompt != nullptr) {
    const Matrix& ip = tape.value(*image_prompt);
    if (ip.cols() != model.config.d_vis) {
      throw ShapeError("image_feature: image prompt width " +
                       std::to_string(ip.cols()) + " != d_vis " +
                       std::to_string(model.config.d_vis));
    }
    cls_row = ip.rows();
    x = tape.concat_rows({*image_prompt, cls, patches});
  } else {
    x = tape.concat_rows({cls, patches});
  }
  for (const TransformerBlock& block : model.vis_blocks) {
    x = block_forward(tape, block, x);
  }
  x = tape.layer_norm_rows(x);
  return tape.slice_rows(x, cls_row, cls_row + 1);
}

}  // namespace graph

Matrix forward_text(const ToyDualEncoder& model, const Matrix& prompt,
                    int class_id) {
  ad::Tape tape;
  ad::Var p = tape.constant(prompt);
  ad::Var f = graph::text_feature(tape, model, {p}, class_id);
  return tape.value(f);
}

Matrix forward_text_deep(const ToyDualEncoder& model, int class_id) {
  if (model.deep_prompt_slots.empty()) {
    throw ShapeError("forward_text_deep: no deep prompts installed");
  }
  ad::Tape tape;
  std::vector<ad::Var> prompts;
  prompts.reserve(model.deep_prompt_slots.size());
  for (const Matrix& m : model.deep_prompt_slots) {
    prompts.push_back(tape.constant(m));
  }
  ad::Var f = graph::text_feature(tape, model, prompts, class_id);
  return tape.value(f);
}

Matrix forward_image(const ToyDualEncoder& model, const Matrix& patches,
                     const Matrix* image_prompt) {
  ad::Tape tape;
  ad::Var p = tape.constant(patches);
  if (image_prompt != nullptr) {
    ad::Var ip = tape.constant(*image_prompt);
    return tape.value(graph::image_feature(tape, model, p, &ip));
  }
  return tape.value(graph::image_feature(tape, model, p, nullptr));
}

std::vector<double> Logits::probabilities() const {
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  std::vector<double> probs(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    probs[i] = std::exp(scores[i] - mx);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

Prediction predict(const Matrix& image_feature, const Matrix& text_features,
                   double tau) {
  if (!(tau > 0.0)) {
    throw DomainError("predict: tau must be positive");
  }
  if (image_feature.rows() != 1 ||
      image_feature.cols() != text_features.cols()) {
    throw ShapeError("predict: feature width mismatch");
  }
  double img_norm = 0.0;
  for (double x : image_feature.data()) img_norm += x * x;
  img_norm = std::sqrt(img_norm);
  if (img_norm == 0.0) {
    throw DomainError("predict: zero-norm image feature");
  }

  Prediction out;
  out.logits.scores.resize(text_features.rows());
  for (std::size_t c = 0; c < text_features.rows(); ++c) {
    double dot = 0.0, tnorm = 0.0;
    for (std::size_t j = 0; j < text_features.cols(); ++j) {
      dot += image_feature(0, j) * text_features(c, j);
      tnorm += text_features(c, j) * text_features(c, j);
    }
    tnorm = std::sqrt(tnorm);
    if (tnorm == 0.0) {
      throw DomainError("predict: zero-norm text feature for class " +
                        std::to_string(c));
    }
    out.logits.scores[c] = dot / (img_norm * tnorm * tau);
  }
  out.argmax = 0;
  for (std::size_t c = 1; c < out.logits.scores.size(); ++c) {
    if (out.logits.scores[c] > out.logits.scores[out.argmax]) {
      out.argmax = static_cast<int>(c);
    }
  }
  return out;
}

}  // namespace dip
