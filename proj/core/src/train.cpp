#include "dip/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dip/metrics.hpp"
#include "dip/rng.hpp"
#include "dip/svd.hpp"

namespace dip {

namespace {

constexpr std::uint64_t kShuffleTag = 0x40A1;
constexpr std::uint64_t kDropoutTag = 0x40A2;
constexpr std::uint64_t kFactorTag = 0x40A3;
constexpr std::uint64_t kSplitTag = 0x40A4;
constexpr std::uint64_t kShotTag = 0x40A5;

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

/// One trainable prompt layer, either parameterization.
struct LayerPrompt {
  bool is_dip = false;
  DipPrompt dip;
  FullRankPrompt full;

  Matrix merged() const {
    return is_dip ? merge(dip) : full.p;
  }
  long long trainable_params() const {
    return is_dip ? dip.trainable_params() : full.trainable_params();
  }
};

struct LayerVars {
  bool is_dip = false;
  ad::Var pa, pb;  // valid when is_dip
  ad::Var p;       // valid otherwise
  ad::Var effective;
};

std::vector<LayerPrompt> make_prompts(const TrainConfig& config,
                                      const PromptSpec& spec,
                                      std::size_t width) {
  std::vector<LayerPrompt> layers;
  for (int layer = 0; layer < spec.depth; ++layer) {
    Matrix p_init = template_embedding(
        spec.n, width, spec.init_seed + static_cast<std::uint64_t>(layer));
    LayerPrompt lp;
    if (config.objective == Objective::kAlg3Dip) {
      lp.is_dip = true;
      const std::uint64_t factor_seed =
          Rng(config.seed)
              .child(kFactorTag + static_cast<std::uint64_t>(layer))
              .seed();
      lp.dip = init_dip(spec.n, width, config.rank, config.dropout_p,
                        std::move(p_init), config.gaussian_sigma, factor_seed);
    } else {
      lp.is_dip = false;
      lp.full.n = spec.n;
      lp.full.d = width;
      lp.full.p = std::move(p_init);
    }
    layers.push_back(std::move(lp));
  }
  return layers;
}

std::vector<LayerVars> push_prompts(ad::Tape& tape,
                                    const std::vector<LayerPrompt>& layers,
                                    bool train_mode, Rng* dropout_rng) {
  std::vector<LayerVars> vars;
  vars.reserve(layers.size());
  for (const LayerPrompt& lp : layers) {
    LayerVars lv;
    lv.is_dip = lp.is_dip;
    if (lp.is_dip) {
      lv.pa = tape.param(lp.dip.p_a);
      lv.pb = tape.param(lp.dip.p_b);
      ad::Var prod = tape.matmul(lv.pa, lv.pb);
      if (train_mode && lp.dip.dropout_p > 0.0) {
        prod = tape.hadamard(
            prod, tape.constant(dropout_mask(lp.dip.n, lp.dip.d,
                                             lp.dip.dropout_p, *dropout_rng)));
      }
      lv.effective = tape.add(tape.constant(lp.dip.p_init), prod);
    } else {
      lv.p = tape.param(lp.full.p);
      lv.effective = lv.p;
    }
    vars.push_back(lv);
  }
  return vars;
}

std::vector<Matrix> merged_prompts(const std::vector<LayerPrompt>& layers) {
  std::vector<Matrix> out;
  out.reserve(layers.size());
  for (const LayerPrompt& lp : layers) out.push_back(lp.merged());
  return out;
}

/// Stacked raw text features (one row per class id) for fixed prompt
/// matrices, shallow or deep.
Matrix text_features_for(const ToyDualEncoder& model,
                         const std::vector<Matrix>& layer_prompts,
                         const std::vector<int>& class_ids) {
  Matrix out(class_ids.size(), model.config.d_vis);
  for (std::size_t i = 0; i < class_ids.size(); ++i) {
    ad::Tape tape;
    std::vector<ad::Var> prompts;
    prompts.reserve(layer_prompts.size());
    for (const Matrix& m : layer_prompts) prompts.push_back(tape.constant(m));
    const Matrix f =
        tape.value(graph::text_feature(tape, model, prompts, class_ids[i]));
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = f(0, j);
  }
  return out;
}

Matrix normalized_rows_copy(const Matrix& m) {
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double norm = 0.0;
    for (std::size_t c = 0; c < out.cols(); ++c) norm += out(r, c) * out(r, c);
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      throw DomainError("normalized_rows_copy: zero-norm row");
    }
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) /= norm;
  }
  return out;
}

/// Everything fixed for one run: split, caches, label spaces.
struct RunContext {
  const SyntheticDataset* dataset = nullptr;
  const ToyDualEncoder* model = nullptr;
  Placement placement = Placement::kText;

  std::vector<int> train_classes;       // label space used by the loss
  std::vector<std::size_t> train_samples;
  std::vector<int> base_classes;        // evaluation spaces
  std::vector<std::size_t> base_samples;
  std::vector<int> new_classes;
  std::vector<std::size_t> new_samples;

  // Text placement: image features never change; computed once.
  std::vector<Matrix> image_feats_raw;   // per sample, 1 x d_vis
  std::vector<Matrix> image_feats_norm;  // row-normalized copies

  // Image placement: text features never change; computed once.
  Matrix text_feats_train;  // |train_classes| x d_vis, raw
  Matrix text_feats_base;
  Matrix text_feats_new;
};

void build_caches(RunContext& ctx, const PromptSpec& spec) {
  const SyntheticDataset& ds = *ctx.dataset;
  const ToyDualEncoder& model = *ctx.model;
  if (ctx.placement == Placement::kText) {
    ctx.image_feats_raw.reserve(ds.samples.size());
    ctx.image_feats_norm.reserve(ds.samples.size());
    for (const Sample& s : ds.samples) {
      Matrix f = forward_image(model, s.patches);
      ctx.image_feats_norm.push_back(normalized_rows_copy(f));
      ctx.image_feats_raw.push_back(std::move(f));
    }
  } else {
    // Frozen text side: the template prompt alone produces the class
    // features, exactly once.
    const Matrix text_prompt =
        template_embedding(spec.n, model.config.d_text, spec.init_seed);
    ctx.text_feats_train =
        text_features_for(model, {text_prompt}, ctx.train_classes);
    ctx.text_feats_base =
        text_features_for(model, {text_prompt}, ctx.base_classes);
    ctx.text_feats_new =
        ctx.new_classes.empty()
            ? Matrix()
            : text_features_for(model, {text_prompt}, ctx.new_classes);
  }
}

int position_of(const std::vector<int>& classes, int label) {
  const auto it = std::find(classes.begin(), classes.end(), label);
  return static_cast<int>(it - classes.begin());
}

double evaluate_accuracy(const RunContext& ctx,
                         const std::vector<LayerPrompt>& layers,
                         const std::vector<int>& class_ids,
                         const std::vector<std::size_t>& sample_ids,
                         const Matrix& fixed_text_feats) {
  if (sample_ids.empty()) return 0.0;
  const ToyDualEncoder& model = *ctx.model;
  Matrix text_feats;
  if (ctx.placement == Placement::kText) {
    text_feats = text_features_for(model, merged_prompts(layers), class_ids);
  } else {
    text_feats = fixed_text_feats;
  }

  const Matrix image_prompt =
      ctx.placement == Placement::kImage ? layers[0].merged() : Matrix();

  std::size_t correct = 0;
  for (std::size_t idx : sample_ids) {
    Matrix feat;
    if (ctx.placement == Placement::kText) {
      feat = ctx.image_feats_raw[idx];
    } else {
      feat = forward_image(model, ctx.dataset->samples[idx].patches,
                           &image_prompt);
    }
    const Prediction pred = predict(feat, text_feats, model.config.tau);
    if (class_ids[static_cast<std::size_t>(pred.argmax)] ==
        ctx.dataset->samples[idx].label) {
      ++correct;
    }
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(sample_ids.size());
}

/// Mean objective value over the training pool with the inference-mode
/// prompt; used for the pre-training record.
double initial_loss(const RunContext& ctx,
                    const std::vector<LayerPrompt>& layers,
                    const TrainConfig& config, int* degenerate_skips) {
  const ToyDualEncoder& model = *ctx.model;
  Matrix text_feats;
  Matrix image_prompt;
  if (ctx.placement == Placement::kText) {
    text_feats =
        text_features_for(model, merged_prompts(layers), ctx.train_classes);
  } else {
    text_feats = ctx.text_feats_train;
    image_prompt = layers[0].merged();
  }
  double sum = 0.0;
  for (std::size_t idx : ctx.train_samples) {
    Matrix feat;
    if (ctx.placement == Placement::kText) {
      feat = ctx.image_feats_raw[idx];
    } else {
      feat = forward_image(model, ctx.dataset->samples[idx].patches,
                           &image_prompt);
    }
    const Prediction pred = predict(feat, text_feats, model.config.tau);
    sum += loss_ce(pred.logits,
                   position_of(ctx.train_classes,
                               ctx.dataset->samples[idx].label));
  }
  double loss = sum / static_cast<double>(ctx.train_samples.size());
  for (const LayerPrompt& lp : layers) {
    if (lp.is_dip) continue;
    try {
      if (config.objective == Objective::kAlg1) {
        loss = loss_alg1(loss, lp.full.p, config.k_order, config.lambda);
      } else if (config.objective == Objective::kAlg2) {
        loss = loss_alg2(loss, lp.full.p, config.k_order, config.lambda);
      }
    } catch (const DegeneracyError&) {
      ++*degenerate_skips;
    }
  }
  return loss;
}

/// One optimizer step over a batch. Returns the objective value.
double train_step(const RunContext& ctx, std::vector<LayerPrompt>& layers,
                  const std::vector<std::size_t>& batch,
                  const TrainConfig& config, double lr_now, Rng& dropout_rng,
                  int* degenerate_skips) {
  const ToyDualEncoder& model = *ctx.model;
  ad::Tape tape;
  std::vector<LayerVars> vars =
      push_prompts(tape, layers, /*train_mode=*/true, &dropout_rng);
  std::vector<ad::Var> effective;
  effective.reserve(vars.size());
  for (const LayerVars& lv : vars) effective.push_back(lv.effective);

  ad::Var loss{};
  bool have_loss = false;

  if (ctx.placement == Placement::kText) {
    std::vector<ad::Var> rows;
    rows.reserve(ctx.train_classes.size());
    for (int c : ctx.train_classes) {
      rows.push_back(graph::text_feature(tape, model, effective, c));
    }
    ad::Var feats_t =
        tape.transpose(tape.normalize_rows(tape.concat_rows(rows)));
    for (std::size_t idx : batch) {
      ad::Var iv = tape.constant(ctx.image_feats_norm[idx]);
      ad::Var logits =
          tape.scale(tape.matmul(iv, feats_t), 1.0 / model.config.tau);
      ad::Var ce = tape.cross_entropy_logits(
          logits, position_of(ctx.train_classes,
                              ctx.dataset->samples[idx].label));
      loss = have_loss ? tape.add(loss, ce) : ce;
      have_loss = true;
    }
  } else {
    ad::Var feats_t = tape.transpose(
        tape.constant(normalized_rows_copy(ctx.text_feats_train)));
    for (std::size_t idx : batch) {
      ad::Var patches = tape.constant(ctx.dataset->samples[idx].patches);
      ad::Var iv = tape.normalize_rows(
          graph::image_feature(tape, model, patches, &effective[0]));
      ad::Var logits =
          tape.scale(tape.matmul(iv, feats_t), 1.0 / model.config.tau);
      ad::Var ce = tape.cross_entropy_logits(
          logits, position_of(ctx.train_classes,
                              ctx.dataset->samples[idx].label));
      loss = have_loss ? tape.add(loss, ce) : ce;
      have_loss = true;
    }
  }

  loss = tape.scale(loss, 1.0 / static_cast<double>(batch.size()));
  tape.backward(loss);
  double objective_value = tape.value(loss)(0, 0);

  for (std::size_t l = 0; l < layers.size(); ++l) {
    LayerPrompt& lp = layers[l];
    const LayerVars& lv = vars[l];
    if (lp.is_dip) {
      sgd_step(lp.dip.p_a, tape.grad(lv.pa), lr_now, config.weight_decay);
      sgd_step(lp.dip.p_b, tape.grad(lv.pb), lr_now, config.weight_decay);
      continue;
    }
    Matrix grad = tape.grad(lv.p);
    // Train-mode effective prompt of a full-rank layer is the matrix
    // itself; the spectrum regularizers act on it directly.
    try {
      if (config.objective == Objective::kAlg1) {
        objective_value = loss_alg1(objective_value, lp.full.p, config.k_order,
                                    config.lambda);
        grad += alg1_regularizer_gradient(lp.full.p, config.k_order,
                                          config.lambda);
      } else if (config.objective == Objective::kAlg2) {
        objective_value = loss_alg2(objective_value, lp.full.p, config.k_order,
                                    config.lambda);
        grad += alg2_regularizer_gradient(lp.full.p, config.k_order,
                                          config.lambda);
      }
    } catch (const DegeneracyError&) {
      // Crossings are transient; skip the term for this step.
      ++*degenerate_skips;
    }
    sgd_step(lp.full.p, grad, lr_now, config.weight_decay);
  }
  return objective_value;
}

LogRecord make_record(const RunContext& ctx,
                      const std::vector<LayerPrompt>& layers, long iter,
                      double loss) {
  LogRecord rec;
  rec.iter = iter;
  rec.loss = loss;
  rec.base_acc = evaluate_accuracy(ctx, layers, ctx.base_classes,
                                   ctx.base_samples, ctx.text_feats_base);
  rec.new_acc = ctx.new_samples.empty()
                    ? rec.base_acc
                    : evaluate_accuracy(ctx, layers, ctx.new_classes,
                                        ctx.new_samples, ctx.text_feats_new);
  const Matrix merged = layers[0].merged();
  rec.sigma = svd_thin(merged).sigma;
  if (rec.sigma[0] > 0.0) {
    rec.id1 = information_density(rec.sigma, 1).value;
    rec.id2 = rec.sigma.size() >= 2
                  ? information_density(rec.sigma, 2).value
                  : 1.0;
  } else {
    rec.id1 = nan_value();
    rec.id2 = nan_value();
  }
  return rec;
}

double safe_spearman(const std::vector<double>& xs,
                     const std::vector<double>& ys) {
  try {
    return spearman(xs, ys);
  } catch (const Error&) {
    return nan_value();
  }
}

ExperimentLog run_training(const TrainConfig& config, const PromptSpec& spec,
                           RunContext& ctx, bool log_every_iter,
                           TrainedPrompt* out_prompt) {
  const ToyDualEncoder& model = *ctx.model;
  config.validate();
  if (spec.depth < 1 ||
      spec.depth > static_cast<int>(model.text_blocks.size())) {
    throw RangeError("run: prompt depth outside [1, m_layers]");
  }
  if (spec.placement == Placement::kImage && spec.depth != 1) {
    throw RangeError("run: image placement supports depth 1 only");
  }
  if (spec.depth > 1 && spec.depth != model.config.prompt_depth) {
    throw RangeError("run: prompt depth does not match the model's");
  }
  if ((config.objective == Objective::kAlg1 ||
       config.objective == Objective::kAlg2) &&
      (config.k_order < 1 || static_cast<std::size_t>(config.k_order) > spec.n)) {
    throw RangeError("run: k_order outside [1, n]");
  }

  const std::size_t width = spec.placement == Placement::kText
                                ? model.config.d_text
                                : model.config.d_vis;
  std::vector<LayerPrompt> layers = make_prompts(config, spec, width);

  build_caches(ctx, spec);

  ExperimentLog log;
  int degenerate_skips = 0;

  const std::size_t train_count = ctx.train_samples.size();
  if (train_count == 0) {
    throw RangeError("run: empty training pool");
  }
  const long steps_per_epoch = static_cast<long>(
      (train_count + static_cast<std::size_t>(config.batch_size) - 1) /
      static_cast<std::size_t>(config.batch_size));
  log.warmup_steps = config.epochs > 0 ? steps_per_epoch : 0;

  log.records.push_back(make_record(
      ctx, layers, 0, initial_loss(ctx, layers, config, &degenerate_skips)));

  Rng shuffle_rng = Rng(config.seed).child(kShuffleTag);
  Rng dropout_rng = Rng(config.seed).child(kDropoutTag);

  std::vector<std::size_t> order = ctx.train_samples;
  long iter = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr_now =
        lr_schedule(epoch, config.epochs, config.lr, config.warmup_lr);
    shuffle_rng.shuffle(order);
    double epoch_loss_sum = 0.0;
    long epoch_steps = 0;
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), at + static_cast<std::size_t>(config.batch_size));
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(at),
                                     order.begin() + static_cast<std::ptrdiff_t>(stop));
      const double batch_loss = train_step(ctx, layers, batch, config, lr_now,
                                           dropout_rng, &degenerate_skips);
      ++iter;
      ++epoch_steps;
      epoch_loss_sum += batch_loss;
      if (log_every_iter) {
        log.records.push_back(make_record(ctx, layers, iter, batch_loss));
      }
    }
    if (!log_every_iter) {
      log.records.push_back(make_record(
          ctx, layers, iter,
          epoch_loss_sum / static_cast<double>(std::max(epoch_steps, 1L))));
    }
  }

  const LogRecord& last = log.records.back();
  log.final.base_acc = last.base_acc;
  log.final.new_acc = last.new_acc;
  log.final.harmonic_mean = (last.base_acc > 0.0 && last.new_acc > 0.0)
                                ? harmonic_mean(last.base_acc, last.new_acc)
                                : 0.0;
  long long params = 0;
  for (const LayerPrompt& lp : layers) params += lp.trainable_params();
  log.final.param_count = params;
  log.final.degenerate_skips = degenerate_skips;

  std::vector<double> id1s, id2s, news;
  for (const LogRecord& rec : log.records) {
    if (rec.iter <= log.warmup_steps) continue;
    id1s.push_back(rec.id1);
    id2s.push_back(rec.id2);
    news.push_back(rec.new_acc);
  }
  log.final.spearman_id1_newacc = safe_spearman(id1s, news);
  log.final.spearman_id2_newacc = safe_spearman(id2s, news);

  if (out_prompt != nullptr) {
    out_prompt->is_dip = layers[0].is_dip;
    if (layers[0].is_dip) {
      out_prompt->dip = layers[0].dip;
    } else {
      out_prompt->full = layers[0].full;
    }
  }
  return log;
}

}  // namespace

const char* objective_name(Objective o) {
  switch (o) {
    case Objective::kCeFullRank:
      return "CE_FULLRANK";
    case Objective::kAlg1:
      return "ALG1";
    case Objective::kAlg2:
      return "ALG2";
    case Objective::kAlg3Dip:
      return "ALG3_DIP";
  }
  return "?";
}

Objective objective_from_name(const std::string& name) {
  if (name == "CE_FULLRANK") return Objective::kCeFullRank;
  if (name == "ALG1") return Objective::kAlg1;
  if (name == "ALG2") return Objective::kAlg2;
  if (name == "ALG3_DIP") return Objective::kAlg3Dip;
  throw ConfigError("unknown objective '" + name + "'");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw RangeError("TrainConfig: epochs must be >= 0");
  if (batch_size < 1) throw RangeError("TrainConfig: batch_size must be >= 1");
  if (!(lr > 0.0)) throw DomainError("TrainConfig: lr must be positive");
  if (!(warmup_lr > 0.0)) {
    throw DomainError("TrainConfig: warmup_lr must be positive");
  }
  if (weight_decay < 0.0) {
    throw DomainError("TrainConfig: weight_decay must be >= 0");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw DomainError("TrainConfig: dropout_p must lie in [0, 1)");
  }
  if ((objective == Objective::kAlg1 || objective == Objective::kAlg2) &&
      !(lambda > 0.0)) {
    throw DomainError("TrainConfig: lambda must be positive for ALG1/ALG2");
  }
  if (objective == Objective::kAlg3Dip && rank < 1) {
    throw RangeError("TrainConfig: rank must be >= 1 for ALG3_DIP");
  }
  if (objective == Objective::kAlg3Dip && !(gaussian_sigma > 0.0)) {
    throw DomainError("TrainConfig: gaussian_sigma must be positive");
  }
}

double loss_ce(const Logits& logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.scores.size()) {
    throw RangeError("loss_ce: label outside the class range");
  }
  double mx = logits.scores[0];
  for (double s : logits.scores) mx = std::max(mx, s);
  double sum = 0.0;
  for (double s : logits.scores) sum += std::exp(s - mx);
  const double lse = mx + std::log(sum);
  return lse - logits.scores[static_cast<std::size_t>(label)];
}

double loss_alg1(double ce, const Matrix& p_effective, int k, double lambda) {
  if (lambda < 0.0) {
    throw DomainError("loss_alg1: lambda must be >= 0");
  }
  if (lambda == 0.0) return ce;
  const SvdResult svd = svd_thin(p_effective);
  return ce - lambda * information_density(svd.sigma, k).value;
}

Matrix alg1_regularizer_gradient(const Matrix& p_effective, int k,
                                 double lambda) {
  Matrix g = id_gradient(p_effective, k);
  g *= -lambda;
  return g;
}

double loss_alg2(double ce, const Matrix& p_effective, int k, double lambda) {
  if (lambda < 0.0) {
    throw DomainError("loss_alg2: lambda must be >= 0");
  }
  if (lambda == 0.0) return ce;
  const SvdResult svd = svd_thin(p_effective);
  const int n = static_cast<int>(svd.sigma.size());
  if (k < 1 || k > n) {
    throw RangeError("loss_alg2: k outside [1, n]");
  }
  double penalty = 0.0;
  for (int i = n - k + 1; i <= n; ++i) {
    penalty += static_cast<double>(i) * svd.sigma[static_cast<std::size_t>(i - 1)];
  }
  return ce + lambda * penalty;
}

Matrix alg2_regularizer_gradient(const Matrix& p_effective, int k,
                                 double lambda) {
  const SvdResult svd = svd_thin(p_effective);
  const int n = static_cast<int>(svd.sigma.size());
  if (k < 1 || k > n) {
    throw RangeError("alg2_regularizer_gradient: k outside [1, n]");
  }
  Matrix g(p_effective.rows(), p_effective.cols());
  for (int i = n - k + 1; i <= n; ++i) {
    // Reuses the degeneracy-checked per-value gradient.
    Matrix gi = singular_value_gradient(p_effective, i);
    gi *= lambda * static_cast<double>(i);
    g += gi;
  }
  return g;
}

void sgd_step(Matrix& param, const Matrix& grad, double lr,
              double weight_decay) {
  ensure_same_shape(param, grad, "sgd_step");
  for (std::size_t i = 0; i < param.data().size(); ++i) {
    param.data()[i] -=
        lr * (grad.data()[i] + weight_decay * param.data()[i]);
  }
}

double lr_schedule(int epoch, int total_epochs, double lr, double warmup_lr) {
  if (epoch < 0 || epoch >= total_epochs) {
    throw RangeError("lr_schedule: epoch outside [0, total_epochs)");
  }
  if (epoch == 0) return warmup_lr;
  if (total_epochs <= 2) return lr;
  const double phase = static_cast<double>(epoch - 1) /
                       static_cast<double>(total_epochs - 1);
  return lr * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
}

Matrix TrainedPrompt::merged() const {
  return is_dip ? merge(*dip) : full->p;
}

long long TrainedPrompt::trainable_params() const {
  return is_dip ? dip->trainable_params() : full->trainable_params();
}

ExperimentLog run_base_to_new_checkpointed(const TrainConfig& config,
                                           const PromptSpec& prompt_spec,
                                           const SyntheticDataset& dataset,
                                           const ToyDualEncoder& model,
                                           bool log_every_iter,
                                           TrainedPrompt* out_prompt) {
  RunContext ctx;
  ctx.dataset = &dataset;
  ctx.model = &model;
  ctx.placement = prompt_spec.placement;

  // The split derives from the dataset seed so every objective sees the
  // same base/new partition.
  const SplitSpec split =
      split_base_new(dataset, Rng(dataset.seed).child(kSplitTag).seed());
  ctx.train_classes = split.base_classes;
  ctx.base_classes = split.base_classes;
  ctx.new_classes = split.new_classes;
  ctx.train_samples = dataset.indices_of(split.base_classes);
  ctx.base_samples = ctx.train_samples;
  ctx.new_samples = dataset.indices_of(split.new_classes);

  return run_training(config, prompt_spec, ctx, log_every_iter, out_prompt);
}

ExperimentLog run_base_to_new(const TrainConfig& config,
                              const PromptSpec& prompt_spec,
                              const SyntheticDataset& dataset,
                              const ToyDualEncoder& model,
                              bool log_every_iter) {
  return run_base_to_new_checkpointed(config, prompt_spec, dataset, model,
                                      log_every_iter, nullptr);
}

std::vector<FewshotRow> run_fewshot(const TrainConfig& config,
                                    const PromptSpec& prompt_spec,
                                    const SyntheticDataset& dataset,
                                    const ToyDualEncoder& model,
                                    const std::vector<int>& shots_list) {
  std::vector<int> all_classes(static_cast<std::size_t>(dataset.c_total));
  std::iota(all_classes.begin(), all_classes.end(), 0);
  std::vector<std::size_t> all_samples(dataset.samples.size());
  std::iota(all_samples.begin(), all_samples.end(), 0);

  std::vector<FewshotRow> rows;
  for (int shots : shots_list) {
    RunContext ctx;
    ctx.dataset = &dataset;
    ctx.model = &model;
    ctx.placement = prompt_spec.placement;
    ctx.train_classes = all_classes;
    ctx.base_classes = all_classes;
    ctx.new_classes.clear();
    ctx.train_samples = sample_shots(dataset, all_classes, shots,
                                     Rng(config.seed).child(kShotTag).seed());
    ctx.base_samples = all_samples;
    ctx.new_samples.clear();

    const ExperimentLog log =
        run_training(config, prompt_spec, ctx, false, nullptr);
    rows.push_back(FewshotRow{shots, log.final.base_acc});
  }
  return rows;
}

AblationAxis ablation_axis_from_name(const std::string& name) {
  if (name == "rank") return AblationAxis::kRank;
  if (name == "dropout") return AblationAxis::kDropout;
  if (name == "epochs") return AblationAxis::kEpochs;
  if (name == "depth") return AblationAxis::kDepth;
  if (name == "placement") return AblationAxis::kPlacement;
  throw ConfigError("unknown ablation axis '" + name + "'");
}

const char* ablation_axis_name(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kRank:
      return "rank";
    case AblationAxis::kDropout:
      return "dropout";
    case AblationAxis::kEpochs:
      return "epochs";
    case AblationAxis::kDepth:
      return "depth";
    case AblationAxis::kPlacement:
      return "placement";
  }
  return "?";
}

std::vector<AblationRow> run_ablation(AblationAxis axis,
                                      const std::vector<double>& values,
                                      const TrainConfig& base_config,
                                      const PromptSpec& prompt_spec,
                                      const SyntheticDataset& dataset,
                                      const ModelConfig& model_config) {
  std::vector<AblationRow> rows;

  auto run_cell = [&](const TrainConfig& cfg, const PromptSpec& spec,
                      const ModelConfig& mc, const std::string& label) {
    ToyDualEncoder model = ToyDualEncoder::create(mc, dataset);
    const ExperimentLog log = run_base_to_new(cfg, spec, dataset, model);
    AblationRow row;
    row.value = label;
    row.param_count = log.final.param_count;
    row.base_acc = log.final.base_acc;
    row.new_acc = log.final.new_acc;
    row.harmonic_mean = log.final.harmonic_mean;
    rows.push_back(row);
  };

  auto format_number = [](double v) {
    if (v == static_cast<double>(static_cast<long long>(v))) {
      return std::to_string(static_cast<long long>(v));
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
  };

  if (axis == AblationAxis::kPlacement) {
    for (Placement placement : {Placement::kText, Placement::kImage}) {
      PromptSpec spec = prompt_spec;
      spec.placement = placement;
      spec.depth = 1;
      ModelConfig mc = model_config;
      mc.prompt_depth = 1;
      run_cell(base_config, spec, mc,
               placement == Placement::kText ? "text" : "image");
    }
    return rows;
  }

  if (values.empty()) {
    throw RangeError("run_ablation: no axis values given");
  }
  for (double v : values) {
    TrainConfig cfg = base_config;
    PromptSpec spec = prompt_spec;
    ModelConfig mc = model_config;
    switch (axis) {
      case AblationAxis::kRank:
        cfg.rank = static_cast<int>(v);
        if (cfg.rank < 1) {
          throw RangeError("run_ablation: rank must be >= 1");
        }
        break;
      case AblationAxis::kDropout:
        if (!(v >= 0.0 && v < 1.0)) {
          throw RangeError("run_ablation: dropout value outside [0, 1)");
        }
        cfg.dropout_p = v;
        break;
      case AblationAxis::kEpochs:
        if (v < 0.0) {
          throw RangeError("run_ablation: epochs must be >= 0");
        }
        cfg.epochs = static_cast<int>(v);
        break;
      case AblationAxis::kDepth: {
        const int depth = static_cast<int>(v);
        if (depth < 1 || depth > model_config.m_layers) {
          throw RangeError("run_ablation: depth outside [1, m_layers]");
        }
        spec.depth = depth;
        mc.prompt_depth = depth;
        break;
      }
      case AblationAxis::kPlacement:
        break;
    }
    run_cell(cfg, spec, mc, format_number(v));
  }
  return rows;
}

}  // namespace dip
