#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dip/data.hpp"
#include "dip/matrix.hpp"
#include "dip/model.hpp"
#include "dip/prompt.hpp"

namespace dip {

enum class Objective { kCeFullRank, kAlg1, kAlg2, kAlg3Dip };

const char* objective_name(Objective o);
Objective objective_from_name(const std::string& name);

enum class Placement { kText, kImage };

struct TrainConfig {
  Objective objective = Objective::kAlg3Dip;
  int k_order = 1;        // spectrum order targeted by ALG1/ALG2
  double lambda = 0.1;    // regularizer weight for ALG1/ALG2
  int epochs = 10;
  int batch_size = 16;
  double lr = 2e-3;
  double warmup_lr = 1e-4;  // constant rate during epoch 0
  double weight_decay = 5e-4;
  double dropout_p = 0.1;
  int rank = 1;
  double gaussian_sigma = 1e-2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PromptSpec {
  std::size_t n = 4;                     // prompt token count
  Placement placement = Placement::kText;
  std::uint64_t init_seed = 42;          // derives the frozen template init
  int depth = 1;                         // deep-prompt layers (text side)
};

struct LogRecord {
  long iter = 0;  // optimizer steps completed when the record was taken
  double loss = 0.0;
  double base_acc = 0.0;
  double new_acc = 0.0;
  std::vector<double> sigma;  // merged-prompt spectrum, non-increasing
  double id1 = 0.0;
  double id2 = 0.0;
};

struct ExperimentSummary {
  double base_acc = 0.0;
  double new_acc = 0.0;
  double harmonic_mean = 0.0;
  // Spearman of the post-warmup ID trajectory against the new-class
  // accuracy trajectory; NaN when undefined (constant trajectory or
  // fewer than two post-warmup records).
  double spearman_id1_newacc = 0.0;
  double spearman_id2_newacc = 0.0;
  long long param_count = 0;
  int degenerate_skips = 0;  // regularizer steps skipped on clustered sigma
};

struct ExperimentLog {
  std::vector<LogRecord> records;
  ExperimentSummary final;
  long warmup_steps = 0;  // records with iter <= warmup_steps are warmup
};

/// Cross entropy -log p(label) of a classifier head output.
double loss_ce(const Logits& logits, int label);

/// ALG1 objective value: ce - lambda * IDk(p_effective).
double loss_alg1(double ce, const Matrix& p_effective, int k, double lambda);

/// ALG1 regularizer gradient, the term added to the CE gradient:
/// -lambda * d IDk / dP.
Matrix alg1_regularizer_gradient(const Matrix& p_effective, int k,
                                 double lambda);

/// ALG2 objective value: ce + lambda * sum_{i=n-k+1}^{n} i * sigma_i.
double loss_alg2(double ce, const Matrix& p_effective, int k, double lambda);

/// ALG2 regularizer gradient: +lambda * sum over the penalized tail of
/// i * u_i v_i^T.
Matrix alg2_regularizer_gradient(const Matrix& p_effective, int k,
                                 double lambda);

/// In-place SGD update p <- p - lr * (g + weight_decay * p).
void sgd_step(Matrix& param, const Matrix& grad, double lr,
              double weight_decay);

/// warmup_lr during epoch 0, then cosine decay from lr toward 0 over
/// the remaining epochs (epoch 1 gets exactly lr).
double lr_schedule(int epoch, int total_epochs, double lr, double warmup_lr);

/// Trains on the base half of the classes only, evaluating base and new
/// accuracy plus the merged-prompt spectrum and ID1/ID2 each interval
/// (per epoch, or per step with log_every_iter).
ExperimentLog run_base_to_new(const TrainConfig& config,
                              const PromptSpec& prompt_spec,
                              const SyntheticDataset& dataset,
                              const ToyDualEncoder& model,
                              bool log_every_iter = false);

struct FewshotRow {
  int shots = 0;
  double accuracy = 0.0;  // all-classes test accuracy, percent
};

/// One trained prompt per shot count; every class is visible and
/// training uses exactly `shots` seeded samples per class.
std::vector<FewshotRow> run_fewshot(const TrainConfig& config,
                                    const PromptSpec& prompt_spec,
                                    const SyntheticDataset& dataset,
                                    const ToyDualEncoder& model,
                                    const std::vector<int>& shots_list);

enum class AblationAxis { kRank, kDropout, kEpochs, kDepth, kPlacement };

AblationAxis ablation_axis_from_name(const std::string& name);
const char* ablation_axis_name(AblationAxis axis);

struct AblationRow {
  std::string value;  // printable axis value ("1", "0.1", "text", ...)
  long long param_count = 0;
  double base_acc = 0.0;
  double new_acc = 0.0;
  double harmonic_mean = 0.0;
};

/// One base/new/H row per axis value. The placement axis ignores
/// `values` and always emits the text and image rows. The depth axis
/// rebuilds the model with the corresponding prompt_depth.
std::vector<AblationRow> run_ablation(AblationAxis axis,
                                      const std::vector<double>& values,
                                      const TrainConfig& base_config,
                                      const PromptSpec& prompt_spec,
                                      const SyntheticDataset& dataset,
                                      const ModelConfig& model_config);

/// The run's trained state, exposed so the CLI can checkpoint it.
struct TrainedPrompt {
  bool is_dip = false;
  std::optional<DipPrompt> dip;
  std::optional<FullRankPrompt> full;
  Matrix merged() const;
  long long trainable_params() const;
};

/// run_base_to_new variant that also returns the trained first-layer
/// prompt for checkpointing.
ExperimentLog run_base_to_new_checkpointed(const TrainConfig& config,
                                           const PromptSpec& prompt_spec,
                                           const SyntheticDataset& dataset,
                                           const ToyDualEncoder& model,
                                           bool log_every_iter,
                                           TrainedPrompt* out_prompt);

}  // namespace dip
