#ifndef LADDER_TAGRN_HPP_
#define LADDER_TAGRN_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ladder/core.hpp"

namespace ladder {

// Per-frame feature matrix feeding the predictor (T x D, row = frame).
struct FeatureSequence {
  std::string sequence_id;
  Eigen::MatrixXd values;
};

struct TagrnConfig {
  int t_frames = 10;
  int feature_dim = 512;
  int heads = 4;
  int gru_layers = 2;
  int gru_hidden = 256;
  double dropout_p = 0.25;
  int tasks_b = 10;
  int classes_r = 7;
  // Attention logits are scaled by 1/sqrt(D); the conventional per-head
  // 1/sqrt(D/heads) is available behind this flag.
  bool per_head_attention_scale = false;
  bool attention_bias = true;

  void validate() const;
  int head_dim() const { return feature_dim / heads; }
  double attention_scale() const;
};

// One GRU direction of one layer. Gate weights map the [hidden, input]
// concatenation to hidden; the candidate gate sees [reset * hidden, input].
struct GruCellParams {
  Eigen::MatrixXd w_update, w_reset, w_candidate;  // H x (H + input)
  Eigen::VectorXd b_update, b_reset, b_candidate;  // H
};

struct TagrnParams {
  Eigen::MatrixXd w_query, w_key, w_value, w_out;  // D x D
  Eigen::VectorXd b_query, b_key, b_value, b_out;  // D
  // [layer][direction], direction 0 = forward, 1 = backward.
  std::vector<std::array<GruCellParams, 2>> gru;
  Eigen::MatrixXd w_classifier;  // 2H x (B*R)
  Eigen::VectorXd b_classifier;  // B*R

  // Flat views in declared order, for the optimizer and gradient checks.
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
  static TagrnParams zeros_like(const TagrnConfig& config);
};

struct FocalLossConfig {
  double gamma = 2.0;
  Eigen::VectorXd alpha;  // per-class weights; empty = all ones

  double alpha_for(int cls) const {
    return alpha.size() == 0 ? 1.0 : alpha(cls);
  }
};

struct TrainConfig {
  int epochs = 100;
  double lr_initial = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int batch_size = 8;
  uint64_t seed = 0;
};

struct EpochStats {
  double mean_loss = 0.0;
  double accuracy = 0.0;
  double learning_rate = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

TagrnParams init_params(const TagrnConfig& config, uint64_t seed);

Eigen::MatrixXd attention_forward(const Eigen::MatrixXd& x,
                                  const TagrnParams& params,
                                  const TagrnConfig& config);

// Concatenation of the top layer's final forward and final backward hidden
// states (2H).
Eigen::VectorXd gru_forward(const Eigen::MatrixXd& attended,
                            const TagrnParams& params,
                            const TagrnConfig& config);

// Inverted dropout on the sequence feature (train mode only), linear map,
// per-task softmax. Returns B x R row-stochastic matrix.
Eigen::MatrixXd classify(const Eigen::VectorXd& feature,
                         const TagrnParams& params, const TagrnConfig& config,
                         bool train_mode, uint64_t dropout_seed);

Eigen::MatrixXd tagrn_forward(const Eigen::MatrixXd& x,
                              const TagrnParams& params,
                              const TagrnConfig& config, bool train_mode,
                              uint64_t dropout_seed);

// Focal loss summed over the B tasks; `true_class` holds one class index per
// task. Probability at the true class is clamped at 1e-12 before the log.
double focal_loss(const Eigen::MatrixXd& probabilities,
                  const std::vector<int>& true_class,
                  const FocalLossConfig& loss_config);

// Loss and analytic gradients of one (sequence, label) pair. The forward
// pass is rerun internally with the given dropout seed.
double tagrn_backward(const Eigen::MatrixXd& x,
                      const std::vector<int>& true_class,
                      const TagrnParams& params, const TagrnConfig& config,
                      const FocalLossConfig& loss_config, bool train_mode,
                      uint64_t dropout_seed, TagrnParams& gradients);

struct TrainSample {
  FeatureSequence features;
  std::vector<int> true_class;  // length B
};

std::vector<int> ladder_classes(const BitrateLadder& ladder,
                                const EncodingRecipe& recipe);

// Minibatch SGD with momentum, weight decay and cosine-annealed learning
// rate. Deterministic given traincfg.seed.
std::pair<TagrnParams, TrainHistory> tagrn_train(
    const std::vector<TrainSample>& dataset, const TagrnConfig& config,
    const TrainConfig& traincfg, const FocalLossConfig& loss_config);

// Per-row argmax of P mapped onto the recipe; ties fall to the lower
// resolution, matching the hull builder's default.
BitrateLadder predict_ladder(const Eigen::MatrixXd& x,
                             const TagrnParams& params,
                             const TagrnConfig& config,
                             const EncodingRecipe& recipe,
                             const std::string& sequence_id = "");

// Inverse-frequency per-class alpha from a class histogram (B x R counts),
// normalized to mean 1.
Eigen::VectorXd inverse_frequency_alpha(
    const std::vector<std::vector<int>>& histogram);

}  // namespace ladder

#endif  // LADDER_TAGRN_HPP_
