#include "ladder/tagrn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ladder/rng.hpp"

namespace ladder {

void TagrnConfig::validate() const {
  if (t_frames < 1) throw std::invalid_argument("t_frames must be >= 1");
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  if (heads < 1 || feature_dim % heads != 0)
    throw std::invalid_argument("feature_dim must be divisible by heads");
  if (gru_layers < 1) throw std::invalid_argument("gru_layers must be >= 1");
  if (gru_hidden < 1) throw std::invalid_argument("gru_hidden must be >= 1");
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    throw std::invalid_argument("dropout_p must be in [0, 1)");
  if (tasks_b < 1) throw std::invalid_argument("tasks_b must be >= 1");
  if (classes_r < 2) throw std::invalid_argument("classes_r must be >= 2");
}

double TagrnConfig::attention_scale() const {
  return 1.0 / std::sqrt(static_cast<double>(
             per_head_attention_scale ? head_dim() : feature_dim));
}

namespace {

int gru_input_dim(const TagrnConfig& config, int layer) {
  return layer == 0 ? config.feature_dim : 2 * config.gru_hidden;
}

Eigen::MatrixXd uniform_matrix(int rows, int cols, int fan_in,
                               std::mt19937_64& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

void append(Eigen::VectorXd& out, Eigen::Index& pos, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(pos++) = m(i, j);
}

void take(const Eigen::VectorXd& in, Eigen::Index& pos, Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = in(pos++);
}

void append(Eigen::VectorXd& out, Eigen::Index& pos, const Eigen::VectorXd& v) {
  out.segment(pos, v.size()) = v;
  pos += v.size();
}

void take(const Eigen::VectorXd& in, Eigen::Index& pos, Eigen::VectorXd& v) {
  v = in.segment(pos, v.size());
  pos += v.size();
}

template <typename Fn>
void visit_params(TagrnParams& p, Fn&& fn) {
  fn(p.w_query);
  fn(p.b_query);
  fn(p.w_key);
  fn(p.b_key);
  fn(p.w_value);
  fn(p.b_value);
  fn(p.w_out);
  fn(p.b_out);
  for (auto& layer : p.gru) {
    for (auto& cell : layer) {
      fn(cell.w_update);
      fn(cell.b_update);
      fn(cell.w_reset);
      fn(cell.b_reset);
      fn(cell.w_candidate);
      fn(cell.b_candidate);
    }
  }
  fn(p.w_classifier);
  fn(p.b_classifier);
}

Eigen::Index param_count(const TagrnParams& p) {
  Eigen::Index n = 0;
  visit_params(const_cast<TagrnParams&>(p),
               [&n](const auto& m) { n += m.size(); });
  return n;
}

}  // namespace

Eigen::VectorXd TagrnParams::flatten() const {
  Eigen::VectorXd flat(param_count(*this));
  Eigen::Index pos = 0;
  visit_params(const_cast<TagrnParams&>(*this),
               [&](const auto& m) { append(flat, pos, m); });
  return flat;
}

void TagrnParams::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count(*this))
    throw std::invalid_argument("flat parameter size mismatch");
  Eigen::Index pos = 0;
  visit_params(*this, [&](auto& m) { take(flat, pos, m); });
}

TagrnParams TagrnParams::zeros_like(const TagrnConfig& config) {
  config.validate();
  const int d = config.feature_dim;
  const int h = config.gru_hidden;
  TagrnParams p;
  p.w_query = p.w_key = p.w_value = p.w_out = Eigen::MatrixXd::Zero(d, d);
  p.b_query = p.b_key = p.b_value = p.b_out = Eigen::VectorXd::Zero(d);
  p.gru.resize(config.gru_layers);
  for (int layer = 0; layer < config.gru_layers; ++layer) {
    int in = gru_input_dim(config, layer);
    for (auto& cell : p.gru[layer]) {
      cell.w_update = cell.w_reset = cell.w_candidate =
          Eigen::MatrixXd::Zero(h, h + in);
      cell.b_update = cell.b_reset = cell.b_candidate =
          Eigen::VectorXd::Zero(h);
    }
  }
  p.w_classifier =
      Eigen::MatrixXd::Zero(2 * h, config.tasks_b * config.classes_r);
  p.b_classifier = Eigen::VectorXd::Zero(config.tasks_b * config.classes_r);
  return p;
}

TagrnParams init_params(const TagrnConfig& config, uint64_t seed) {
  config.validate();
  TagrnParams p = TagrnParams::zeros_like(config);
  std::mt19937_64 rng(derive_seed(seed, "tagrn-init"));
  const int d = config.feature_dim;
  // fan_in is the dimension each matrix contracts with its input.
  p.w_query = uniform_matrix(d, d, d, rng);
  p.w_key = uniform_matrix(d, d, d, rng);
  p.w_value = uniform_matrix(d, d, d, rng);
  p.w_out = uniform_matrix(d, d, d, rng);
  for (int layer = 0; layer < config.gru_layers; ++layer) {
    int in = gru_input_dim(config, layer);
    int fan_in = config.gru_hidden + in;
    for (auto& cell : p.gru[layer]) {
      cell.w_update = uniform_matrix(config.gru_hidden, fan_in, fan_in, rng);
      cell.w_reset = uniform_matrix(config.gru_hidden, fan_in, fan_in, rng);
      cell.w_candidate =
          uniform_matrix(config.gru_hidden, fan_in, fan_in, rng);
    }
  }
  p.w_classifier =
      uniform_matrix(2 * config.gru_hidden,
                     config.tasks_b * config.classes_r, 2 * config.gru_hidden,
                     rng);
  return p;
}

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::RowVectorXd row = logits.row(i);
    double m = row.maxCoeff();
    Eigen::RowVectorXd e = (row.array() - m).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

struct AttentionCache {
  Eigen::MatrixXd q, k, v;                 // T x D
  std::vector<Eigen::MatrixXd> head_softmax;  // per head, T x T
  Eigen::MatrixXd concat;                  // T x D (heads concatenated)
  Eigen::MatrixXd output;                  // T x D
};

void attention_forward_cached(const Eigen::MatrixXd& x,
                              const TagrnParams& params,
                              const TagrnConfig& config,
                              AttentionCache& cache) {
  const int t = static_cast<int>(x.rows());
  const int d = config.feature_dim;
  if (x.cols() != d) throw std::invalid_argument("feature dim mismatch");
  if (!x.allFinite()) throw std::invalid_argument("non-finite input features");
  cache.q = x * params.w_query;
  cache.k = x * params.w_key;
  cache.v = x * params.w_value;
  if (config.attention_bias) {
    cache.q.rowwise() += params.b_query.transpose();
    cache.k.rowwise() += params.b_key.transpose();
    cache.v.rowwise() += params.b_value.transpose();
  }
  const int dh = config.head_dim();
  const double scale = config.attention_scale();
  cache.concat.resize(t, d);
  cache.head_softmax.assign(config.heads, {});
  for (int head = 0; head < config.heads; ++head) {
    auto qh = cache.q.middleCols(head * dh, dh);
    auto kh = cache.k.middleCols(head * dh, dh);
    auto vh = cache.v.middleCols(head * dh, dh);
    Eigen::MatrixXd logits = scale * (qh * kh.transpose());
    cache.head_softmax[head] = softmax_rows(logits);
    cache.concat.middleCols(head * dh, dh) = cache.head_softmax[head] * vh;
  }
  cache.output = cache.concat * params.w_out;
  if (config.attention_bias)
    cache.output.rowwise() += params.b_out.transpose();
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct GruStepCache {
  Eigen::VectorXd h_prev, x, z, r, candidate, h;
};

struct GruDirectionCache {
  std::vector<GruStepCache> steps;  // in processing order
};

struct GruCache {
  // [layer][direction]
  std::vector<std::array<GruDirectionCache, 2>> layers;
  std::vector<Eigen::MatrixXd> layer_outputs;  // per layer, T x 2H by time t
  Eigen::VectorXd feature;                     // F, 2H
};

void gru_direction_forward(const Eigen::MatrixXd& input,
                           const GruCellParams& cell, int hidden,
                           bool backward_dir, GruDirectionCache& cache) {
  const int t_len = static_cast<int>(input.rows());
  cache.steps.clear();
  cache.steps.reserve(t_len);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
  for (int step = 0; step < t_len; ++step) {
    int t = backward_dir ? t_len - 1 - step : step;
    GruStepCache s;
    s.h_prev = h;
    s.x = input.row(t).transpose();
    Eigen::VectorXd u(hidden + s.x.size());
    u << s.h_prev, s.x;
    s.z = (cell.w_update * u + cell.b_update).unaryExpr([](double v) {
      return sigmoid(v);
    });
    s.r = (cell.w_reset * u + cell.b_reset).unaryExpr([](double v) {
      return sigmoid(v);
    });
    Eigen::VectorXd uc(hidden + s.x.size());
    uc << s.r.cwiseProduct(s.h_prev), s.x;
    s.candidate =
        (cell.w_candidate * uc + cell.b_candidate).array().tanh().matrix();
    s.h = (Eigen::VectorXd::Ones(hidden) - s.z).cwiseProduct(s.h_prev) +
          s.z.cwiseProduct(s.candidate);
    h = s.h;
    cache.steps.push_back(std::move(s));
  }
}

void gru_forward_cached(const Eigen::MatrixXd& attended,
                        const TagrnParams& params, const TagrnConfig& config,
                        GruCache& cache) {
  const int t_len = static_cast<int>(attended.rows());
  const int h = config.gru_hidden;
  cache.layers.assign(config.gru_layers, {});
  cache.layer_outputs.assign(config.gru_layers, {});
  Eigen::MatrixXd input = attended;
  for (int layer = 0; layer < config.gru_layers; ++layer) {
    auto& dirs = cache.layers[layer];
    gru_direction_forward(input, params.gru[layer][0], h, false, dirs[0]);
    gru_direction_forward(input, params.gru[layer][1], h, true, dirs[1]);
    Eigen::MatrixXd out(t_len, 2 * h);
    for (int t = 0; t < t_len; ++t) {
      out.row(t).head(h) = dirs[0].steps[t].h.transpose();
      out.row(t).tail(h) = dirs[1].steps[t_len - 1 - t].h.transpose();
    }
    cache.layer_outputs[layer] = out;
    input = out;
  }
  cache.feature.resize(2 * h);
  cache.feature.head(h) = cache.layers.back()[0].steps.back().h;
  cache.feature.tail(h) = cache.layers.back()[1].steps.back().h;
}

Eigen::VectorXd dropout_mask(int size, double p, uint64_t seed) {
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(size);
  if (p <= 0.0) return mask;
  std::mt19937_64 rng(derive_seed(seed, "tagrn-dropout"));
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  for (int i = 0; i < size; ++i)
    mask(i) = dist(rng) < p ? 0.0 : keep_scale;
  return mask;
}

struct ForwardCache {
  AttentionCache attention;
  GruCache gru;
  Eigen::VectorXd mask, dropped;
  Eigen::VectorXd logits;
  Eigen::MatrixXd probabilities;
};

void forward_cached(const Eigen::MatrixXd& x, const TagrnParams& params,
                    const TagrnConfig& config, bool train_mode,
                    uint64_t dropout_seed, ForwardCache& cache) {
  attention_forward_cached(x, params, config, cache.attention);
  gru_forward_cached(cache.attention.output, params, config, cache.gru);
  const int f_dim = 2 * config.gru_hidden;
  cache.mask = train_mode ? dropout_mask(f_dim, config.dropout_p, dropout_seed)
                          : Eigen::VectorXd::Ones(f_dim);
  cache.dropped = cache.gru.feature.cwiseProduct(cache.mask);
  cache.logits =
      params.w_classifier.transpose() * cache.dropped + params.b_classifier;
  Eigen::MatrixXd logit_rows(config.tasks_b, config.classes_r);
  for (int i = 0; i < config.tasks_b; ++i)
    logit_rows.row(i) =
        cache.logits.segment(i * config.classes_r, config.classes_r)
            .transpose();
  cache.probabilities = softmax_rows(logit_rows);
}

}  // namespace

Eigen::MatrixXd attention_forward(const Eigen::MatrixXd& x,
                                  const TagrnParams& params,
                                  const TagrnConfig& config) {
  AttentionCache cache;
  attention_forward_cached(x, params, config, cache);
  return cache.output;
}

Eigen::VectorXd gru_forward(const Eigen::MatrixXd& attended,
                            const TagrnParams& params,
                            const TagrnConfig& config) {
  if (!attended.allFinite())
    throw std::invalid_argument("non-finite GRU input");
  GruCache cache;
  gru_forward_cached(attended, params, config, cache);
  return cache.feature;
}

Eigen::MatrixXd classify(const Eigen::VectorXd& feature,
                         const TagrnParams& params, const TagrnConfig& config,
                         bool train_mode, uint64_t dropout_seed) {
  if (!feature.allFinite())
    throw std::invalid_argument("non-finite sequence feature");
  Eigen::VectorXd mask =
      train_mode
          ? dropout_mask(static_cast<int>(feature.size()), config.dropout_p,
                         dropout_seed)
          : Eigen::VectorXd::Ones(feature.size());
  Eigen::VectorXd logits = params.w_classifier.transpose() *
                               feature.cwiseProduct(mask) +
                           params.b_classifier;
  Eigen::MatrixXd rows(config.tasks_b, config.classes_r);
  for (int i = 0; i < config.tasks_b; ++i)
    rows.row(i) =
        logits.segment(i * config.classes_r, config.classes_r).transpose();
  return softmax_rows(rows);
}

Eigen::MatrixXd tagrn_forward(const Eigen::MatrixXd& x,
                              const TagrnParams& params,
                              const TagrnConfig& config, bool train_mode,
                              uint64_t dropout_seed) {
  ForwardCache cache;
  forward_cached(x, params, config, train_mode, dropout_seed, cache);
  return cache.probabilities;
}

namespace {

constexpr double kProbClamp = 1e-12;

double focal_term(double p, double gamma, double alpha) {
  double clamped = std::max(p, kProbClamp);
  return -alpha * std::pow(1.0 - p, gamma) * std::log(clamped);
}

double focal_term_dp(double p, double gamma, double alpha) {
  double clamped = std::max(p, kProbClamp);
  double modulator_grad =
      gamma > 0.0 ? gamma * std::pow(1.0 - p, gamma - 1.0) * std::log(clamped)
                  : 0.0;
  double log_grad = p > kProbClamp ? std::pow(1.0 - p, gamma) / p : 0.0;
  return alpha * (modulator_grad - log_grad);
}

}  // namespace

double focal_loss(const Eigen::MatrixXd& probabilities,
                  const std::vector<int>& true_class,
                  const FocalLossConfig& loss_config) {
  if (static_cast<Eigen::Index>(true_class.size()) != probabilities.rows())
    throw std::invalid_argument("true_class length != task count");
  if (loss_config.alpha.size() != 0 &&
      loss_config.alpha.size() != probabilities.cols())
    throw std::invalid_argument("alpha length != class count");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    int c = true_class[i];
    if (c < 0 || c >= probabilities.cols())
      throw std::invalid_argument("true class out of range");
    loss += focal_term(probabilities(i, c), loss_config.gamma,
                       loss_config.alpha_for(c));
  }
  return loss;
}

namespace {

void gru_direction_backward(const GruDirectionCache& cache,
                            const GruCellParams& cell, int hidden,
                            bool backward_dir,
                            const Eigen::MatrixXd& d_output_by_time,
                            const Eigen::VectorXd& d_final,
                            GruCellParams& grad, Eigen::MatrixXd& d_input) {
  const int t_len = static_cast<int>(cache.steps.size());
  Eigen::VectorXd dh = d_final;
  for (int step = t_len - 1; step >= 0; --step) {
    int t = backward_dir ? t_len - 1 - step : step;
    const GruStepCache& s = cache.steps[step];
    if (d_output_by_time.size() > 0)
      dh += d_output_by_time.row(t).transpose();

    Eigen::VectorXd dz = dh.cwiseProduct(s.candidate - s.h_prev);
    Eigen::VectorXd dcand = dh.cwiseProduct(s.z);
    Eigen::VectorXd dh_prev =
        dh.cwiseProduct(Eigen::VectorXd::Ones(hidden) - s.z);

    Eigen::VectorXd da_cand = dcand.cwiseProduct(
        (Eigen::VectorXd::Ones(hidden) - s.candidate.cwiseProduct(s.candidate)));
    Eigen::VectorXd uc(hidden + s.x.size());
    uc << s.r.cwiseProduct(s.h_prev), s.x;
    grad.w_candidate += da_cand * uc.transpose();
    grad.b_candidate += da_cand;
    Eigen::VectorXd d_uc = cell.w_candidate.transpose() * da_cand;
    Eigen::VectorXd d_rh = d_uc.head(hidden);
    Eigen::VectorXd dx = d_uc.tail(s.x.size());
    Eigen::VectorXd dr = d_rh.cwiseProduct(s.h_prev);
    dh_prev += d_rh.cwiseProduct(s.r);

    Eigen::VectorXd u(hidden + s.x.size());
    u << s.h_prev, s.x;
    Eigen::VectorXd da_z = dz.cwiseProduct(
        s.z.cwiseProduct(Eigen::VectorXd::Ones(hidden) - s.z));
    grad.w_update += da_z * u.transpose();
    grad.b_update += da_z;
    Eigen::VectorXd d_u = cell.w_update.transpose() * da_z;
    dh_prev += d_u.head(hidden);
    dx += d_u.tail(s.x.size());

    Eigen::VectorXd da_r = dr.cwiseProduct(
        s.r.cwiseProduct(Eigen::VectorXd::Ones(hidden) - s.r));
    grad.w_reset += da_r * u.transpose();
    grad.b_reset += da_r;
    Eigen::VectorXd d_u2 = cell.w_reset.transpose() * da_r;
    dh_prev += d_u2.head(hidden);
    dx += d_u2.tail(s.x.size());

    d_input.row(t) += dx.transpose();
    dh = dh_prev;
  }
}

}  // namespace

double tagrn_backward(const Eigen::MatrixXd& x,
                      const std::vector<int>& true_class,
                      const TagrnParams& params, const TagrnConfig& config,
                      const FocalLossConfig& loss_config, bool train_mode,
                      uint64_t dropout_seed, TagrnParams& gradients) {
  config.validate();
  ForwardCache cache;
  forward_cached(x, params, config, train_mode, dropout_seed, cache);
  double loss = focal_loss(cache.probabilities, true_class, loss_config);

  gradients = TagrnParams::zeros_like(config);
  const int b = config.tasks_b;
  const int r = config.classes_r;
  const int h = config.gru_hidden;
  const int t_len = static_cast<int>(x.rows());
  const int d = config.feature_dim;

  // Loss -> logits through per-task softmax.
  Eigen::VectorXd d_logits = Eigen::VectorXd::Zero(b * r);
  for (int i = 0; i < b; ++i) {
    int c = true_class[i];
    double p_true = cache.probabilities(i, c);
    double dp = focal_term_dp(p_true, loss_config.gamma,
                              loss_config.alpha_for(c));
    for (int j = 0; j < r; ++j) {
      double indicator = (j == c) ? 1.0 : 0.0;
      d_logits(i * r + j) =
          dp * p_true * (indicator - cache.probabilities(i, j));
    }
  }

  gradients.w_classifier = cache.dropped * d_logits.transpose();
  gradients.b_classifier = d_logits;
  Eigen::VectorXd d_dropped = params.w_classifier * d_logits;
  Eigen::VectorXd d_feature = d_dropped.cwiseProduct(cache.mask);

  // Through the GRU stack, top layer down.
  Eigen::MatrixXd d_layer_output;  // gradient w.r.t. a layer's T x 2H output
  for (int layer = config.gru_layers - 1; layer >= 0; --layer) {
    int in = gru_input_dim(config, layer);
    Eigen::MatrixXd d_input = Eigen::MatrixXd::Zero(t_len, in);
    Eigen::VectorXd d_final_fwd = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd d_final_bwd = Eigen::VectorXd::Zero(h);
    Eigen::MatrixXd d_out_fwd, d_out_bwd;
    if (layer == config.gru_layers - 1) {
      d_final_fwd = d_feature.head(h);
      d_final_bwd = d_feature.tail(h);
    } else {
      d_out_fwd = d_layer_output.leftCols(h);
      d_out_bwd = d_layer_output.rightCols(h);
    }
    gru_direction_backward(cache.gru.layers[layer][0], params.gru[layer][0], h,
                           false, d_out_fwd, d_final_fwd,
                           gradients.gru[layer][0], d_input);
    gru_direction_backward(cache.gru.layers[layer][1], params.gru[layer][1], h,
                           true, d_out_bwd, d_final_bwd,
                           gradients.gru[layer][1], d_input);
    d_layer_output = d_input;
  }
  Eigen::MatrixXd d_attended = d_layer_output;  // T x D

  // Attention backward.
  const AttentionCache& att = cache.attention;
  gradients.w_out = att.concat.transpose() * d_attended;
  if (config.attention_bias)
    gradients.b_out = d_attended.colwise().sum().transpose();
  Eigen::MatrixXd d_concat = d_attended * params.w_out.transpose();

  const int dh_dim = config.head_dim();
  const double scale = config.attention_scale();
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(t_len, d);
  Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(t_len, d);
  Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(t_len, d);
  for (int head = 0; head < config.heads; ++head) {
    auto qh = att.q.middleCols(head * dh_dim, dh_dim);
    auto kh = att.k.middleCols(head * dh_dim, dh_dim);
    auto vh = att.v.middleCols(head * dh_dim, dh_dim);
    const Eigen::MatrixXd& weights = att.head_softmax[head];
    Eigen::MatrixXd d_head = d_concat.middleCols(head * dh_dim, dh_dim);
    dv.middleCols(head * dh_dim, dh_dim) = weights.transpose() * d_head;
    Eigen::MatrixXd d_weights = d_head * vh.transpose();
    Eigen::MatrixXd d_scores(t_len, t_len);
    for (int i = 0; i < t_len; ++i) {
      Eigen::RowVectorXd w = weights.row(i);
      double dot = d_weights.row(i).dot(w);
      d_scores.row(i) =
          w.cwiseProduct(d_weights.row(i) - dot * Eigen::RowVectorXd::Ones(t_len));
    }
    dq.middleCols(head * dh_dim, dh_dim) = scale * (d_scores * kh);
    dk.middleCols(head * dh_dim, dh_dim) =
        scale * (d_scores.transpose() * qh);
  }
  gradients.w_query = x.transpose() * dq;
  gradients.w_key = x.transpose() * dk;
  gradients.w_value = x.transpose() * dv;
  if (config.attention_bias) {
    gradients.b_query = dq.colwise().sum().transpose();
    gradients.b_key = dk.colwise().sum().transpose();
    gradients.b_value = dv.colwise().sum().transpose();
  }
  return loss;
}

std::vector<int> ladder_classes(const BitrateLadder& ladder,
                                const EncodingRecipe& recipe) {
  std::vector<int> classes;
  classes.reserve(ladder.entries.size());
  for (const auto& [bitrate, res] : ladder.entries) {
    (void)bitrate;
    int idx = recipe.resolution_index(res);
    if (idx < 0)
      throw std::invalid_argument("ladder resolution outside recipe: " +
                                  res.name());
    classes.push_back(idx);
  }
  return classes;
}

std::pair<TagrnParams, TrainHistory> tagrn_train(
    const std::vector<TrainSample>& dataset, const TagrnConfig& config,
    const TrainConfig& traincfg, const FocalLossConfig& loss_config) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("empty training set");
  for (const auto& s : dataset) {
    if (s.features.values.rows() != config.t_frames ||
        s.features.values.cols() != config.feature_dim)
      throw std::invalid_argument("feature shape mismatch for sequence " +
                                  s.features.sequence_id);
    if (static_cast<int>(s.true_class.size()) != config.tasks_b)
      throw std::invalid_argument("label length mismatch for sequence " +
                                  s.features.sequence_id);
  }

  TagrnParams params = init_params(config, derive_seed(traincfg.seed, "init"));
  Eigen::VectorXd flat = params.flatten();
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(flat.size());
  TrainHistory history;

  const size_t n = dataset.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < traincfg.epochs; ++epoch) {
    double lr = traincfg.lr_initial *
                (1.0 + std::cos(M_PI * epoch / traincfg.epochs)) / 2.0;
    std::mt19937_64 shuffle_rng(
        derive_seed(traincfg.seed, "shuffle", static_cast<uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    long correct = 0, total = 0;
    for (size_t start = 0; start < n; start += traincfg.batch_size) {
      size_t end = std::min(n, start + traincfg.batch_size);
      Eigen::VectorXd batch_grad = Eigen::VectorXd::Zero(flat.size());
      for (size_t k = start; k < end; ++k) {
        const TrainSample& sample = dataset[order[k]];
        uint64_t dropout_seed = derive_seed(
            traincfg.seed, "dropout",
            static_cast<uint64_t>(epoch) * n + order[k]);
        TagrnParams grads;
        double loss =
            tagrn_backward(sample.features.values, sample.true_class, params,
                           config, loss_config, /*train_mode=*/true,
                           dropout_seed, grads);
        if (!std::isfinite(loss))
          throw std::runtime_error("training diverged at epoch " +
                                   std::to_string(epoch));
        epoch_loss += loss;
        batch_grad += grads.flatten();

        Eigen::MatrixXd p = tagrn_forward(sample.features.values, params,
                                          config, false, 0);
        for (int i = 0; i < config.tasks_b; ++i) {
          int argmax = 0;
          p.row(i).maxCoeff(&argmax);
          if (argmax == sample.true_class[i]) ++correct;
          ++total;
        }
      }
      batch_grad /= static_cast<double>(end - start);
      // L2 penalty gradient: 2 * lambda * w.
      batch_grad += 2.0 * traincfg.weight_decay * flat;
      velocity = traincfg.momentum * velocity + batch_grad;
      flat -= lr * velocity;
      params.unflatten(flat);
    }
    history.epochs.push_back(
        {epoch_loss / static_cast<double>(n),
         total ? static_cast<double>(correct) / total : 0.0, lr});
  }
  return {params, history};
}

BitrateLadder predict_ladder(const Eigen::MatrixXd& x,
                             const TagrnParams& params,
                             const TagrnConfig& config,
                             const EncodingRecipe& recipe,
                             const std::string& sequence_id) {
  if (recipe.bitrate_count() != config.tasks_b ||
      recipe.resolution_count() != config.classes_r)
    throw std::invalid_argument("recipe dimensions do not match model");
  Eigen::MatrixXd p = tagrn_forward(x, params, config, false, 0);
  BitrateLadder ladder;
  ladder.sequence_id = sequence_id;
  for (int i = 0; i < config.tasks_b; ++i) {
    int best = 0;
    for (int j = 1; j < config.classes_r; ++j) {
      // >= : later index = fewer pixels, so ties fall to lower resolution.
      if (p(i, j) >= p(i, best)) best = j;
    }
    ladder.entries.emplace_back(recipe.target_bitrates_kbps[i],
                                recipe.resolutions[best]);
  }
  return ladder;
}

Eigen::VectorXd inverse_frequency_alpha(
    const std::vector<std::vector<int>>& histogram) {
  if (histogram.empty()) throw std::invalid_argument("empty histogram");
  const int r = static_cast<int>(histogram[0].size());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(r);
  for (const auto& row : histogram)
    for (int j = 0; j < r; ++j) counts(j) += row[j];
  double total = counts.sum();
  Eigen::VectorXd alpha(r);
  for (int j = 0; j < r; ++j)
    alpha(j) = total / (r * std::max(counts(j), 1.0));
  alpha *= r / alpha.sum();
  return alpha;
}

}  // namespace ladder
