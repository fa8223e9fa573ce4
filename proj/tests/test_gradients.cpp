#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ladder/rng.hpp"
#include "ladder/tagrn.hpp"

using namespace ladder;

namespace {

TagrnConfig tiny_config() {
  TagrnConfig c;
  c.t_frames = 4;
  c.feature_dim = 8;
  c.heads = 2;
  c.gru_layers = 2;
  c.gru_hidden = 5;
  c.dropout_p = 0.0;
  c.tasks_b = 3;
  c.classes_r = 4;
  return c;
}

Eigen::MatrixXd random_input(int t, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x(t, d);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = gauss(rng);
  return x;
}

std::vector<int> random_labels(int b, int r, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, r - 1);
  std::vector<int> labels(b);
  for (int& l : labels) l = pick(rng);
  return labels;
}

// Central finite difference of the loss along every coordinate.
double max_relative_error(const Eigen::MatrixXd& x,
                          const std::vector<int>& labels,
                          const TagrnParams& params, const TagrnConfig& config,
                          const FocalLossConfig& focal, bool train_mode,
                          uint64_t dropout_seed) {
  TagrnParams grads;
  tagrn_backward(x, labels, params, config, focal, train_mode, dropout_seed,
                 grads);
  Eigen::VectorXd analytic = grads.flatten();
  Eigen::VectorXd flat = params.flatten();
  const double h = 1e-5;
  double worst = 0.0;
  TagrnParams probe = TagrnParams::zeros_like(config);
  for (int i = 0; i < flat.size(); ++i) {
    Eigen::VectorXd bumped = flat;
    bumped(i) = flat(i) + h;
    probe.unflatten(bumped);
    double up = focal_loss(
        tagrn_forward(x, probe, config, train_mode, dropout_seed), labels,
        focal);
    bumped(i) = flat(i) - h;
    probe.unflatten(bumped);
    double down = focal_loss(
        tagrn_forward(x, probe, config, train_mode, dropout_seed), labels,
        focal);
    double numeric = (up - down) / (2.0 * h);
    double err = std::abs(analytic(i) - numeric) /
                 std::max(std::abs(analytic(i)) + std::abs(numeric), 1e-6);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace

TEST_CASE("backward returns the same loss as forward") {
  TagrnConfig config = tiny_config();
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    TagrnParams params = init_params(config, 100 + trial);
    Eigen::MatrixXd x = random_input(config.t_frames, config.feature_dim, rng);
    auto labels = random_labels(config.tasks_b, config.classes_r, rng);
    TagrnParams grads;
    double loss = tagrn_backward(x, labels, params, config, {}, false, 0,
                                 grads);
    double forward =
        focal_loss(tagrn_forward(x, params, config, false, 0), labels, {});
    CHECK(loss == doctest::Approx(forward).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central differences") {
  TagrnConfig config = tiny_config();
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    TagrnParams params = init_params(config, 200 + trial);
    Eigen::MatrixXd x = random_input(config.t_frames, config.feature_dim, rng);
    auto labels = random_labels(config.tasks_b, config.classes_r, rng);
    CHECK(max_relative_error(x, labels, params, config, {}, false, 0) < 1e-4);
  }
}

TEST_CASE("gradient check holds with dropout active") {
  TagrnConfig config = tiny_config();
  config.dropout_p = 0.4;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    TagrnParams params = init_params(config, 300 + trial);
    Eigen::MatrixXd x = random_input(config.t_frames, config.feature_dim, rng);
    auto labels = random_labels(config.tasks_b, config.classes_r, rng);
    CHECK(max_relative_error(x, labels, params, config, {}, true,
                             uint64_t(trial)) < 1e-4);
  }
}

TEST_CASE("gradient check with gamma=0 and per-class alpha") {
  TagrnConfig config = tiny_config();
  std::mt19937_64 rng(4);
  FocalLossConfig ce;
  ce.gamma = 0.0;
  ce.alpha = Eigen::VectorXd::LinSpaced(config.classes_r, 0.5, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    TagrnParams params = init_params(config, 400 + trial);
    Eigen::MatrixXd x = random_input(config.t_frames, config.feature_dim, rng);
    auto labels = random_labels(config.tasks_b, config.classes_r, rng);
    // Slightly looser than the gamma=2 check: the flat CE loss surface has
    // tiny-magnitude coordinates where the finite-difference quotient loses
    // a digit to cancellation.
    CHECK(max_relative_error(x, labels, params, config, ce, false, 0) < 5e-4);
  }
}

TEST_CASE("saturated correct logits give a vanishing classifier gradient") {
  TagrnConfig config = tiny_config();
  std::mt19937_64 rng(5);
  Eigen::MatrixXd x = random_input(config.t_frames, config.feature_dim, rng);
  std::vector<int> labels = {1, 3, 0};
  TagrnParams params = TagrnParams::zeros_like(config);
  for (int i = 0; i < config.tasks_b; ++i)
    params.b_classifier(i * config.classes_r + labels[i]) = 60.0;

  Eigen::MatrixXd p = tagrn_forward(x, params, config, false, 0);
  for (int i = 0; i < config.tasks_b; ++i)
    CHECK(p(i, labels[i]) == doctest::Approx(1.0).epsilon(1e-15));

  TagrnParams grads;
  double loss = tagrn_backward(x, labels, params, config, {}, false, 0, grads);
  CHECK(loss < 1e-12);
  CHECK(grads.flatten().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("one SGD step without momentum matches the hand-written update") {
  TagrnConfig config = tiny_config();
  std::vector<TrainSample> dataset(1);
  dataset[0].features.sequence_id = "d";
  std::mt19937_64 rng(6);
  dataset[0].features.values =
      random_input(config.t_frames, config.feature_dim, rng);
  dataset[0].true_class = {0, 1, 2};

  TrainConfig traincfg;
  traincfg.epochs = 1;
  traincfg.momentum = 0.0;
  traincfg.weight_decay = 0.003;
  traincfg.batch_size = 1;
  traincfg.seed = 17;

  TagrnParams start = init_params(config, derive_seed(traincfg.seed, "init"));
  uint64_t dropout_seed = derive_seed(traincfg.seed, "dropout", 0);
  TagrnParams grads;
  tagrn_backward(dataset[0].features.values, dataset[0].true_class, start,
                 config, {}, true, dropout_seed, grads);
  Eigen::VectorXd expected =
      start.flatten() -
      traincfg.lr_initial * (grads.flatten() +
                             2.0 * traincfg.weight_decay * start.flatten());

  auto [params, history] = tagrn_train(dataset, config, traincfg, {});
  CHECK(history.epochs.size() == 1);
  CHECK((params.flatten() - expected).cwiseAbs().maxCoeff() < 1e-12);
}
