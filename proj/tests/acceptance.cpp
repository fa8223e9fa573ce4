// Acceptance suite: one PASS/FAIL line per criterion. Usage:
//   acceptance <path-to-ladder-cli>
// Exit code 0 iff every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ladder/bd_metrics.hpp"
#include "ladder/codec.hpp"
#include "ladder/evaluation.hpp"
#include "ladder/features.hpp"
#include "ladder/hull.hpp"
#include "ladder/mock_corpus.hpp"
#include "ladder/orchestrator.hpp"
#include "ladder/rng.hpp"
#include "ladder/tagrn.hpp"

namespace fs = std::filesystem;
using namespace ladder;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, double seconds,
            const std::string& detail = "") {
  std::cout << (ok ? "PASS " : "FAIL ") << name << " ("
            << std::fixed << std::setprecision(2) << seconds << " s)";
  if (!detail.empty()) std::cout << " -- " << detail;
  std::cout << "\n" << std::defaultfloat;
  if (!ok) ++g_failures;
}

void criterion(const std::string& name,
               const std::function<std::pair<bool, std::string>()>& body) {
  auto start = Clock::now();
  bool ok = false;
  std::string detail;
  try {
    auto [passed, msg] = body();
    ok = passed;
    detail = msg;
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  report(name, ok, seconds, detail);
}

// ---------- shared helpers ----------

RDSurface random_surface(const EncodingRecipe& recipe, std::mt19937_64& rng,
                         bool monotone) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    RDSurface surface;
    surface.sequence_id = "rand";
    for (const auto& r : recipe.resolutions) {
      RDCurve curve;
      curve.resolution = r;
      double q = 10.0 + 30.0 * unit(rng);
      for (int b : recipe.target_bitrates_kbps) {
        if (!monotone && unit(rng) < 0.35) continue;  // random exclusions
        q += monotone ? 2.0 + 5.0 * unit(rng) : 0.0;
        double quality = monotone ? std::min(q, 99.5) : 100.0 * unit(rng);
        curve.points.push_back({r, b, double(b), quality});
      }
      if (!curve.points.empty()) surface.curves[r] = curve;
    }
    if (surface.covers_all_bitrates(recipe)) return surface;
  }
}

RDCurve random_monotone_curve(std::mt19937_64& rng, int n = 6) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RDCurve curve;
  curve.resolution = {1920, 1080};
  double rate = 150.0 + 300.0 * unit(rng);
  double quality = 20.0 + 20.0 * unit(rng);
  for (int i = 0; i < n; ++i) {
    curve.points.push_back({{1920, 1080}, i, rate, quality});
    rate *= 1.4 + unit(rng);
    quality += 2.0 + 10.0 * unit(rng);
  }
  return curve;
}

double trapezoid_oracle(const RDCurve& test, const RDCurve& reference,
                        bool rate_mode, int samples = 100000) {
  auto fit = [&](const RDCurve& c) {
    std::vector<double> q, lr;
    for (const auto& p : c.points) {
      q.push_back(p.quality);
      lr.push_back(std::log(p.actual_bitrate_kbps));
    }
    return rate_mode ? Pchip(q, lr) : Pchip(lr, q);
  };
  Pchip ft = fit(test), fr = fit(reference);
  double lo = std::max(ft.x_min(), fr.x_min());
  double hi = std::min(ft.x_max(), fr.x_max());
  double sum = 0.0;
  double h = (hi - lo) / samples;
  for (int i = 0; i <= samples; ++i) {
    double x = lo + i * h;
    double v = ft(x) - fr(x);
    sum += (i == 0 || i == samples) ? v / 2.0 : v;
  }
  double avg = sum * h / (hi - lo);
  return rate_mode ? 100.0 * (std::exp(avg) - 1.0) : avg;
}

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

RDSurface encode_mock_surface(const MockContentParams& params,
                              const EncodingRecipe& recipe,
                              const std::string& id, int workers) {
  MockCodec codec(params);
  auto bounds = probe_bounds(id, id, recipe, codec);
  auto jobs = plan_jobs(bounds, id, recipe);
  auto result = execute_plan(jobs, codec, {1920, 1080}, workers);
  if (!result.failures.empty())
    throw std::runtime_error("mock encode failed for " + id);
  return assemble_surface(id, result.points);
}

int run_cli(const std::string& command) {
  int status = std::system(command.c_str());
  return status;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-ladder-cli>\n";
    return 2;
  }
  const std::string cli = argv[1];
  EncodingRecipe recipe = default_recipe();

  criterion("ladder-argmax-oracle-1000-surfaces", [&] {
    auto start = Clock::now();
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
      RDSurface surface = random_surface(recipe, rng, false);
      BitrateLadder ladder = build_ladder(surface, recipe);
      // Independent brute-force per-bitrate max scan.
      size_t entry = 0;
      for (int b : recipe.target_bitrates_kbps) {
        double best_q = -1.0;
        long long best_pixels = 0;
        const Resolution* best = nullptr;
        for (const auto& r : recipe.resolutions) {
          auto p = surface.lookup(r, b);
          if (!p) continue;
          if (!best || p->quality > best_q ||
              (p->quality == best_q && r.pixels() < best_pixels)) {
            best_q = p->quality;
            best_pixels = r.pixels();
            best = &r;
          }
        }
        if (!best || entry >= ladder.entries.size() ||
            ladder.entries[entry].first != b ||
            !(ladder.entries[entry].second == *best))
          return std::pair{false, "mismatch at bitrate " + std::to_string(b)};
        ++entry;
      }
      if (entry != ladder.entries.size())
        return std::pair{false, std::string("extra ladder entries")};
    }
    double s = std::chrono::duration<double>(Clock::now() - start).count();
    if (s >= 5.0) return std::pair{false, "too slow: " + std::to_string(s)};
    return std::pair{true, std::string()};
  });

  criterion("bd-self-zero-200-curves", [&] {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
      RDCurve c = random_monotone_curve(rng);
      if (std::abs(bd_rate(c, c)) > 1e-9 || std::abs(bd_quality(c, c)) > 1e-9)
        return std::pair{false, std::string("nonzero self comparison")};
    }
    return std::pair{true, std::string()};
  });

  criterion("bd-constant-offset-exactness", [&] {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      RDCurve ref = random_monotone_curve(rng);
      RDCurve scaled = ref;
      for (auto& p : scaled.points) p.actual_bitrate_kbps *= 1.10;
      if (std::abs(bd_rate(scaled, ref) - 10.0) > 1e-6)
        return std::pair{false, std::string("rate scale x1.10 not +10%")};
      RDCurve lowered = ref;
      for (auto& p : lowered.points) p.quality -= 2.0;
      if (std::abs(bd_quality(lowered, ref) + 2.0) > 1e-6)
        return std::pair{false, std::string("quality -2.0 not -2.0")};
    }
    return std::pair{true, std::string()};
  });

  criterion("bd-trapezoid-oracle-100-pairs", [&] {
    std::mt19937_64 rng(4);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      RDCurve a = random_monotone_curve(rng);
      RDCurve b = random_monotone_curve(rng);
      worst = std::max(worst,
                       std::abs(bd_rate(a, b) - trapezoid_oracle(a, b, true)));
      worst = std::max(
          worst, std::abs(bd_quality(a, b) - trapezoid_oracle(a, b, false)));
    }
    return std::pair{worst < 1e-6, "max deviation " + std::to_string(worst)};
  });

  criterion("hull-dominance-500-pairs", [&] {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = -1e300;
    for (int trial = 0; trial < 500; ++trial) {
      RDSurface surface = random_surface(recipe, rng, true);
      BitrateLadder gt = build_ladder(surface, recipe);
      RDCurve hull = hull_curve(surface, gt);
      BitrateLadder random_ladder;
      random_ladder.sequence_id = "rand";
      for (int b : recipe.target_bitrates_kbps) {
        int pick = int(unit(rng) * recipe.resolution_count());
        pick = std::min(pick, recipe.resolution_count() - 1);
        random_ladder.entries.emplace_back(b, recipe.resolutions[pick]);
      }
      double bdq = bd_quality(ladder_curve(random_ladder, surface), hull);
      worst = std::max(worst, bdq);
      if (bdq > 1e-9)
        return std::pair{false, "ladder beat hull by " + std::to_string(bdq)};
    }
    return std::pair{true, "max bd_quality " + std::to_string(worst)};
  });

  criterion("gradient-fidelity-100-draws", [&] {
    auto start = Clock::now();
    TagrnConfig config = tiny_config();
    std::mt19937_64 rng(6);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, config.classes_r - 1);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      TagrnParams params = init_params(config, 1000 + trial);
      Eigen::MatrixXd x(config.t_frames, config.feature_dim);
      for (int t = 0; t < config.t_frames; ++t)
        for (int d = 0; d < config.feature_dim; ++d) x(t, d) = gauss(rng);
      std::vector<int> labels(config.tasks_b);
      for (int& l : labels) l = pick(rng);

      TagrnParams grads;
      tagrn_backward(x, labels, params, config, {}, false, 0, grads);
      Eigen::VectorXd analytic = grads.flatten();
      Eigen::VectorXd flat = params.flatten();
      TagrnParams probe = TagrnParams::zeros_like(config);
      const double h = 1e-5;
      for (int i = 0; i < flat.size(); ++i) {
        Eigen::VectorXd bumped = flat;
        bumped(i) = flat(i) + h;
        probe.unflatten(bumped);
        double up = focal_loss(tagrn_forward(x, probe, config, false, 0),
                               labels, {});
        bumped(i) = flat(i) - h;
        probe.unflatten(bumped);
        double down = focal_loss(tagrn_forward(x, probe, config, false, 0),
                                 labels, {});
        double numeric = (up - down) / (2.0 * h);
        double err =
            std::abs(analytic(i) - numeric) /
            std::max(std::abs(analytic(i)) + std::abs(numeric), 1e-6);
        worst = std::max(worst, err);
        if (err >= 1e-4)
          return std::pair{false, "param " + std::to_string(i) + " rel err " +
                                      std::to_string(err)};
      }
    }
    double s = std::chrono::duration<double>(Clock::now() - start).count();
    if (s >= 60.0) return std::pair{false, "too slow: " + std::to_string(s)};
    return std::pair{true, "max rel err " + std::to_string(worst)};
  });

  criterion("focal-cross-entropy-identity-1000", [&] {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int b = 10, r = 7;
    FocalLossConfig ce;
    ce.gamma = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      Eigen::MatrixXd p(b, r);
      std::vector<int> truth(b);
      for (int i = 0; i < b; ++i) {
        double sum = 0.0;
        for (int j = 0; j < r; ++j) {
          p(i, j) = 1e-3 + unit(rng);
          sum += p(i, j);
        }
        p.row(i) /= sum;
        truth[i] = std::min(int(unit(rng) * r), r - 1);
      }
      double expected = 0.0;
      for (int i = 0; i < b; ++i) expected += -std::log(p(i, truth[i]));
      if (std::abs(focal_loss(p, truth, ce) - expected) > 1e-12)
        return std::pair{false, std::string("gamma=0 differs from CE")};
    }
    return std::pair{true, std::string()};
  });

  criterion("attention-row-stochastic-and-equivariant", [&] {
    TagrnConfig config = tiny_config();
    config.t_frames = 6;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Row-stochasticity: with V forced constant across frames, every output
    // row must reproduce that constant exactly iff each attention row sums
    // to 1.
    for (int trial = 0; trial < 100; ++trial) {
      TagrnParams params = init_params(config, 2000 + trial);
      params.w_value.setZero();
      for (int d = 0; d < config.feature_dim; ++d)
        params.b_value(d) = gauss(rng);
      params.w_out.setIdentity();
      params.b_out.setZero();
      Eigen::MatrixXd x(config.t_frames, config.feature_dim);
      for (int t = 0; t < config.t_frames; ++t)
        for (int d = 0; d < config.feature_dim; ++d) x(t, d) = gauss(rng);
      Eigen::MatrixXd out = attention_forward(x, params, config);
      for (int t = 0; t < config.t_frames; ++t)
        if ((out.row(t).transpose() - params.b_value).cwiseAbs().maxCoeff() >
            1e-12)
          return std::pair{false, std::string("attention row sum != 1")};
    }

    // Permutation equivariance on 100 random permutations.
    TagrnParams params = init_params(config, 9);
    Eigen::MatrixXd x(config.t_frames, config.feature_dim);
    for (int t = 0; t < config.t_frames; ++t)
      for (int d = 0; d < config.feature_dim; ++d) x(t, d) = gauss(rng);
    Eigen::MatrixXd base = attention_forward(x, params, config);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<int> perm(config.t_frames);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      Eigen::MatrixXd permuted(config.t_frames, config.feature_dim);
      for (int i = 0; i < config.t_frames; ++i)
        permuted.row(i) = x.row(perm[i]);
      Eigen::MatrixXd out = attention_forward(permuted, params, config);
      for (int i = 0; i < config.t_frames; ++i)
        if ((out.row(i) - base.row(perm[i])).cwiseAbs().maxCoeff() > 1e-12)
          return std::pair{false, std::string("permutation equivariance broken")};
    }
    return std::pair{true, std::string()};
  });

  criterion("two-step-exclusion-216p", [&] {
    MockContentParams params;
    params.complexity = 0.6;  // 216p QP-16 bitrate falls below 1000 Kbps
    MockCodec codec(params);
    auto bounds = probe_bounds("seq", "seq", recipe, codec);
    for (const auto& b : bounds)
      if (b.resolution == Resolution{384, 216} && b.upper_kbps >= 1000.0)
        return std::pair{false, std::string("216p upper bound not below 1000")};
    auto jobs = plan_jobs(bounds, "seq", recipe);
    bool has_216_low = false;
    for (const auto& job : jobs) {
      if (job.resolution == Resolution{384, 216}) {
        if (job.target_bitrate_kbps >= 1000)
          return std::pair{false, std::string("216p scheduled at >= 1000 Kbps")};
        has_216_low = true;
      }
    }
    if (!has_216_low)
      return std::pair{false, std::string("216p never scheduled at all")};
    return std::pair{true, std::string()};
  });

  criterion("pipeline-determinism-cli", [&] {
    fs::path root = fs::temp_directory_path() / "ladder-acceptance-determinism";
    fs::remove_all(root);
    auto pipeline = [&](const std::string& tag, int workers) {
      fs::path d = root / tag;
      fs::create_directories(d);
      std::string corpus = (d / "corpus").string();
      std::string log = " >> " + (d / "log.txt").string() + " 2>&1";
      std::vector<std::string> cmds = {
          cli + " --seed 7 --out " + corpus + " mock-gen --count 12" + log,
          cli + " --codec-config " + corpus + "/codec_config.json --out " +
              (d / "bounds.json").string() + " probe --manifest " + corpus +
              "/manifest.json" + log,
          cli + " --codec-config " + corpus + "/codec_config.json --workers " +
              std::to_string(workers) + " --out " + (d / "rd").string() +
              " encode --manifest " + corpus + "/manifest.json --bounds " +
              (d / "bounds.json").string() + log,
          cli + " --out " + (d / "ladders").string() + " label --rd-dir " +
              (d / "rd").string() + log,
          cli + " --seed 7 --out " + (d / "model.tagm").string() +
              " train --features-dir " + corpus + "/frames --labels-dir " +
              (d / "ladders").string() +
              " --epochs 10 --feature-dim 16 --heads 2 --gru-hidden 8" + log,
          cli + " --out " + (d / "pred").string() + " predict --model " +
              (d / "model.tagm").string() + " --features-dir " + corpus +
              "/frames" + log,
          cli + " --out " + (d / "report").string() + " eval --rd-dir " +
              (d / "rd").string() + " --gt-ladders " +
              (d / "ladders").string() + " --pred-ladders " +
              (d / "pred").string() + log};
      for (const auto& cmd : cmds)
        if (run_cli(cmd) != 0)
          throw std::runtime_error("pipeline step failed in " + tag +
                                   ", see " + (d / "log.txt").string());
      return slurp(d / "report.json") + "\x1e" + slurp(d / "report.csv") +
             "\x1e" + slurp(d / "model.tagm");
    };
    std::string run_a = pipeline("run-a-w1", 1);
    std::string run_b = pipeline("run-b-w1", 1);
    std::string run_c = pipeline("run-c-w8", 8);
    if (run_a != run_b)
      return std::pair{false, std::string("reports differ across repeat runs")};
    if (run_a != run_c)
      return std::pair{false,
                       std::string("reports differ across worker counts")};
    fs::remove_all(root);
    return std::pair{true, std::string()};
  });

  criterion("end-to-end-mock-study", [&] {
    auto start = Clock::now();
    const uint64_t seed = 2024;

    auto train_corpus = generate_mock_corpus(200, seed, 0.0, "train");
    auto test_corpus =
        generate_mock_corpus(50, derive_seed(seed, "held-out"), 0.0, "test");

    TagrnConfig config;
    config.t_frames = 10;
    config.feature_dim = 16;
    config.heads = 2;
    config.gru_layers = 2;
    config.gru_hidden = 16;
    config.dropout_p = 0.25;
    config.tasks_b = recipe.bitrate_count();
    config.classes_r = recipe.resolution_count();

    auto featurize = [&](const MockSequence& seq) {
      auto frames = mock_frame_stats(seq.params, 48);
      return handcrafted_features(seq.sequence_id, frames, config.t_frames,
                                  config.feature_dim);
    };

    // Ground truth for both splits from full mock encodes.
    std::map<std::string, RDSurface> test_surfaces;
    std::map<std::string, BitrateLadder> test_gt;
    std::vector<TrainSample> dataset;
    std::vector<FeatureSequence> train_features;
    std::vector<BitrateLadder> train_gt;
    for (const auto& seq : train_corpus) {
      RDSurface surface =
          encode_mock_surface(seq.params, recipe, seq.sequence_id, 8);
      train_gt.push_back(build_ladder(surface, recipe));
      train_features.push_back(featurize(seq));
    }
    FeatureNormalizer normalizer = FeatureNormalizer::fit(train_features);
    for (size_t i = 0; i < train_corpus.size(); ++i) {
      FeatureSequence f = train_features[i];
      normalizer.apply(f);
      dataset.push_back({f, ladder_classes(train_gt[i], recipe)});
    }

    TrainConfig traincfg;
    traincfg.epochs = 100;
    traincfg.seed = seed;
    auto [params, history] = tagrn_train(dataset, config, traincfg, {});

    // Majority-class baseline per task, from the training histogram.
    auto histogram = class_histogram(train_gt, recipe);
    std::vector<int> majority(recipe.bitrate_count(), 0);
    for (int i = 0; i < recipe.bitrate_count(); ++i)
      for (int j = 1; j < recipe.resolution_count(); ++j)
        if (histogram[i][j] > histogram[i][majority[i]]) majority[i] = j;

    long correct_pred = 0, correct_majority = 0, total = 0;
    std::map<std::string, BitrateLadder> predictions;
    std::vector<std::string> ids;
    for (const auto& seq : test_corpus) {
      RDSurface surface =
          encode_mock_surface(seq.params, recipe, seq.sequence_id, 8);
      BitrateLadder gt = build_ladder(surface, recipe);
      FeatureSequence f = featurize(seq);
      normalizer.apply(f);
      BitrateLadder pred =
          predict_ladder(f.values, params, config, recipe, seq.sequence_id);
      auto truth = ladder_classes(gt, recipe);
      auto got = ladder_classes(pred, recipe);
      for (int i = 0; i < recipe.bitrate_count(); ++i) {
        if (got[i] == truth[i]) ++correct_pred;
        if (majority[i] == truth[i]) ++correct_majority;
        ++total;
      }
      test_surfaces[seq.sequence_id] = surface;
      test_gt[seq.sequence_id] = gt;
      predictions[seq.sequence_id] = pred;
      ids.push_back(seq.sequence_id);
    }
    double acc_pred = double(correct_pred) / total;
    double acc_majority = double(correct_majority) / total;

    std::vector<std::pair<std::string, LadderProvider>> methods = {
        {"predicted",
         [&](const std::string& id) { return predictions.at(id); }},
        {"fixed", [&](const std::string& id) {
           BitrateLadder l = fixed_ladder(recipe, default_fixed_mapping());
           l.sequence_id = id;
           return l;
         }}};
    StudyReport study = run_study(ids, test_surfaces, test_gt, methods, recipe);
    for (const auto& row : study.rows)
      if (row.failed)
        return std::pair{false, "BD failed for " + row.sequence_id + " (" +
                                    row.method + "): " + row.error};
    double bdq_pred = study.mean_bd_quality.at("predicted");
    double bdq_fixed = study.mean_bd_quality.at("fixed");

    double s = std::chrono::duration<double>(Clock::now() - start).count();
    std::ostringstream detail;
    detail << "accuracy " << acc_pred << " vs majority " << acc_majority
           << "; mean BD-Quality " << bdq_pred << " vs fixed " << bdq_fixed;
    if (s >= 600.0) return std::pair{false, "too slow: " + std::to_string(s)};
    if (!(acc_pred > acc_majority))
      return std::pair{false, "predictor did not beat majority baseline: " +
                                  detail.str()};
    if (!(bdq_pred > bdq_fixed))
      return std::pair{false, "predictor did not beat fixed ladder: " +
                                  detail.str()};
    return std::pair{true, detail.str()};
  });

  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED"
                                : std::to_string(g_failures) +
                                      " CRITERIA FAILED")
            << "\n";
  return g_failures == 0 ? 0 : 1;
}
