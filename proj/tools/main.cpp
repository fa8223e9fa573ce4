// Command-line entry point for the per-title bitrate ladder toolkit.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ladder/bd_metrics.hpp"
#include "ladder/codec.hpp"
#include "ladder/core.hpp"
#include "ladder/evaluation.hpp"
#include "ladder/features.hpp"
#include "ladder/hull.hpp"
#include "ladder/mock_corpus.hpp"
#include "ladder/orchestrator.hpp"
#include "ladder/rng.hpp"
#include "ladder/tagrn.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ladder;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitPartialFailure = 2;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
  }
}

void save_json(const std::string& path, const json& j) {
  fs::create_directories(fs::path(path).parent_path().empty()
                             ? "."
                             : fs::path(path).parent_path().string());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

void save_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

EncodingRecipe load_recipe(const std::string& path) {
  EncodingRecipe recipe =
      path.empty() ? default_recipe() : recipe_from_json(load_json(path));
  auto violations = validate_recipe(recipe);
  if (!violations.empty()) {
    std::string msg = "invalid recipe:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw std::runtime_error(msg);
  }
  return recipe;
}

// Codec config is either {"type":"mock","params_file":...} or
// {"type":"subprocess", ...template fields...}.
struct CodecFactory {
  std::string type;
  std::map<std::string, MockContentParams> mock_params;
  std::unique_ptr<SubprocessCodec> subprocess;

  std::unique_ptr<CodecAdapter> make_for(const std::string& sequence_id) {
    if (type == "mock") {
      auto it = mock_params.find(sequence_id);
      if (it == mock_params.end())
        throw std::runtime_error("no mock params for sequence " + sequence_id);
      return std::make_unique<MockCodec>(it->second);
    }
    throw std::runtime_error("per-sequence adapters only exist for mock");
  }
};

CodecFactory load_codec_factory(const std::string& config_path,
                                const std::string& workdir) {
  CodecFactory factory;
  json cfg = load_json(config_path);
  factory.type = cfg.value("type", "subprocess");
  if (factory.type == "mock") {
    std::string params_file = cfg.at("params_file").get<std::string>();
    for (const auto& seq : mock_params_from_json(load_json(params_file)))
      factory.mock_params[seq.sequence_id] = seq.params;
  } else if (factory.type == "subprocess") {
    CodecAdapterConfig adapter_cfg = codec_config_from_json(cfg);
    if (!workdir.empty()) adapter_cfg.workdir = workdir;
    factory.subprocess = std::make_unique<SubprocessCodec>(adapter_cfg);
  } else {
    throw std::runtime_error("unknown codec type '" + factory.type + "'");
  }
  return factory;
}

std::vector<FeatureSequence> load_feature_dir(const std::string& dir,
                                              int t_frames, int feature_dim) {
  std::vector<FeatureSequence> features;
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    auto p = entry.path();
    if (p.extension() == ".tagf" || (p.extension() == ".json" &&
                                     p.stem().extension() != ".tagf"))
      paths.push_back(p);
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    if (p.extension() == ".tagf") {
      features.push_back(read_feature_file(p.string()));
    } else {
      auto frames = frame_stats_from_json(load_json(p.string()));
      features.push_back(handcrafted_features(p.stem().string(), frames,
                                              t_frames, feature_dim));
    }
  }
  if (features.empty())
    throw std::runtime_error("no feature or frame-stat files in " + dir);
  return features;
}

std::map<std::string, BitrateLadder> load_ladder_dir(const std::string& dir) {
  std::map<std::string, BitrateLadder> ladders;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    BitrateLadder ladder = ladder_from_json(load_json(entry.path().string()));
    ladders[ladder.sequence_id] = ladder;
  }
  if (ladders.empty()) throw std::runtime_error("no ladder files in " + dir);
  return ladders;
}

std::map<std::string, RDSurface> load_surface_dir(const std::string& dir,
                                                  EncodingRecipe* recipe_out) {
  std::map<std::string, RDSurface> surfaces;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    json doc = load_json(entry.path().string());
    RDSurface surface = surface_from_json(doc);
    if (recipe_out && recipe_out->resolutions.empty())
      *recipe_out = recipe_of_dataset(doc);
    surfaces[surface.sequence_id] = surface;
  }
  if (surfaces.empty()) throw std::runtime_error("no RD datasets in " + dir);
  return surfaces;
}

int cmd_mock_gen(const std::string& out_dir, int count, uint64_t seed,
                 double noise_scale, int frame_count) {
  fs::create_directories(out_dir + "/frames");
  auto corpus = generate_mock_corpus(count, seed, noise_scale);
  std::vector<SequenceInfo> manifest;
  for (const auto& seq : corpus) {
    manifest.push_back(mock_sequence_info(seq));
    auto frames = mock_frame_stats(seq.params, frame_count);
    save_json(out_dir + "/frames/" + seq.sequence_id + ".json",
              frame_stats_to_json(frames));
  }
  save_json(out_dir + "/manifest.json", manifest_to_json(manifest));
  save_json(out_dir + "/mock_params.json", mock_params_to_json(corpus));
  save_json(out_dir + "/codec_config.json",
            {{"type", "mock"},
             {"params_file", out_dir + "/mock_params.json"}});
  std::cout << "wrote " << count << " mock sequences to " << out_dir << "\n";
  return kExitOk;
}

int cmd_probe(const std::string& manifest_path, const std::string& recipe_path,
              const std::string& codec_config, const std::string& workdir,
              const std::string& out_path) {
  EncodingRecipe recipe = load_recipe(recipe_path);
  auto manifest = manifest_from_json(load_json(manifest_path));
  CodecFactory factory = load_codec_factory(codec_config, workdir);
  json out = json::object();
  int failures = 0;
  for (const auto& seq : manifest) {
    try {
      std::unique_ptr<CodecAdapter> owned;
      CodecAdapter* codec = factory.subprocess.get();
      if (!codec) {
        owned = factory.make_for(seq.sequence_id);
        codec = owned.get();
      }
      auto bounds = probe_bounds(seq.path, seq.sequence_id, recipe, *codec);
      json list = json::array();
      for (const auto& b : bounds) {
        list.push_back({{"w", b.resolution.width},
                        {"h", b.resolution.height},
                        {"lower_kbps", b.lower_kbps},
                        {"upper_kbps", b.upper_kbps}});
      }
      out[seq.sequence_id] = list;
    } catch (const std::exception& e) {
      std::cerr << "probe failed: " << e.what() << "\n";
      ++failures;
    }
  }
  save_json(out_path, out);
  return failures ? kExitPartialFailure : kExitOk;
}

int cmd_encode(const std::string& manifest_path, const std::string& bounds_path,
               const std::string& recipe_path, const std::string& codec_config,
               const std::string& workdir, int workers,
               const std::string& out_dir) {
  EncodingRecipe recipe = load_recipe(recipe_path);
  auto manifest = manifest_from_json(load_json(manifest_path));
  CodecFactory factory = load_codec_factory(codec_config, workdir);
  json all_bounds = load_json(bounds_path);
  fs::create_directories(out_dir);
  if (!workdir.empty()) fs::create_directories(workdir);
  int failures = 0;
  for (const auto& seq : manifest) {
    try {
      if (!all_bounds.contains(seq.sequence_id))
        throw std::runtime_error("no bounds for " + seq.sequence_id);
      std::vector<BitrateBounds> bounds;
      for (const auto& b : all_bounds[seq.sequence_id]) {
        bounds.push_back({{b.at("w").get<int>(), b.at("h").get<int>()},
                          b.at("lower_kbps").get<double>(),
                          b.at("upper_kbps").get<double>()});
      }
      auto jobs = plan_jobs(bounds, seq.sequence_id, recipe);
      std::unique_ptr<CodecAdapter> owned;
      CodecAdapter* codec = factory.subprocess.get();
      if (!codec) {
        owned = factory.make_for(seq.sequence_id);
        codec = owned.get();
      }
      std::string journal =
          workdir.empty() ? ""
                          : workdir + "/" + seq.sequence_id + ".journal";
      PlanResult result = execute_plan(jobs, *codec,
                                       {seq.width, seq.height}, workers,
                                       journal);
      for (const auto& f : result.failures) {
        std::cerr << "job failed: " << f.job_id << ": " << f.message << "\n";
        ++failures;
      }
      RDSurface surface = assemble_surface(seq.sequence_id, result.points);
      save_json(out_dir + "/" + seq.sequence_id + ".json",
                surface_to_json(surface, recipe));
    } catch (const std::exception& e) {
      std::cerr << "encode failed for " << seq.sequence_id << ": " << e.what()
                << "\n";
      ++failures;
    }
  }
  return failures ? kExitPartialFailure : kExitOk;
}

int cmd_label(const std::string& rd_dir, const std::string& out_dir,
              const std::string& tie_break) {
  EncodingRecipe recipe;
  auto surfaces = load_surface_dir(rd_dir, &recipe);
  HullOptions options;
  options.tie_break = tie_break == "highest_resolution"
                          ? TieBreak::kHighestResolution
                          : TieBreak::kLowestResolution;
  fs::create_directories(out_dir);
  std::vector<BitrateLadder> ladders;
  for (const auto& [id, surface] : surfaces) {
    BitrateLadder ladder = build_ladder(surface, recipe, options);
    ladders.push_back(ladder);
    save_json(out_dir + "/" + id + ".json", ladder_to_json(ladder));
  }
  auto histogram = class_histogram(ladders, recipe);
  save_text(out_dir + "/histogram.csv", histogram_to_csv(histogram, recipe));
  std::cout << "labeled " << ladders.size() << " sequences\n";
  return kExitOk;
}

struct ModelShapeFlags {
  int t_frames = 10;
  int feature_dim = 32;
  int heads = 4;
  int gru_layers = 2;
  int gru_hidden = 32;
  double dropout_p = 0.25;
};

int cmd_train(const std::string& features_dir, const std::string& labels_dir,
              const std::string& recipe_path, const ModelShapeFlags& shape,
              int epochs, double lr, int batch_size, uint64_t seed,
              double gamma, const std::string& alpha_mode,
              const std::string& out_path) {
  EncodingRecipe recipe = load_recipe(recipe_path);
  TagrnConfig config;
  config.t_frames = shape.t_frames;
  config.feature_dim = shape.feature_dim;
  config.heads = shape.heads;
  config.gru_layers = shape.gru_layers;
  config.gru_hidden = shape.gru_hidden;
  config.dropout_p = shape.dropout_p;
  config.tasks_b = recipe.bitrate_count();
  config.classes_r = recipe.resolution_count();
  config.validate();

  auto features = load_feature_dir(features_dir, config.t_frames,
                                   config.feature_dim);
  auto normalizer = FeatureNormalizer::fit(features);
  auto ladders = load_ladder_dir(labels_dir);

  FocalLossConfig loss_config;
  loss_config.gamma = gamma;
  if (alpha_mode == "inverse_frequency") {
    std::vector<BitrateLadder> all;
    for (const auto& [id, l] : ladders) all.push_back(l);
    loss_config.alpha = inverse_frequency_alpha(class_histogram(all, recipe));
  } else if (alpha_mode != "uniform") {
    throw std::runtime_error("alpha mode must be uniform or inverse_frequency");
  }

  std::vector<TrainSample> dataset;
  for (auto& seq : features) {
    auto it = ladders.find(seq.sequence_id);
    if (it == ladders.end())
      throw std::runtime_error("no label ladder for " + seq.sequence_id);
    normalizer.apply(seq);
    dataset.push_back({seq, ladder_classes(it->second, recipe)});
  }

  TrainConfig traincfg;
  traincfg.epochs = epochs;
  traincfg.lr_initial = lr;
  traincfg.batch_size = batch_size;
  traincfg.seed = seed;
  auto [params, history] = tagrn_train(dataset, config, traincfg, loss_config);
  write_model_file(out_path, config, params, seed, &normalizer);

  json history_json = json::array();
  for (const auto& e : history.epochs) {
    history_json.push_back({{"mean_loss", e.mean_loss},
                            {"accuracy", e.accuracy},
                            {"learning_rate", e.learning_rate}});
  }
  save_json(out_path + ".history.json", history_json);
  std::cout << "trained on " << dataset.size() << " sequences, final loss "
            << history.epochs.back().mean_loss << ", train accuracy "
            << history.epochs.back().accuracy << "\n";
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& features_dir,
                const std::string& recipe_path, const std::string& out_dir) {
  EncodingRecipe recipe = load_recipe(recipe_path);
  LoadedModel model = read_model_file(model_path);
  auto features = load_feature_dir(features_dir, model.config.t_frames,
                                   model.config.feature_dim);
  fs::create_directories(out_dir);
  for (auto& seq : features) {
    if (model.has_normalizer) model.normalizer.apply(seq);
    BitrateLadder ladder = predict_ladder(seq.values, model.params,
                                          model.config, recipe,
                                          seq.sequence_id);
    save_json(out_dir + "/" + seq.sequence_id + ".json",
              ladder_to_json(ladder));
  }
  std::cout << "predicted " << features.size() << " ladders\n";
  return kExitOk;
}

int cmd_eval(const std::string& rd_dir, const std::string& gt_dir,
             const std::string& pred_dir, const std::string& fixed_mapping_path,
             const std::string& out_prefix) {
  EncodingRecipe recipe;
  auto surfaces = load_surface_dir(rd_dir, &recipe);
  auto gt_ladders = load_ladder_dir(gt_dir);
  auto pred_ladders = load_ladder_dir(pred_dir);
  json mapping = fixed_mapping_path.empty() ? default_fixed_mapping()
                                            : load_json(fixed_mapping_path);
  BitrateLadder fixed = fixed_ladder(recipe, mapping);

  std::vector<std::string> ids;
  for (const auto& [id, s] : surfaces) {
    (void)s;
    if (gt_ladders.count(id) && pred_ladders.count(id)) ids.push_back(id);
  }
  if (ids.empty())
    throw std::runtime_error("no sequences with surface + labels + predictions");

  std::vector<std::pair<std::string, LadderProvider>> methods = {
      {"predicted",
       [&](const std::string& id) { return pred_ladders.at(id); }},
      {"fixed",
       [&](const std::string& id) {
         BitrateLadder l = fixed;
         l.sequence_id = id;
         return l;
       }},
      {"ground_truth",
       [&](const std::string& id) { return gt_ladders.at(id); }}};
  StudyReport report = run_study(ids, surfaces, gt_ladders, methods, recipe);
  save_json(out_prefix + ".json", report.to_json());
  save_text(out_prefix + ".csv", report.to_csv());
  std::cout << report.to_json()["accuracy"].dump() << "\n";
  return kExitOk;
}

int cmd_bd(const std::string& dataset_path, const std::string& test_ladder_path,
           const std::string& ref_ladder_path, const std::string& interpolation,
           const std::string& out_path, const std::string& fit_csv_path) {
  json doc = load_json(dataset_path);
  RDSurface surface = surface_from_json(doc);
  EncodingRecipe recipe = recipe_of_dataset(doc);
  BitrateLadder test = ladder_from_json(load_json(test_ladder_path));
  BitrateLadder ref =
      ref_ladder_path.empty()
          ? build_ladder(surface, recipe)
          : ladder_from_json(load_json(ref_ladder_path));
  BDOptions options;
  if (interpolation == "cubic_polynomial")
    options.interpolation = BDInterpolation::kCubicPolynomial;
  RDCurve test_curve = ladder_curve(test, surface);
  RDCurve ref_curve = ladder_curve(ref, surface);
  BDResult result = bd_metrics(test_curve, ref_curve, options);
  json out = {{"bd_rate_percent", result.bd_rate_percent},
              {"bd_quality", result.bd_quality},
              {"overlap",
               {{"log10_rate_low", result.overlap_low},
                {"log10_rate_high", result.overlap_high}}}};
  if (out_path.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    save_json(out_path, out);
  }
  if (!fit_csv_path.empty())
    save_text(fit_csv_path, bd_fit_csv(test_curve, ref_curve, options));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-title bitrate ladder toolkit"};
  app.require_subcommand(1);

  std::string recipe_path, codec_config, workdir, out;
  int workers = 4;
  uint64_t seed = 0;
  app.add_option("--recipe", recipe_path, "Recipe JSON (default: built-in)");
  app.add_option("--codec-config", codec_config, "Codec adapter config JSON");
  app.add_option("--workdir", workdir, "Scratch directory for encode jobs");
  app.add_option("--workers", workers, "Concurrent encode jobs")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Root seed for all randomness");
  app.add_option("--out", out, "Output file or directory");

  auto* mock_gen = app.add_subcommand("mock-gen", "Generate a mock corpus");
  int mock_count = 20, mock_frames = 48;
  double mock_noise = 0.0;
  mock_gen->add_option("--count", mock_count, "Number of sequences");
  mock_gen->add_option("--frames", mock_frames, "Frames per sequence");
  mock_gen->add_option("--noise", mock_noise, "Mock quality noise scale");

  auto* probe = app.add_subcommand("probe", "CQP probes for bitrate bounds");
  std::string manifest_path;
  probe->add_option("--manifest", manifest_path, "Sequence manifest JSON")
      ->required();

  auto* encode = app.add_subcommand("encode", "CBR encodes into RD datasets");
  std::string bounds_path;
  encode->add_option("--manifest", manifest_path, "Sequence manifest JSON");
  encode->add_option("--bounds", bounds_path, "Bounds JSON from probe")
      ->required();

  auto* label = app.add_subcommand("label", "Ground-truth ladders from RD data");
  std::string rd_dir, tie_break = "lowest_resolution";
  label->add_option("--rd-dir", rd_dir, "Directory of RD dataset JSONs")
      ->required();
  label->add_option("--tie-break", tie_break,
                    "lowest_resolution|highest_resolution");

  auto* train = app.add_subcommand("train", "Train the resolution predictor");
  std::string features_dir, labels_dir;
  ModelShapeFlags shape;
  int epochs = 100, batch_size = 8;
  double lr = 0.01, gamma = 2.0;
  std::string alpha_mode = "uniform";
  train->add_option("--features-dir", features_dir,
                    "Feature (.tagf) or frame-stat (.json) directory")
      ->required();
  train->add_option("--labels-dir", labels_dir, "Ladder JSON directory")
      ->required();
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--lr", lr, "Initial learning rate");
  train->add_option("--batch-size", batch_size, "Minibatch size");
  train->add_option("--t-frames", shape.t_frames, "Frames per sequence");
  train->add_option("--feature-dim", shape.feature_dim, "Feature dimension");
  train->add_option("--heads", shape.heads, "Attention heads");
  train->add_option("--gru-layers", shape.gru_layers, "GRU layers");
  train->add_option("--gru-hidden", shape.gru_hidden, "GRU hidden units");
  train->add_option("--dropout", shape.dropout_p, "Dropout probability");
  train->add_option("--gamma", gamma, "Focal loss gamma");
  train->add_option("--alpha-mode", alpha_mode, "uniform|inverse_frequency");

  auto* predict = app.add_subcommand("predict", "Predict ladders with a model");
  std::string model_path;
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--features-dir", features_dir,
                      "Feature or frame-stat directory")
      ->required();

  auto* eval = app.add_subcommand("eval", "BD study vs hull and fixed ladder");
  std::string gt_dir, pred_dir, fixed_mapping_path;
  eval->add_option("--rd-dir", rd_dir, "RD dataset directory")->required();
  eval->add_option("--gt-ladders", gt_dir, "Ground-truth ladder directory")
      ->required();
  eval->add_option("--pred-ladders", pred_dir, "Predicted ladder directory")
      ->required();
  eval->add_option("--fixed-mapping", fixed_mapping_path,
                   "Fixed ladder mapping JSON (default: shipped DASH-style)");

  auto* bd = app.add_subcommand("bd", "Bjontegaard deltas between ladders");
  std::string dataset_path, test_ladder_path, ref_ladder_path, fit_csv_path;
  std::string interpolation = "piecewise_cubic_hermite";
  bd->add_option("--dataset", dataset_path, "RD dataset JSON")->required();
  bd->add_option("--test-ladder", test_ladder_path, "Test ladder JSON")
      ->required();
  bd->add_option("--ref-ladder", ref_ladder_path,
                 "Reference ladder JSON (default: ground-truth hull)");
  bd->add_option("--interpolation", interpolation,
                 "piecewise_cubic_hermite|cubic_polynomial");
  bd->add_option("--fit-csv", fit_csv_path, "Write sampled fitted curves here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*mock_gen)
      return cmd_mock_gen(out.empty() ? "mock-corpus" : out, mock_count, seed,
                          mock_noise, mock_frames);
    if (*probe)
      return cmd_probe(manifest_path, recipe_path, codec_config, workdir,
                       out.empty() ? "bounds.json" : out);
    if (*encode)
      return cmd_encode(manifest_path, bounds_path, recipe_path, codec_config,
                        workdir, workers, out.empty() ? "rd" : out);
    if (*label)
      return cmd_label(rd_dir, out.empty() ? "ladders" : out, tie_break);
    if (*train)
      return cmd_train(features_dir, labels_dir, recipe_path, shape, epochs,
                       lr, batch_size, seed, gamma, alpha_mode,
                       out.empty() ? "model.tagm" : out);
    if (*predict)
      return cmd_predict(model_path, features_dir, recipe_path,
                         out.empty() ? "predicted" : out);
    if (*eval)
      return cmd_eval(rd_dir, gt_dir, pred_dir, fixed_mapping_path,
                      out.empty() ? "report" : out);
    if (*bd)
      return cmd_bd(dataset_path, test_ladder_path, ref_ladder_path,
                    interpolation, out, fit_csv_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
