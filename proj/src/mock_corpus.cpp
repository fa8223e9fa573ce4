#include "ladder/mock_corpus.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "ladder/rng.hpp"

namespace ladder {

std::vector<MockSequence> generate_mock_corpus(int count, uint64_t seed,
                                               double noise_scale,
                                               const std::string& id_prefix) {
  if (count < 1) throw std::invalid_argument("corpus count must be >= 1");
  std::vector<MockSequence> corpus;
  corpus.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(derive_seed(seed, "mock-corpus", i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    MockSequence seq;
    char id[32];
    std::snprintf(id, sizeof(id), "%s-%04d", id_prefix.c_str(), i);
    seq.sequence_id = id;
    seq.params.complexity = 0.3 * std::pow(10.0, unit(rng));  // [0.3, 3)
    seq.params.sharpness = 100.0 * unit(rng);
    seq.params.noise_scale = noise_scale;
    seq.params.seed = derive_seed(seed, "mock-content", i);
    corpus.push_back(seq);
  }
  return corpus;
}

std::vector<FrameStats> mock_frame_stats(const MockContentParams& params,
                                         int frame_count) {
  validate_mock_params(params);
  if (frame_count < 1) throw std::invalid_argument("frame_count must be >= 1");
  std::mt19937_64 rng(derive_seed(params.seed, "frame-stats"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double phase = 2.0 * M_PI * unit(rng);
  std::vector<FrameStats> frames;
  frames.reserve(frame_count);
  for (int t = 0; t < frame_count; ++t) {
    double wave = std::sin(0.37 * t + phase);
    FrameStats f;
    f.mean_luma = 110.0 + 25.0 * wave + 2.0 * gauss(rng);
    f.luma_variance =
        400.0 + 12.0 * params.sharpness + 40.0 * wave + 8.0 * gauss(rng);
    f.gradient_energy =
        50.0 * params.sharpness * (1.0 + 0.1 * wave) + 20.0 * gauss(rng);
    f.temporal_diff_energy =
        600.0 * params.complexity * (1.0 + 0.15 * wave) + 15.0 * gauss(rng);
    frames.push_back(f);
  }
  return frames;
}

nlohmann::json mock_params_to_json(const std::vector<MockSequence>& corpus) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : corpus) {
    j.push_back({{"sequence_id", s.sequence_id},
                 {"complexity", s.params.complexity},
                 {"sharpness", s.params.sharpness},
                 {"noise_scale", s.params.noise_scale},
                 {"seed", s.params.seed}});
  }
  return j;
}

std::vector<MockSequence> mock_params_from_json(const nlohmann::json& j) {
  std::vector<MockSequence> corpus;
  for (const auto& e : j) {
    MockSequence s;
    s.sequence_id = e.at("sequence_id").get<std::string>();
    s.params.complexity = e.at("complexity").get<double>();
    s.params.sharpness = e.at("sharpness").get<double>();
    s.params.noise_scale = e.at("noise_scale").get<double>();
    s.params.seed = e.at("seed").get<uint64_t>();
    corpus.push_back(s);
  }
  return corpus;
}

}  // namespace ladder
