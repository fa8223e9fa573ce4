#ifndef LADDER_FEATURES_HPP_
#define LADDER_FEATURES_HPP_

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ladder/tagrn.hpp"

namespace ladder {

// Per-frame statistics; the handcrafted stand-in for an upstream CNN
// feature extractor.
struct FrameStats {
  double mean_luma = 0.0;
  double luma_variance = 0.0;
  double gradient_energy = 0.0;
  double temporal_diff_energy = 0.0;
};

inline constexpr int kRawStatCount = 4;
// Raw stats plus their log1p companions per frame.
inline constexpr int kHandcraftedDims = 2 * kRawStatCount;

nlohmann::json frame_stats_to_json(const std::vector<FrameStats>& frames);
std::vector<FrameStats> frame_stats_from_json(const nlohmann::json& j);

// Uniformly samples t_frames frames, expands each into the handcrafted
// feature vector and zero-pads to feature_dim. Values are raw; apply a
// FeatureNormalizer fitted on the training corpus before feeding the model.
FeatureSequence handcrafted_features(const std::string& sequence_id,
                                     const std::vector<FrameStats>& frames,
                                     int t_frames, int feature_dim);

// Per-dimension z-scoring statistics across all frames of a corpus.
struct FeatureNormalizer {
  Eigen::VectorXd mean, stddev;

  static FeatureNormalizer fit(const std::vector<FeatureSequence>& corpus);
  void apply(FeatureSequence& sequence) const;

  nlohmann::json to_json() const;
  static FeatureNormalizer from_json(const nlohmann::json& j);
};

// Binary feature file: magic "TAGF", version u16, T u32, D u32, T*D
// little-endian f32 row-major. sequence_id lives in a ".json" sidecar.
void write_feature_file(const std::string& path, const FeatureSequence& seq);
FeatureSequence read_feature_file(const std::string& path);

// Model file: magic "TAGM", u32 header length, JSON header (format version,
// config, seed, optional normalizer), then weights as f64 LE in the
// parameters' declared order. Round-trips exactly.
void write_model_file(const std::string& path, const TagrnConfig& config,
                      const TagrnParams& params, uint64_t seed,
                      const FeatureNormalizer* normalizer = nullptr);

struct LoadedModel {
  TagrnConfig config;
  TagrnParams params;
  uint64_t seed = 0;
  bool has_normalizer = false;
  FeatureNormalizer normalizer;
};

LoadedModel read_model_file(const std::string& path);

}  // namespace ladder

#endif  // LADDER_FEATURES_HPP_
