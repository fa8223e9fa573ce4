#ifndef LADDER_CORE_HPP_
#define LADDER_CORE_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ladder {

// Frame size of one encoding variant. Identity is (width, height); display
// names like "1080p" are aliases only.
struct Resolution {
  int width = 0;
  int height = 0;

  long long pixels() const { return static_cast<long long>(width) * height; }
  std::string name() const;  // e.g. "1920x1080"

  friend bool operator==(const Resolution& a, const Resolution& b) {
    return a.width == b.width && a.height == b.height;
  }
  friend bool operator!=(const Resolution& a, const Resolution& b) {
    return !(a == b);
  }
};

// Orders by pixel count descending (index 0 = largest), ties by width.
struct ResolutionDescOrder {
  bool operator()(const Resolution& a, const Resolution& b) const {
    if (a.pixels() != b.pixels()) return a.pixels() > b.pixels();
    return a.width > b.width;
  }
};

struct EncodingRecipe {
  std::vector<Resolution> resolutions;     // descending by pixel count
  std::vector<int> target_bitrates_kbps;   // strictly ascending
  std::string codec_profile;

  int resolution_count() const { return static_cast<int>(resolutions.size()); }
  int bitrate_count() const {
    return static_cast<int>(target_bitrates_kbps.size());
  }
  // Index into `resolutions`, or -1 if absent.
  int resolution_index(const Resolution& r) const;
  int bitrate_index(int target_bitrate_kbps) const;
};

// The recipe used throughout the streaming range 216p..1080p with the
// multi-codec DASH bitrate set.
EncodingRecipe default_recipe();

// Returns the empty list when valid, otherwise one message per violation.
std::vector<std::string> validate_recipe(const EncodingRecipe& recipe);

struct RDPoint {
  Resolution resolution;
  int target_bitrate_kbps = 0;
  double actual_bitrate_kbps = 0.0;
  double quality = 0.0;  // in [0, 100]
};

struct RDCurve {
  Resolution resolution;
  std::vector<RDPoint> points;  // sorted by target bitrate ascending
};

struct RDSurface {
  std::string sequence_id;
  std::string quality_metric = "vmaf";
  std::map<Resolution, RDCurve, ResolutionDescOrder> curves;

  std::optional<RDPoint> lookup(const Resolution& r,
                                int target_bitrate_kbps) const;
  // True when every recipe bitrate has at least one curve covering it.
  bool covers_all_bitrates(const EncodingRecipe& recipe) const;
};

inline std::optional<RDPoint> surface_lookup(const RDSurface& surface,
                                             const Resolution& r,
                                             int target_bitrate_kbps) {
  return surface.lookup(r, target_bitrate_kbps);
}

struct BitrateLadder {
  std::string sequence_id;
  std::vector<std::pair<int, Resolution>> entries;  // bitrate ascending

  // B x R one-hot matrix in the recipe's orderings.
  std::vector<std::vector<int>> one_hot(const EncodingRecipe& recipe) const;
};

// Inverse of BitrateLadder::one_hot.
BitrateLadder ladder_from_one_hot(const std::string& sequence_id,
                                  const std::vector<std::vector<int>>& one_hot,
                                  const EncodingRecipe& recipe);

std::vector<std::string> validate_ladder(const BitrateLadder& ladder,
                                         const EncodingRecipe& recipe);

struct BDResult {
  double bd_rate_percent = 0.0;
  double bd_quality = 0.0;
  // Overlap of the integration interval; log10(rate) for bd_quality,
  // quality units for bd_rate.
  double overlap_low = 0.0;
  double overlap_high = 0.0;
};

// JSON serialization (RD dataset and ladder file schemas).
nlohmann::json resolution_to_json(const Resolution& r);
Resolution resolution_from_json(const nlohmann::json& j);
nlohmann::json recipe_to_json(const EncodingRecipe& recipe);
EncodingRecipe recipe_from_json(const nlohmann::json& j);
nlohmann::json surface_to_json(const RDSurface& surface,
                               const EncodingRecipe& recipe);
RDSurface surface_from_json(const nlohmann::json& j);
EncodingRecipe recipe_of_dataset(const nlohmann::json& j);
nlohmann::json ladder_to_json(const BitrateLadder& ladder);
BitrateLadder ladder_from_json(const nlohmann::json& j);

}  // namespace ladder

#endif  // LADDER_CORE_HPP_
