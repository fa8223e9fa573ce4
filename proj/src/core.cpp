#include "ladder/core.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

namespace ladder {

std::string Resolution::name() const {
  return std::to_string(width) + "x" + std::to_string(height);
}

int EncodingRecipe::resolution_index(const Resolution& r) const {
  for (size_t i = 0; i < resolutions.size(); ++i) {
    if (resolutions[i] == r) return static_cast<int>(i);
  }
  return -1;
}

int EncodingRecipe::bitrate_index(int target_bitrate_kbps) const {
  for (size_t i = 0; i < target_bitrates_kbps.size(); ++i) {
    if (target_bitrates_kbps[i] == target_bitrate_kbps)
      return static_cast<int>(i);
  }
  return -1;
}

EncodingRecipe default_recipe() {
  EncodingRecipe recipe;
  recipe.resolutions = {{1920, 1080}, {1280, 720}, {960, 540}, {768, 432},
                        {640, 360},   {480, 270},  {384, 216}};
  recipe.target_bitrates_kbps = {240,  375,  550,  750,  1000,
                                 1500, 2300, 3000, 4300, 5800};
  recipe.codec_profile = "x265-two-pass";
  return recipe;
}

std::vector<std::string> validate_recipe(const EncodingRecipe& recipe) {
  std::vector<std::string> violations;
  if (recipe.resolutions.size() < 2)
    violations.push_back("R >= 2 required (got " +
                         std::to_string(recipe.resolutions.size()) + ")");
  if (recipe.target_bitrates_kbps.size() < 2)
    violations.push_back("B >= 2 required (got " +
                         std::to_string(recipe.target_bitrates_kbps.size()) +
                         ")");
  for (const auto& r : recipe.resolutions) {
    if (r.width < 16 || r.height < 16)
      violations.push_back("resolution below 16x16: " + r.name());
  }
  std::set<long long> pixel_counts;
  for (const auto& r : recipe.resolutions) {
    if (!pixel_counts.insert(r.pixels()).second)
      violations.push_back("duplicate resolution (pixel count): " + r.name());
  }
  for (size_t i = 1; i < recipe.resolutions.size(); ++i) {
    if (recipe.resolutions[i].pixels() >= recipe.resolutions[i - 1].pixels()) {
      violations.push_back("resolutions not descending by pixel count at index " +
                           std::to_string(i));
      break;
    }
  }
  for (size_t i = 0; i < recipe.target_bitrates_kbps.size(); ++i) {
    if (recipe.target_bitrates_kbps[i] <= 0) {
      violations.push_back("non-positive bitrate at index " + std::to_string(i));
    }
    if (i > 0 && recipe.target_bitrates_kbps[i] ==
                     recipe.target_bitrates_kbps[i - 1]) {
      violations.push_back("duplicate bitrate " +
                           std::to_string(recipe.target_bitrates_kbps[i]));
    } else if (i > 0 && recipe.target_bitrates_kbps[i] <
                            recipe.target_bitrates_kbps[i - 1]) {
      violations.push_back("bitrates not ascending at index " +
                           std::to_string(i));
    }
  }
  return violations;
}

std::optional<RDPoint> RDSurface::lookup(const Resolution& r,
                                         int target_bitrate_kbps) const {
  auto it = curves.find(r);
  if (it == curves.end()) return std::nullopt;
  for (const auto& p : it->second.points) {
    if (p.target_bitrate_kbps == target_bitrate_kbps) return p;
  }
  return std::nullopt;
}

bool RDSurface::covers_all_bitrates(const EncodingRecipe& recipe) const {
  for (int b : recipe.target_bitrates_kbps) {
    bool covered = false;
    for (const auto& [res, curve] : curves) {
      (void)res;
      for (const auto& p : curve.points) {
        if (p.target_bitrate_kbps == b) {
          covered = true;
          break;
        }
      }
      if (covered) break;
    }
    if (!covered) return false;
  }
  return true;
}

std::vector<std::vector<int>> BitrateLadder::one_hot(
    const EncodingRecipe& recipe) const {
  const int num_bitrates = recipe.bitrate_count();
  const int num_resolutions = recipe.resolution_count();
  std::vector<std::vector<int>> matrix(num_bitrates,
                                       std::vector<int>(num_resolutions, 0));
  for (const auto& [bitrate, res] : entries) {
    int row = recipe.bitrate_index(bitrate);
    int col = recipe.resolution_index(res);
    if (row < 0 || col < 0)
      throw std::invalid_argument("ladder entry outside recipe: " +
                                  std::to_string(bitrate) + " " + res.name());
    matrix[row][col] = 1;
  }
  return matrix;
}

BitrateLadder ladder_from_one_hot(const std::string& sequence_id,
                                  const std::vector<std::vector<int>>& one_hot,
                                  const EncodingRecipe& recipe) {
  if (static_cast<int>(one_hot.size()) != recipe.bitrate_count())
    throw std::invalid_argument("one_hot row count != B");
  BitrateLadder ladder;
  ladder.sequence_id = sequence_id;
  for (size_t i = 0; i < one_hot.size(); ++i) {
    const auto& row = one_hot[i];
    if (static_cast<int>(row.size()) != recipe.resolution_count())
      throw std::invalid_argument("one_hot column count != R");
    int hot = -1;
    for (size_t j = 0; j < row.size(); ++j) {
      if (row[j] == 1) {
        if (hot >= 0) throw std::invalid_argument("one_hot row sum > 1");
        hot = static_cast<int>(j);
      } else if (row[j] != 0) {
        throw std::invalid_argument("one_hot entries must be 0/1");
      }
    }
    if (hot < 0) throw std::invalid_argument("one_hot row sum < 1");
    ladder.entries.emplace_back(recipe.target_bitrates_kbps[i],
                                recipe.resolutions[hot]);
  }
  return ladder;
}

std::vector<std::string> validate_ladder(const BitrateLadder& ladder,
                                         const EncodingRecipe& recipe) {
  std::vector<std::string> violations;
  if (static_cast<int>(ladder.entries.size()) != recipe.bitrate_count()) {
    violations.push_back("entry count != B");
    return violations;
  }
  for (size_t i = 0; i < ladder.entries.size(); ++i) {
    const auto& [bitrate, res] = ladder.entries[i];
    if (bitrate != recipe.target_bitrates_kbps[i])
      violations.push_back("entry " + std::to_string(i) +
                           " bitrate mismatch with recipe");
    if (recipe.resolution_index(res) < 0)
      violations.push_back("entry resolution not in recipe: " + res.name());
  }
  return violations;
}

nlohmann::json resolution_to_json(const Resolution& r) {
  return {{"w", r.width}, {"h", r.height}};
}

Resolution resolution_from_json(const nlohmann::json& j) {
  return {j.at("w").get<int>(), j.at("h").get<int>()};
}

nlohmann::json recipe_to_json(const EncodingRecipe& recipe) {
  nlohmann::json resolutions = nlohmann::json::array();
  for (const auto& r : recipe.resolutions)
    resolutions.push_back(resolution_to_json(r));
  return {{"resolutions", resolutions},
          {"target_bitrates_kbps", recipe.target_bitrates_kbps},
          {"codec_profile", recipe.codec_profile}};
}

EncodingRecipe recipe_from_json(const nlohmann::json& j) {
  EncodingRecipe recipe;
  for (const auto& r : j.at("resolutions"))
    recipe.resolutions.push_back(resolution_from_json(r));
  recipe.target_bitrates_kbps =
      j.at("target_bitrates_kbps").get<std::vector<int>>();
  recipe.codec_profile = j.value("codec_profile", "");
  return recipe;
}

nlohmann::json surface_to_json(const RDSurface& surface,
                               const EncodingRecipe& recipe) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& [res, curve] : surface.curves) {
    (void)res;
    for (const auto& p : curve.points) {
      points.push_back({{"w", p.resolution.width},
                        {"h", p.resolution.height},
                        {"target_bitrate_kbps", p.target_bitrate_kbps},
                        {"actual_bitrate_kbps", p.actual_bitrate_kbps},
                        {"quality", p.quality}});
    }
  }
  return {{"sequence_id", surface.sequence_id},
          {"quality_metric", surface.quality_metric},
          {"recipe", recipe_to_json(recipe)},
          {"points", points}};
}

RDSurface surface_from_json(const nlohmann::json& j) {
  RDSurface surface;
  surface.sequence_id = j.at("sequence_id").get<std::string>();
  surface.quality_metric = j.value("quality_metric", "vmaf");
  for (const auto& pj : j.at("points")) {
    RDPoint p;
    p.resolution = {pj.at("w").get<int>(), pj.at("h").get<int>()};
    p.target_bitrate_kbps = pj.at("target_bitrate_kbps").get<int>();
    p.actual_bitrate_kbps = pj.at("actual_bitrate_kbps").get<double>();
    p.quality = pj.at("quality").get<double>();
    auto& curve = surface.curves[p.resolution];
    curve.resolution = p.resolution;
    curve.points.push_back(p);
  }
  for (auto& [res, curve] : surface.curves) {
    (void)res;
    std::sort(curve.points.begin(), curve.points.end(),
              [](const RDPoint& a, const RDPoint& b) {
                return a.target_bitrate_kbps < b.target_bitrate_kbps;
              });
    for (size_t i = 1; i < curve.points.size(); ++i) {
      if (curve.points[i].target_bitrate_kbps ==
          curve.points[i - 1].target_bitrate_kbps)
        throw std::invalid_argument("duplicate (resolution, bitrate) point");
    }
  }
  return surface;
}

EncodingRecipe recipe_of_dataset(const nlohmann::json& j) {
  return recipe_from_json(j.at("recipe"));
}

nlohmann::json ladder_to_json(const BitrateLadder& ladder) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [bitrate, res] : ladder.entries) {
    entries.push_back(
        {{"bitrate_kbps", bitrate}, {"width", res.width}, {"height", res.height}});
  }
  return {{"sequence_id", ladder.sequence_id}, {"entries", entries}};
}

BitrateLadder ladder_from_json(const nlohmann::json& j) {
  BitrateLadder ladder;
  ladder.sequence_id = j.at("sequence_id").get<std::string>();
  for (const auto& e : j.at("entries")) {
    ladder.entries.emplace_back(
        e.at("bitrate_kbps").get<int>(),
        Resolution{e.at("width").get<int>(), e.at("height").get<int>()});
  }
  return ladder;
}

}  // namespace ladder
