#include "ladder/hull.hpp"

#include <sstream>

namespace ladder {

BitrateLadder build_ladder(const RDSurface& surface,
                           const EncodingRecipe& recipe,
                           const HullOptions& options) {
  if (surface.curves.empty()) throw std::invalid_argument("empty surface");
  BitrateLadder ladder;
  ladder.sequence_id = surface.sequence_id;
  for (int target : recipe.target_bitrates_kbps) {
    // Candidates scanned in recipe order (largest resolution first) so tie
    // handling is independent of map iteration order.
    int best_idx = -1;
    double best_quality = 0.0;
    for (int idx = 0; idx < recipe.resolution_count(); ++idx) {
      auto point = surface.lookup(recipe.resolutions[idx], target);
      if (!point) continue;
      bool wins;
      if (best_idx < 0) {
        wins = true;
      } else if (point->quality != best_quality) {
        wins = point->quality > best_quality;
      } else {
        // Exact tie: higher index = fewer pixels.
        wins = options.tie_break == TieBreak::kLowestResolution;
      }
      if (wins) {
        best_idx = idx;
        best_quality = point->quality;
      }
    }
    if (best_idx < 0) {
      if (options.require_full_coverage)
        throw std::runtime_error("uncovered bitrate " + std::to_string(target) +
                                 " Kbps in surface " + surface.sequence_id);
      continue;
    }
    ladder.entries.emplace_back(target, recipe.resolutions[best_idx]);
  }
  return ladder;
}

RDCurve hull_curve(const RDSurface& surface, const BitrateLadder& ladder) {
  RDCurve curve;
  for (const auto& [bitrate, res] : ladder.entries) {
    auto point = surface.lookup(res, bitrate);
    if (!point)
      throw std::runtime_error("ladder entry has no surface point: " +
                               res.name() + " @ " + std::to_string(bitrate));
    if (curve.points.empty()) curve.resolution = res;
    curve.points.push_back(*point);
  }
  return curve;
}

std::vector<std::vector<int>> class_histogram(
    const std::vector<BitrateLadder>& ladders, const EncodingRecipe& recipe) {
  std::vector<std::vector<int>> counts(
      recipe.bitrate_count(), std::vector<int>(recipe.resolution_count(), 0));
  for (const auto& ladder : ladders) {
    for (const auto& [bitrate, res] : ladder.entries) {
      int row = recipe.bitrate_index(bitrate);
      int col = recipe.resolution_index(res);
      if (row < 0 || col < 0)
        throw std::invalid_argument("ladder " + ladder.sequence_id +
                                    " does not match recipe");
      ++counts[row][col];
    }
  }
  return counts;
}

std::string histogram_to_csv(const std::vector<std::vector<int>>& histogram,
                             const EncodingRecipe& recipe) {
  std::ostringstream out;
  out << "bitrate_kbps";
  for (int j = 0; j < recipe.resolution_count(); ++j) out << ",res_" << j;
  out << "\n";
  for (size_t i = 0; i < histogram.size(); ++i) {
    out << recipe.target_bitrates_kbps[i];
    for (int c : histogram[i]) out << "," << c;
    out << "\n";
  }
  return out.str();
}

}  // namespace ladder
