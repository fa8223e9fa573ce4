#ifndef LADDER_HULL_HPP_
#define LADDER_HULL_HPP_

#include <vector>

#include "ladder/core.hpp"

namespace ladder {

enum class TieBreak { kLowestResolution, kHighestResolution };

struct HullOptions {
  TieBreak tie_break = TieBreak::kLowestResolution;
  bool require_full_coverage = true;
};

// Ground-truth ladder: per target bitrate, the resolution whose stored
// quality is maximal among resolutions with a point there. Qualities are
// compared exactly; ties fall to the option's side.
BitrateLadder build_ladder(const RDSurface& surface,
                           const EncodingRecipe& recipe,
                           const HullOptions& options = {});

// Quality-vs-bitrate envelope obtained by following the ladder across the
// preset bitrates. The curve's `resolution` field is meaningless and left at
// the first entry's value.
RDCurve hull_curve(const RDSurface& surface, const BitrateLadder& ladder);

// Per-bitrate counts of chosen resolutions across a corpus of ladders,
// B x R in the recipe's orderings.
std::vector<std::vector<int>> class_histogram(
    const std::vector<BitrateLadder>& ladders, const EncodingRecipe& recipe);

std::string histogram_to_csv(const std::vector<std::vector<int>>& histogram,
                             const EncodingRecipe& recipe);

}  // namespace ladder

#endif  // LADDER_HULL_HPP_
