#ifndef LADDER_EVALUATION_HPP_
#define LADDER_EVALUATION_HPP_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ladder/bd_metrics.hpp"
#include "ladder/core.hpp"

namespace ladder {

// Per-task true x predicted counts, B x R x R.
struct ConfusionTensor {
  std::vector<std::vector<std::vector<long>>> counts;

  static ConfusionTensor build(const std::vector<BitrateLadder>& predicted,
                               const std::vector<BitrateLadder>& ground_truth,
                               const EncodingRecipe& recipe);
  int tasks() const { return static_cast<int>(counts.size()); }
  int classes() const {
    return counts.empty() ? 0 : static_cast<int>(counts[0].size());
  }
};

// Fraction of (sequence, bitrate) cells with matching resolution.
double accuracy(const std::vector<BitrateLadder>& predicted,
                const std::vector<BitrateLadder>& ground_truth,
                const EncodingRecipe& recipe);

// Macro-averaged F1 over classes with support, averaged uniformly across
// tasks.
double f_score(const ConfusionTensor& confusion);

// Geometric mean of per-class recall over classes with support, averaged
// across tasks.
double g_mean(const ConfusionTensor& confusion);

// Content-agnostic bitrate -> resolution mapping loaded from config.
BitrateLadder fixed_ladder(const EncodingRecipe& recipe,
                           const nlohmann::json& mapping_config);

// The shipped default mapping for the default recipe: descending bitrates
// mapped monotonically onto descending resolutions. A convention, not a
// published ladder.
nlohmann::json default_fixed_mapping();

struct StudyRow {
  std::string sequence_id;
  std::string method;
  bool failed = false;
  std::string error;
  double bd_rate_percent = 0.0;
  double bd_quality = 0.0;
};

struct StudyReport {
  std::vector<StudyRow> rows;  // ordered by (sequence_id, method)
  // method -> mean over successful rows
  std::map<std::string, double> mean_bd_rate;
  std::map<std::string, double> mean_bd_quality;
  // method -> classification metrics vs ground truth
  std::map<std::string, double> accuracy_by_method;
  std::map<std::string, double> f_score_by_method;
  std::map<std::string, double> g_mean_by_method;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

using LadderProvider = std::function<BitrateLadder(const std::string& sequence_id)>;

// BD-Rate / BD-Quality of each method's ladder curve against the
// ground-truth hull, per sequence. BD failures are recorded, not fatal.
StudyReport run_study(
    const std::vector<std::string>& sequence_ids,
    const std::map<std::string, RDSurface>& surfaces,
    const std::map<std::string, BitrateLadder>& gt_ladders,
    const std::vector<std::pair<std::string, LadderProvider>>& methods,
    const EncodingRecipe& recipe, const BDOptions& bd_options = {});

// Per-sequence (bitrate, quality) samples of every method's curve, for
// external plotting.
std::string plot_data_csv(const RDSurface& surface,
                          const std::vector<std::pair<std::string, BitrateLadder>>& ladders);

}  // namespace ladder

#endif  // LADDER_EVALUATION_HPP_
