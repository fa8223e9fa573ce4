#ifndef LADDER_ORCHESTRATOR_HPP_
#define LADDER_ORCHESTRATOR_HPP_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ladder/codec.hpp"
#include "ladder/core.hpp"

namespace ladder {

struct BitrateBounds {
  Resolution resolution;
  double lower_kbps = 0.0;  // from QP=48
  double upper_kbps = 0.0;  // from QP=16
};

struct EncodeJob {
  std::string sequence_id;
  Resolution resolution;
  int target_bitrate_kbps = 0;
  std::string job_id;  // "<sequence_id>/<WxH>/<bitrate>"
};

std::string make_job_id(const std::string& sequence_id, const Resolution& r,
                        int target_bitrate_kbps);

struct JobFailure {
  std::string job_id;
  std::string message;
};

struct PlanResult {
  std::vector<std::pair<EncodeJob, RDPoint>> points;  // in plan order
  std::vector<JobFailure> failures;
};

// One CQP probe pair (QP=48 lower, QP=16 upper) per recipe resolution.
// Codec errors are rethrown tagged with the failing resolution.
std::vector<BitrateBounds> probe_bounds(const std::string& sequence_ref,
                                        const std::string& sequence_id,
                                        const EncodingRecipe& recipe,
                                        CodecAdapter& codec);

// A job for (r, b) iff lower(r) <= b <= upper(r), ordered by
// (resolution index, bitrate). Throws when some target bitrate ends up with
// zero admissible resolutions.
std::vector<EncodeJob> plan_jobs(const std::vector<BitrateBounds>& bounds,
                                 const std::string& sequence_id,
                                 const EncodingRecipe& recipe);

// Journal of completed jobs for idempotent resume (JSON-lines, single
// writer). Empty path disables journaling.
struct JournalEntry {
  std::string job_id;
  double actual_bitrate_kbps = 0.0;
  double quality = 0.0;
};

std::vector<JournalEntry> read_journal(const std::string& path);

// Runs encode -> upscale -> quality for every job on a bounded worker pool.
// `source_resolution` is the reference frame size quality is measured at.
// Jobs present in the journal are skipped and their journaled points reused.
PlanResult execute_plan(const std::vector<EncodeJob>& jobs,
                        const std::function<CodecAdapter&(const EncodeJob&)>& codec_for_job,
                        const Resolution& source_resolution,
                        int worker_limit,
                        const std::string& journal_path = "");

// Convenience overload for a single shared adapter.
PlanResult execute_plan(const std::vector<EncodeJob>& jobs,
                        CodecAdapter& codec,
                        const Resolution& source_resolution,
                        int worker_limit,
                        const std::string& journal_path = "");

// Groups results into per-resolution curves sorted by bitrate. Throws on
// duplicate (resolution, bitrate) points.
RDSurface assemble_surface(
    const std::string& sequence_id,
    const std::vector<std::pair<EncodeJob, RDPoint>>& results);

// Sequence manifest: JSON list of {sequence_id, path, width, height, fps}.
struct SequenceInfo {
  std::string sequence_id;
  std::string path;
  int width = 0;
  int height = 0;
  double fps = 0.0;
};

std::vector<SequenceInfo> manifest_from_json(const nlohmann::json& j);
nlohmann::json manifest_to_json(const std::vector<SequenceInfo>& sequences);

}  // namespace ladder

#endif  // LADDER_ORCHESTRATOR_HPP_
