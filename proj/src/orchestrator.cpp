#include "ladder/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace ladder {

std::string make_job_id(const std::string& sequence_id, const Resolution& r,
                        int target_bitrate_kbps) {
  return sequence_id + "/" + r.name() + "/" + std::to_string(target_bitrate_kbps);
}

std::vector<BitrateBounds> probe_bounds(const std::string& sequence_ref,
                                        const std::string& sequence_id,
                                        const EncodingRecipe& recipe,
                                        CodecAdapter& codec) {
  std::vector<BitrateBounds> bounds;
  bounds.reserve(recipe.resolutions.size());
  for (const auto& r : recipe.resolutions) {
    try {
      // Single-pass CQP probes; two-pass only matters for rate control.
      EncodeOutcome hi = codec.encode_cqp(sequence_ref, r, 16);
      EncodeOutcome lo = codec.encode_cqp(sequence_ref, r, 48);
      if (!(lo.actual_bitrate_kbps > 0.0) ||
          lo.actual_bitrate_kbps > hi.actual_bitrate_kbps)
        throw CodecError("inverted CQP bounds");
      bounds.push_back({r, lo.actual_bitrate_kbps, hi.actual_bitrate_kbps});
    } catch (const std::exception& e) {
      throw CodecError("probe failed for " + sequence_id + " at " + r.name() +
                       ": " + e.what());
    }
  }
  return bounds;
}

std::vector<EncodeJob> plan_jobs(const std::vector<BitrateBounds>& bounds,
                                 const std::string& sequence_id,
                                 const EncodingRecipe& recipe) {
  std::map<int, const BitrateBounds*> by_index;
  for (const auto& b : bounds) {
    int idx = recipe.resolution_index(b.resolution);
    if (idx < 0)
      throw std::invalid_argument("bounds for resolution outside recipe: " +
                                  b.resolution.name());
    by_index[idx] = &b;
  }
  if (static_cast<int>(by_index.size()) != recipe.resolution_count())
    throw std::invalid_argument("bounds do not cover all recipe resolutions");

  std::vector<EncodeJob> jobs;
  std::vector<int> coverage(recipe.target_bitrates_kbps.size(), 0);
  for (const auto& [idx, b] : by_index) {
    const Resolution& r = recipe.resolutions[idx];
    for (size_t i = 0; i < recipe.target_bitrates_kbps.size(); ++i) {
      int target = recipe.target_bitrates_kbps[i];
      // Bounds are inclusive on both ends.
      if (target >= b->lower_kbps && target <= b->upper_kbps) {
        jobs.push_back({sequence_id, r, target, make_job_id(sequence_id, r, target)});
        ++coverage[i];
      }
    }
  }
  for (size_t i = 0; i < coverage.size(); ++i) {
    if (coverage[i] == 0)
      throw std::runtime_error(
          "incomplete coverage: no admissible resolution at " +
          std::to_string(recipe.target_bitrates_kbps[i]) + " Kbps");
  }
  return jobs;
}

std::vector<JournalEntry> read_journal(const std::string& path) {
  std::vector<JournalEntry> entries;
  std::ifstream in(path);
  if (!in) return entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    entries.push_back({j.at("job_id").get<std::string>(),
                       j.at("actual_bitrate_kbps").get<double>(),
                       j.at("quality").get<double>()});
  }
  return entries;
}

PlanResult execute_plan(
    const std::vector<EncodeJob>& jobs,
    const std::function<CodecAdapter&(const EncodeJob&)>& codec_for_job,
    const Resolution& source_resolution, int worker_limit,
    const std::string& journal_path) {
  if (worker_limit < 1)
    throw std::invalid_argument("worker_limit must be >= 1");

  std::map<std::string, JournalEntry> done;
  if (!journal_path.empty()) {
    for (const auto& e : read_journal(journal_path)) done[e.job_id] = e;
  }

  struct Slot {
    std::optional<RDPoint> point;
    std::optional<std::string> error;
  };
  std::vector<Slot> slots(jobs.size());

  std::atomic<size_t> next{0};
  std::mutex journal_mutex;
  std::ofstream journal;
  if (!journal_path.empty()) journal.open(journal_path, std::ios::app);

  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const EncodeJob& job = jobs[i];
      auto journaled = done.find(job.job_id);
      if (journaled != done.end()) {
        slots[i].point = RDPoint{job.resolution, job.target_bitrate_kbps,
                                 journaled->second.actual_bitrate_kbps,
                                 journaled->second.quality};
        continue;
      }
      try {
        CodecAdapter& codec = codec_for_job(job);
        EncodeOutcome enc = codec.encode_cbr(job.sequence_id, job.resolution,
                                             job.target_bitrate_kbps);
        double quality = codec.measure_quality(job.sequence_id, enc.asset_ref,
                                               source_resolution);
        RDPoint point{job.resolution, job.target_bitrate_kbps,
                      enc.actual_bitrate_kbps, quality};
        slots[i].point = point;
        if (journal.is_open()) {
          std::lock_guard<std::mutex> lock(journal_mutex);
          nlohmann::json rec = {{"job_id", job.job_id},
                                {"actual_bitrate_kbps", point.actual_bitrate_kbps},
                                {"quality", point.quality}};
          journal << rec.dump() << "\n";
          journal.flush();
        }
      } catch (const std::exception& e) {
        slots[i].error = e.what();
      }
    }
  };

  int threads = std::min<int>(worker_limit, static_cast<int>(jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  PlanResult result;
  for (size_t i = 0; i < jobs.size(); ++i) {
    if (slots[i].point) {
      result.points.emplace_back(jobs[i], *slots[i].point);
    } else {
      result.failures.push_back({jobs[i].job_id, slots[i].error.value_or("unknown")});
    }
  }
  return result;
}

PlanResult execute_plan(const std::vector<EncodeJob>& jobs, CodecAdapter& codec,
                        const Resolution& source_resolution, int worker_limit,
                        const std::string& journal_path) {
  return execute_plan(
      jobs, [&codec](const EncodeJob&) -> CodecAdapter& { return codec; },
      source_resolution, worker_limit, journal_path);
}

RDSurface assemble_surface(
    const std::string& sequence_id,
    const std::vector<std::pair<EncodeJob, RDPoint>>& results) {
  RDSurface surface;
  surface.sequence_id = sequence_id;
  for (const auto& [job, point] : results) {
    if (job.sequence_id != sequence_id)
      throw std::invalid_argument("result from foreign sequence " +
                                  job.sequence_id);
    auto& curve = surface.curves[point.resolution];
    curve.resolution = point.resolution;
    for (const auto& existing : curve.points) {
      if (existing.target_bitrate_kbps == point.target_bitrate_kbps)
        throw std::invalid_argument("duplicate point " + job.job_id);
    }
    curve.points.push_back(point);
  }
  for (auto& [res, curve] : surface.curves) {
    (void)res;
    std::sort(curve.points.begin(), curve.points.end(),
              [](const RDPoint& a, const RDPoint& b) {
                return a.target_bitrate_kbps < b.target_bitrate_kbps;
              });
  }
  return surface;
}

std::vector<SequenceInfo> manifest_from_json(const nlohmann::json& j) {
  std::vector<SequenceInfo> sequences;
  for (const auto& e : j) {
    sequences.push_back({e.at("sequence_id").get<std::string>(),
                         e.at("path").get<std::string>(),
                         e.at("width").get<int>(), e.at("height").get<int>(),
                         e.value("fps", 0.0)});
  }
  return sequences;
}

nlohmann::json manifest_to_json(const std::vector<SequenceInfo>& sequences) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : sequences) {
    j.push_back({{"sequence_id", s.sequence_id},
                 {"path", s.path},
                 {"width", s.width},
                 {"height", s.height},
                 {"fps", s.fps}});
  }
  return j;
}

}  // namespace ladder
