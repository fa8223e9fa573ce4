#ifndef LADDER_MOCK_CORPUS_HPP_
#define LADDER_MOCK_CORPUS_HPP_

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ladder/codec.hpp"
#include "ladder/features.hpp"
#include "ladder/orchestrator.hpp"

namespace ladder {

struct MockSequence {
  std::string sequence_id;
  MockContentParams params;
};

// Seeded draw of synthetic content: complexity log-uniform in [0.3, 3],
// sharpness uniform in [0, 100].
std::vector<MockSequence> generate_mock_corpus(int count, uint64_t seed,
                                               double noise_scale = 0.0,
                                               const std::string& id_prefix = "mock");

// Deterministic per-frame statistics consistent with the mock codec's
// content knobs: gradient energy tracks sharpness, temporal difference
// energy tracks complexity.
std::vector<FrameStats> mock_frame_stats(const MockContentParams& params,
                                         int frame_count);

nlohmann::json mock_params_to_json(const std::vector<MockSequence>& corpus);
std::vector<MockSequence> mock_params_from_json(const nlohmann::json& j);

inline SequenceInfo mock_sequence_info(const MockSequence& seq) {
  return {seq.sequence_id, "mock://" + seq.sequence_id, 1920, 1080, 24.0};
}

}  // namespace ladder

#endif  // LADDER_MOCK_CORPUS_HPP_
