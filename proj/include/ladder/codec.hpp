#ifndef LADDER_CODEC_HPP_
#define LADDER_CODEC_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "ladder/core.hpp"

namespace ladder {

struct EncodeOutcome {
  double actual_bitrate_kbps = 0.0;
  std::string asset_ref;  // path for real encodes, token for the mock
};

class CodecError : public std::runtime_error {
 public:
  explicit CodecError(const std::string& what) : std::runtime_error(what) {}
};

// Uniform boundary to encoders and quality tools. Implementations must be
// stateless per call; concurrent invocation is bounded by the orchestrator.
class CodecAdapter {
 public:
  virtual ~CodecAdapter() = default;

  virtual EncodeOutcome encode_cqp(const std::string& sequence_ref,
                                   const Resolution& resolution, int qp) = 0;
  virtual EncodeOutcome encode_cbr(const std::string& sequence_ref,
                                   const Resolution& resolution,
                                   int target_bitrate_kbps) = 0;
  virtual double measure_quality(const std::string& reference_ref,
                                 const std::string& distorted_ref,
                                 const Resolution& upscale_to) = 0;
};

// Synthetic content knobs for the mock codec. `complexity` scales rate
// demand; `sharpness` is the quality penalty of downscaling.
struct MockContentParams {
  double complexity = 1.0;       // c > 0
  double sharpness = 20.0;       // s in [0, 100]
  double noise_scale = 0.0;      // >= 0
  uint64_t seed = 0;
};

void validate_mock_params(const MockContentParams& params);

// q(r,b) = Q_cap(r) * (1 - exp(-b / (c * a(r)))) + noise, clamped to [0,100],
// with Q_cap(r) = 100 - s*(1 - h/1080) and a(r) = kappa * w*h / 1e6.
double mock_quality(const MockContentParams& params, const Resolution& r,
                    double bitrate_kbps);

// b(r,qp) = beta * c * w*h/1e6 * 2^((36 - qp)/6).
double mock_cqp_bitrate(const MockContentParams& params, const Resolution& r,
                        int qp);

inline constexpr double kMockRateScaleKappa = 800.0;
inline constexpr double kMockCqpBeta = 1500.0;

// Deterministic in-process codec evaluating the closed forms above. CBR
// encodes return exactly the target bitrate (plus seeded noise when
// noise_scale > 0).
class MockCodec : public CodecAdapter {
 public:
  explicit MockCodec(const MockContentParams& params);

  EncodeOutcome encode_cqp(const std::string& sequence_ref,
                           const Resolution& resolution, int qp) override;
  EncodeOutcome encode_cbr(const std::string& sequence_ref,
                           const Resolution& resolution,
                           int target_bitrate_kbps) override;
  double measure_quality(const std::string& reference_ref,
                         const std::string& distorted_ref,
                         const Resolution& upscale_to) override;

 private:
  MockContentParams params_;
};

struct CodecAdapterConfig {
  // Placeholders: {input} {output} {width} {height} {bitrate_kbps} {qp} {pass}
  // {stats} {reference} {distorted} {log}
  std::string encode_cqp_command_template;
  std::string encode_cbr_command_template;
  std::string upscale_command_template;
  std::string quality_command_template;
  std::string probe_command_template;  // prints bitrate in Kbps on stdout
  std::string workdir;
  bool two_pass = true;
  std::string quality_json_key_path = "pooled_metrics.vmaf.mean";
  double deviation_warn_fraction = 0.10;
  double deviation_limit_fraction = 0.25;
};

CodecAdapterConfig codec_config_from_json(const nlohmann::json& j);

// Subprocess adapter. Each call runs inside a call-unique subdirectory of
// workdir; stderr is captured into a per-call log file.
class SubprocessCodec : public CodecAdapter {
 public:
  explicit SubprocessCodec(const CodecAdapterConfig& config);

  EncodeOutcome encode_cqp(const std::string& sequence_ref,
                           const Resolution& resolution, int qp) override;
  EncodeOutcome encode_cbr(const std::string& sequence_ref,
                           const Resolution& resolution,
                           int target_bitrate_kbps) override;
  double measure_quality(const std::string& reference_ref,
                         const std::string& distorted_ref,
                         const Resolution& upscale_to) override;

 private:
  std::string run_and_capture(const std::string& command,
                              const std::string& log_path);
  double probe_bitrate(const std::string& asset_path,
                       const std::string& job_dir);
  std::string new_job_dir(const std::string& tag);

  CodecAdapterConfig config_;
};

// Expands {name} placeholders; unknown placeholders are an error.
std::string expand_template(
    const std::string& templ,
    const std::map<std::string, std::string>& values);

}  // namespace ladder

#endif  // LADDER_CODEC_HPP_
