#include "ladder/codec.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ladder/rng.hpp"

namespace fs = std::filesystem;

namespace ladder {

void validate_mock_params(const MockContentParams& params) {
  if (!(params.complexity > 0.0))
    throw std::invalid_argument("mock complexity must be > 0");
  if (params.sharpness < 0.0 || params.sharpness > 100.0)
    throw std::invalid_argument("mock sharpness must be in [0, 100]");
  if (params.noise_scale < 0.0)
    throw std::invalid_argument("mock noise_scale must be >= 0");
}

namespace {

double mock_noise(const MockContentParams& params, const Resolution& r,
                  double x) {
  if (params.noise_scale <= 0.0) return 0.0;
  uint64_t seed = derive_seed(
      params.seed, "mock-noise/" + r.name(),
      static_cast<uint64_t>(std::llround(x * 1000.0)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  return params.noise_scale * gauss(rng);
}

}  // namespace

double mock_quality(const MockContentParams& params, const Resolution& r,
                    double bitrate_kbps) {
  validate_mock_params(params);
  const double q_cap = 100.0 - params.sharpness * (1.0 - r.height / 1080.0);
  const double rate_scale =
      kMockRateScaleKappa * static_cast<double>(r.pixels()) / 1e6;
  double q = q_cap * (1.0 - std::exp(-bitrate_kbps /
                                     (params.complexity * rate_scale)));
  q += mock_noise(params, r, bitrate_kbps);
  return std::clamp(q, 0.0, 100.0);
}

double mock_cqp_bitrate(const MockContentParams& params, const Resolution& r,
                        int qp) {
  validate_mock_params(params);
  if (qp < 0 || qp > 51) throw std::invalid_argument("qp must be in [0, 51]");
  return kMockCqpBeta * params.complexity *
         static_cast<double>(r.pixels()) / 1e6 *
         std::exp2((36.0 - qp) / 6.0);
}

MockCodec::MockCodec(const MockContentParams& params) : params_(params) {
  validate_mock_params(params);
}

EncodeOutcome MockCodec::encode_cqp(const std::string& sequence_ref,
                                    const Resolution& resolution, int qp) {
  EncodeOutcome out;
  out.actual_bitrate_kbps = mock_cqp_bitrate(params_, resolution, qp);
  out.asset_ref = "mock:" + sequence_ref + ":" + resolution.name() + ":qp" +
                  std::to_string(qp);
  return out;
}

EncodeOutcome MockCodec::encode_cbr(const std::string& sequence_ref,
                                    const Resolution& resolution,
                                    int target_bitrate_kbps) {
  if (target_bitrate_kbps <= 0)
    throw std::invalid_argument("target bitrate must be positive");
  EncodeOutcome out;
  out.actual_bitrate_kbps = static_cast<double>(target_bitrate_kbps);
  if (params_.noise_scale > 0.0) {
    // Small seeded rate-control wobble so deviation logging is exercisable.
    double wobble = mock_noise(params_, resolution,
                               target_bitrate_kbps + 0.5) /
                    100.0;
    out.actual_bitrate_kbps *= std::max(0.5, 1.0 + wobble);
  }
  out.asset_ref = "mock:" + sequence_ref + ":" + resolution.name() + ":cbr" +
                  std::to_string(target_bitrate_kbps);
  return out;
}

double MockCodec::measure_quality(const std::string& reference_ref,
                                  const std::string& distorted_ref,
                                  const Resolution& upscale_to) {
  (void)reference_ref;
  (void)upscale_to;
  // distorted_ref encodes (resolution, bitrate) of the mock CBR encode.
  auto last_colon = distorted_ref.rfind(":cbr");
  auto res_start = distorted_ref.rfind(':', last_colon - 1);
  if (last_colon == std::string::npos || res_start == std::string::npos)
    throw CodecError("mock asset ref not a CBR encode: " + distorted_ref);
  std::string res_str =
      distorted_ref.substr(res_start + 1, last_colon - res_start - 1);
  auto x_pos = res_str.find('x');
  Resolution r{std::stoi(res_str.substr(0, x_pos)),
               std::stoi(res_str.substr(x_pos + 1))};
  double bitrate = std::stod(distorted_ref.substr(last_colon + 4));
  return mock_quality(params_, r, bitrate);
}

std::string expand_template(const std::string& templ,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  size_t pos = 0;
  while (pos < templ.size()) {
    auto open = templ.find('{', pos);
    if (open == std::string::npos) {
      out += templ.substr(pos);
      break;
    }
    auto close = templ.find('}', open);
    if (close == std::string::npos)
      throw std::invalid_argument("unbalanced '{' in command template");
    out += templ.substr(pos, open - pos);
    std::string key = templ.substr(open + 1, close - open - 1);
    auto it = values.find(key);
    if (it == values.end())
      throw std::invalid_argument("unknown template placeholder {" + key + "}");
    out += it->second;
    pos = close + 1;
  }
  return out;
}

CodecAdapterConfig codec_config_from_json(const nlohmann::json& j) {
  CodecAdapterConfig cfg;
  cfg.encode_cqp_command_template = j.value("encode_cqp_command_template", "");
  cfg.encode_cbr_command_template = j.value("encode_cbr_command_template", "");
  cfg.upscale_command_template = j.value("upscale_command_template", "");
  cfg.quality_command_template = j.value("quality_command_template", "");
  cfg.probe_command_template = j.value("probe_command_template", "");
  cfg.workdir = j.value("workdir", ".");
  cfg.two_pass = j.value("two_pass", true);
  cfg.quality_json_key_path =
      j.value("quality_json_key_path", std::string("pooled_metrics.vmaf.mean"));
  cfg.deviation_warn_fraction = j.value("deviation_warn_fraction", 0.10);
  cfg.deviation_limit_fraction = j.value("deviation_limit_fraction", 0.25);
  return cfg;
}

SubprocessCodec::SubprocessCodec(const CodecAdapterConfig& config)
    : config_(config) {
  fs::create_directories(config_.workdir);
}

std::string SubprocessCodec::new_job_dir(const std::string& tag) {
  static std::atomic<uint64_t> counter{0};
  std::string dir = config_.workdir + "/" + tag + "-" +
                    std::to_string(counter.fetch_add(1));
  fs::create_directories(dir);
  return dir;
}

std::string SubprocessCodec::run_and_capture(const std::string& command,
                                             const std::string& log_path) {
  std::string full = command + " 2>>" + log_path;
  std::string output;
  FILE* pipe = popen(full.c_str(), "r");
  if (!pipe) throw CodecError("failed to spawn: " + command);
  std::array<char, 4096> buf;
  while (size_t n = fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), n);
  int status = pclose(pipe);
  if (status != 0) {
    std::string log;
    std::ifstream lf(log_path);
    std::stringstream ss;
    ss << lf.rdbuf();
    log = ss.str();
    throw CodecError("command failed (exit " + std::to_string(status) +
                     "): " + command + "\ncaptured stderr:\n" + log);
  }
  return output;
}

double SubprocessCodec::probe_bitrate(const std::string& asset_path,
                                      const std::string& job_dir) {
  if (config_.probe_command_template.empty())
    throw CodecError("no probe_command_template configured");
  std::string cmd = expand_template(config_.probe_command_template,
                                    {{"input", asset_path}});
  std::string out = run_and_capture(cmd, job_dir + "/probe.log");
  try {
    return std::stod(out);
  } catch (const std::exception&) {
    throw CodecError("unparsable bitrate from probe output: '" + out + "'");
  }
}

EncodeOutcome SubprocessCodec::encode_cqp(const std::string& sequence_ref,
                                          const Resolution& resolution,
                                          int qp) {
  if (qp < 0 || qp > 51) throw std::invalid_argument("qp must be in [0, 51]");
  std::string dir = new_job_dir("cqp");
  std::string output = dir + "/out.bin";
  std::string cmd = expand_template(
      config_.encode_cqp_command_template,
      {{"input", sequence_ref},
       {"output", output},
       {"width", std::to_string(resolution.width)},
       {"height", std::to_string(resolution.height)},
       {"qp", std::to_string(qp)},
       {"stats", dir + "/stats"},
       {"pass", "1"}});
  run_and_capture(cmd, dir + "/encode.log");
  if (!fs::exists(output))
    throw CodecError("encoder produced no output asset: " + output);
  EncodeOutcome out;
  out.asset_ref = output;
  out.actual_bitrate_kbps = probe_bitrate(output, dir);
  if (!(out.actual_bitrate_kbps > 0.0))
    throw CodecError("probed non-positive bitrate for " + output);
  return out;
}

EncodeOutcome SubprocessCodec::encode_cbr(const std::string& sequence_ref,
                                          const Resolution& resolution,
                                          int target_bitrate_kbps) {
  if (target_bitrate_kbps <= 0)
    throw std::invalid_argument("target bitrate must be positive");
  std::string dir = new_job_dir("cbr");
  std::string output = dir + "/out.bin";
  const int passes = config_.two_pass ? 2 : 1;
  for (int pass = 1; pass <= passes; ++pass) {
    std::string cmd = expand_template(
        config_.encode_cbr_command_template,
        {{"input", sequence_ref},
         {"output", output},
         {"width", std::to_string(resolution.width)},
         {"height", std::to_string(resolution.height)},
         {"bitrate_kbps", std::to_string(target_bitrate_kbps)},
         {"stats", dir + "/stats"},
         {"pass", std::to_string(pass)}});
    run_and_capture(cmd, dir + "/encode-pass" + std::to_string(pass) + ".log");
  }
  if (!fs::exists(output))
    throw CodecError("encoder produced no output asset: " + output);
  EncodeOutcome out;
  out.asset_ref = output;
  out.actual_bitrate_kbps = probe_bitrate(output, dir);
  double deviation =
      std::abs(out.actual_bitrate_kbps - target_bitrate_kbps) /
      target_bitrate_kbps;
  if (deviation > config_.deviation_limit_fraction)
    throw CodecError("rate control failed: actual " +
                     std::to_string(out.actual_bitrate_kbps) + " vs target " +
                     std::to_string(target_bitrate_kbps));
  if (deviation > config_.deviation_warn_fraction) {
    std::ofstream log(dir + "/encode.log", std::ios::app);
    log << "warning: bitrate deviation " << deviation * 100.0 << "% at "
        << resolution.name() << " " << target_bitrate_kbps << " Kbps\n";
  }
  return out;
}

double SubprocessCodec::measure_quality(const std::string& reference_ref,
                                        const std::string& distorted_ref,
                                        const Resolution& upscale_to) {
  std::string dir = new_job_dir("quality");
  std::string upscaled = distorted_ref;
  if (!config_.upscale_command_template.empty()) {
    upscaled = dir + "/upscaled.bin";
    std::string cmd = expand_template(
        config_.upscale_command_template,
        {{"input", distorted_ref},
         {"output", upscaled},
         {"width", std::to_string(upscale_to.width)},
         {"height", std::to_string(upscale_to.height)}});
    run_and_capture(cmd, dir + "/upscale.log");
  }
  std::string result_path = dir + "/quality.json";
  std::string cmd = expand_template(config_.quality_command_template,
                                    {{"reference", reference_ref},
                                     {"distorted", upscaled},
                                     {"output", result_path}});
  run_and_capture(cmd, dir + "/quality.log");
  std::ifstream in(result_path);
  if (!in) throw CodecError("quality tool wrote no result: " + result_path);
  nlohmann::json doc = nlohmann::json::parse(in);
  const nlohmann::json* node = &doc;
  std::stringstream keys(config_.quality_json_key_path);
  std::string key;
  while (std::getline(keys, key, '.')) {
    if (!node->contains(key))
      throw CodecError("quality JSON missing key '" + key + "' on path " +
                       config_.quality_json_key_path);
    node = &(*node)[key];
  }
  double score = node->get<double>();
  if (score < 0.0 || score > 100.0)
    throw CodecError("quality score outside [0, 100]: " +
                     std::to_string(score));
  return score;
}

}  // namespace ladder
