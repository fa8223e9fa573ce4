#include "ladder/features.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace ladder {

nlohmann::json frame_stats_to_json(const std::vector<FrameStats>& frames) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& f : frames) {
    j.push_back({{"mean_luma", f.mean_luma},
                 {"luma_variance", f.luma_variance},
                 {"gradient_energy", f.gradient_energy},
                 {"temporal_diff_energy", f.temporal_diff_energy}});
  }
  return j;
}

std::vector<FrameStats> frame_stats_from_json(const nlohmann::json& j) {
  std::vector<FrameStats> frames;
  for (const auto& e : j) {
    frames.push_back({e.at("mean_luma").get<double>(),
                      e.at("luma_variance").get<double>(),
                      e.at("gradient_energy").get<double>(),
                      e.at("temporal_diff_energy").get<double>()});
  }
  return frames;
}

FeatureSequence handcrafted_features(const std::string& sequence_id,
                                     const std::vector<FrameStats>& frames,
                                     int t_frames, int feature_dim) {
  if (frames.empty())
    throw std::invalid_argument("no frame stats for " + sequence_id);
  if (feature_dim < kHandcraftedDims)
    throw std::invalid_argument(
        "feature_dim too small: need >= " + std::to_string(kHandcraftedDims));
  FeatureSequence seq;
  seq.sequence_id = sequence_id;
  seq.values = Eigen::MatrixXd::Zero(t_frames, feature_dim);
  const size_t n = frames.size();
  for (int t = 0; t < t_frames; ++t) {
    // Uniform sampling over the available frames.
    size_t idx = t_frames == 1 ? 0 : (t * (n - 1)) / (t_frames - 1);
    const FrameStats& f = frames[idx];
    double raw[kRawStatCount] = {f.mean_luma, f.luma_variance,
                                 f.gradient_energy, f.temporal_diff_energy};
    for (int k = 0; k < kRawStatCount; ++k) {
      seq.values(t, k) = raw[k];
      seq.values(t, kRawStatCount + k) = std::log1p(std::max(0.0, raw[k]));
    }
  }
  return seq;
}

FeatureNormalizer FeatureNormalizer::fit(
    const std::vector<FeatureSequence>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("empty feature corpus");
  const Eigen::Index d = corpus.front().values.cols();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(d);
  long count = 0;
  for (const auto& seq : corpus) {
    if (seq.values.cols() != d)
      throw std::invalid_argument("inconsistent feature dims in corpus");
    sum += seq.values.colwise().sum().transpose();
    sum_sq += seq.values.array().square().colwise().sum().matrix().transpose();
    count += seq.values.rows();
  }
  FeatureNormalizer norm;
  norm.mean = sum / count;
  Eigen::VectorXd var =
      sum_sq / count - norm.mean.cwiseProduct(norm.mean);
  norm.stddev = var.cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index i = 0; i < d; ++i)
    if (norm.stddev(i) < 1e-12) norm.stddev(i) = 1.0;  // constant dims pass through
  return norm;
}

void FeatureNormalizer::apply(FeatureSequence& sequence) const {
  if (sequence.values.cols() != mean.size())
    throw std::invalid_argument("normalizer dimension mismatch");
  for (Eigen::Index t = 0; t < sequence.values.rows(); ++t)
    sequence.values.row(t) =
        ((sequence.values.row(t).transpose() - mean).cwiseQuotient(stddev))
            .transpose();
}

nlohmann::json FeatureNormalizer::to_json() const {
  std::vector<double> m(mean.data(), mean.data() + mean.size());
  std::vector<double> s(stddev.data(), stddev.data() + stddev.size());
  return {{"mean", m}, {"stddev", s}};
}

FeatureNormalizer FeatureNormalizer::from_json(const nlohmann::json& j) {
  auto m = j.at("mean").get<std::vector<double>>();
  auto s = j.at("stddev").get<std::vector<double>>();
  FeatureNormalizer norm;
  norm.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  norm.stddev = Eigen::Map<const Eigen::VectorXd>(s.data(), s.size());
  return norm;
}

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
  // Little-endian host assumed (x86/arm64); static_assert as a tripwire.
  static_assert(std::endian::native == std::endian::little);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated binary file");
  return value;
}

constexpr uint16_t kFeatureVersion = 1;
constexpr uint32_t kModelVersion = 1;

}  // namespace

void write_feature_file(const std::string& path, const FeatureSequence& seq) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write("TAGF", 4);
  write_le<uint16_t>(out, kFeatureVersion);
  write_le<uint32_t>(out, static_cast<uint32_t>(seq.values.rows()));
  write_le<uint32_t>(out, static_cast<uint32_t>(seq.values.cols()));
  for (Eigen::Index t = 0; t < seq.values.rows(); ++t)
    for (Eigen::Index d = 0; d < seq.values.cols(); ++d)
      write_le<float>(out, static_cast<float>(seq.values(t, d)));
  std::ofstream sidecar(path + ".json");
  sidecar << nlohmann::json{{"sequence_id", seq.sequence_id}}.dump() << "\n";
}

FeatureSequence read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "TAGF", 4) != 0)
    throw std::runtime_error("bad feature file magic in " + path);
  uint16_t version = read_le<uint16_t>(in);
  if (version != kFeatureVersion)
    throw std::runtime_error("unsupported feature file version " +
                             std::to_string(version));
  uint32_t t = read_le<uint32_t>(in);
  uint32_t d = read_le<uint32_t>(in);
  FeatureSequence seq;
  seq.values.resize(t, d);
  for (uint32_t i = 0; i < t; ++i)
    for (uint32_t j = 0; j < d; ++j)
      seq.values(i, j) = read_le<float>(in);
  std::ifstream sidecar(path + ".json");
  if (sidecar) {
    nlohmann::json j = nlohmann::json::parse(sidecar);
    seq.sequence_id = j.value("sequence_id", "");
  }
  return seq;
}

void write_model_file(const std::string& path, const TagrnConfig& config,
                      const TagrnParams& params, uint64_t seed,
                      const FeatureNormalizer* normalizer) {
  nlohmann::json header = {
      {"format_version", kModelVersion},
      {"seed", seed},
      {"config",
       {{"t_frames", config.t_frames},
        {"feature_dim", config.feature_dim},
        {"heads", config.heads},
        {"gru_layers", config.gru_layers},
        {"gru_hidden", config.gru_hidden},
        {"dropout_p", config.dropout_p},
        {"tasks_b", config.tasks_b},
        {"classes_r", config.classes_r},
        {"per_head_attention_scale", config.per_head_attention_scale},
        {"attention_bias", config.attention_bias}}}};
  if (normalizer) header["normalizer"] = normalizer->to_json();
  std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write("TAGM", 4);
  write_le<uint32_t>(out, static_cast<uint32_t>(header_str.size()));
  out.write(header_str.data(), header_str.size());
  Eigen::VectorXd flat = params.flatten();
  write_le<uint64_t>(out, static_cast<uint64_t>(flat.size()));
  out.write(reinterpret_cast<const char*>(flat.data()),
            flat.size() * sizeof(double));
}

LoadedModel read_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "TAGM", 4) != 0)
    throw std::runtime_error("bad model file magic in " + path);
  uint32_t header_len = read_le<uint32_t>(in);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), header_len);
  nlohmann::json header = nlohmann::json::parse(header_str);
  if (header.at("format_version").get<uint32_t>() != kModelVersion)
    throw std::runtime_error("unsupported model format version");

  LoadedModel model;
  const auto& c = header.at("config");
  model.config.t_frames = c.at("t_frames").get<int>();
  model.config.feature_dim = c.at("feature_dim").get<int>();
  model.config.heads = c.at("heads").get<int>();
  model.config.gru_layers = c.at("gru_layers").get<int>();
  model.config.gru_hidden = c.at("gru_hidden").get<int>();
  model.config.dropout_p = c.at("dropout_p").get<double>();
  model.config.tasks_b = c.at("tasks_b").get<int>();
  model.config.classes_r = c.at("classes_r").get<int>();
  model.config.per_head_attention_scale =
      c.value("per_head_attention_scale", false);
  model.config.attention_bias = c.value("attention_bias", true);
  model.seed = header.at("seed").get<uint64_t>();
  if (header.contains("normalizer")) {
    model.has_normalizer = true;
    model.normalizer = FeatureNormalizer::from_json(header["normalizer"]);
  }
  model.params = TagrnParams::zeros_like(model.config);
  uint64_t count = read_le<uint64_t>(in);
  Eigen::VectorXd flat(count);
  in.read(reinterpret_cast<char*>(flat.data()), count * sizeof(double));
  if (!in) throw std::runtime_error("truncated model weights in " + path);
  model.params.unflatten(flat);
  return model;
}

}  // namespace ladder
