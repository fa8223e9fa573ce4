#include "ladder/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ladder/hull.hpp"
#include "ladder/tagrn.hpp"

namespace ladder {

ConfusionTensor ConfusionTensor::build(
    const std::vector<BitrateLadder>& predicted,
    const std::vector<BitrateLadder>& ground_truth,
    const EncodingRecipe& recipe) {
  if (predicted.size() != ground_truth.size())
    throw std::invalid_argument("predicted/ground-truth length mismatch");
  ConfusionTensor t;
  t.counts.assign(recipe.bitrate_count(),
                  std::vector<std::vector<long>>(
                      recipe.resolution_count(),
                      std::vector<long>(recipe.resolution_count(), 0)));
  for (size_t s = 0; s < predicted.size(); ++s) {
    auto pred = ladder_classes(predicted[s], recipe);
    auto truth = ladder_classes(ground_truth[s], recipe);
    for (int i = 0; i < recipe.bitrate_count(); ++i)
      ++t.counts[i][truth[i]][pred[i]];
  }
  return t;
}

double accuracy(const std::vector<BitrateLadder>& predicted,
                const std::vector<BitrateLadder>& ground_truth,
                const EncodingRecipe& recipe) {
  if (predicted.size() != ground_truth.size())
    throw std::invalid_argument("predicted/ground-truth length mismatch");
  long correct = 0, total = 0;
  for (size_t s = 0; s < predicted.size(); ++s) {
    auto pred = ladder_classes(predicted[s], recipe);
    auto truth = ladder_classes(ground_truth[s], recipe);
    for (size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == truth[i]) ++correct;
      ++total;
    }
  }
  if (total == 0) throw std::invalid_argument("no cells to score");
  return static_cast<double>(correct) / total;
}

double f_score(const ConfusionTensor& confusion) {
  if (confusion.counts.empty()) throw std::invalid_argument("empty confusion");
  const int r = confusion.classes();
  double task_sum = 0.0;
  for (const auto& task : confusion.counts) {
    double class_sum = 0.0;
    int supported = 0;
    for (int c = 0; c < r; ++c) {
      long support = 0, predicted = 0;
      for (int j = 0; j < r; ++j) {
        support += task[c][j];
        predicted += task[j][c];
      }
      if (support == 0) continue;  // zero-support classes are skipped
      ++supported;
      long tp = task[c][c];
      double recall = static_cast<double>(tp) / support;
      double precision = predicted ? static_cast<double>(tp) / predicted : 0.0;
      double f1 = (precision + recall) > 0.0
                      ? 2.0 * precision * recall / (precision + recall)
                      : 0.0;
      class_sum += f1;
    }
    task_sum += supported ? class_sum / supported : 0.0;
  }
  return task_sum / confusion.tasks();
}

double g_mean(const ConfusionTensor& confusion) {
  if (confusion.counts.empty()) throw std::invalid_argument("empty confusion");
  const int r = confusion.classes();
  double task_sum = 0.0;
  for (const auto& task : confusion.counts) {
    double log_sum = 0.0;
    int supported = 0;
    bool zero = false;
    for (int c = 0; c < r; ++c) {
      long support = 0;
      for (int j = 0; j < r; ++j) support += task[c][j];
      if (support == 0) continue;
      ++supported;
      double recall = static_cast<double>(task[c][c]) / support;
      if (recall == 0.0) {
        zero = true;
        break;
      }
      log_sum += std::log(recall);
    }
    double gm = (zero || supported == 0) ? 0.0 : std::exp(log_sum / supported);
    task_sum += gm;
  }
  return task_sum / confusion.tasks();
}

BitrateLadder fixed_ladder(const EncodingRecipe& recipe,
                           const nlohmann::json& mapping_config) {
  std::map<int, Resolution> mapping;
  for (const auto& e : mapping_config.at("entries")) {
    mapping[e.at("bitrate_kbps").get<int>()] =
        Resolution{e.at("width").get<int>(), e.at("height").get<int>()};
  }
  BitrateLadder ladder;
  ladder.sequence_id = "fixed";
  for (int bitrate : recipe.target_bitrates_kbps) {
    auto it = mapping.find(bitrate);
    if (it == mapping.end())
      throw std::invalid_argument("fixed mapping missing " +
                                  std::to_string(bitrate) + " Kbps");
    if (recipe.resolution_index(it->second) < 0)
      throw std::invalid_argument("fixed mapping resolution not in recipe: " +
                                  it->second.name());
    ladder.entries.emplace_back(bitrate, it->second);
  }
  return ladder;
}

nlohmann::json default_fixed_mapping() {
  auto entry = [](int kbps, int w, int h) {
    return nlohmann::json{{"bitrate_kbps", kbps}, {"width", w}, {"height", h}};
  };
  return {{"entries",
           {entry(240, 384, 216), entry(375, 480, 270), entry(550, 640, 360),
            entry(750, 768, 432), entry(1000, 960, 540),
            entry(1500, 960, 540), entry(2300, 1280, 720),
            entry(3000, 1280, 720), entry(4300, 1920, 1080),
            entry(5800, 1920, 1080)}}};
}

StudyReport run_study(
    const std::vector<std::string>& sequence_ids,
    const std::map<std::string, RDSurface>& surfaces,
    const std::map<std::string, BitrateLadder>& gt_ladders,
    const std::vector<std::pair<std::string, LadderProvider>>& methods,
    const EncodingRecipe& recipe, const BDOptions& bd_options) {
  StudyReport report;
  std::vector<std::string> ids = sequence_ids;
  std::sort(ids.begin(), ids.end());

  std::map<std::string, std::vector<BitrateLadder>> ladders_by_method;
  std::vector<BitrateLadder> gt_in_order;
  std::map<std::string, std::pair<double, long>> rate_acc, quality_acc;

  for (const auto& id : ids) {
    const RDSurface& surface = surfaces.at(id);
    const BitrateLadder& gt = gt_ladders.at(id);
    gt_in_order.push_back(gt);
    RDCurve hull = hull_curve(surface, gt);
    for (const auto& [name, provider] : methods) {
      StudyRow row;
      row.sequence_id = id;
      row.method = name;
      try {
        BitrateLadder ladder = provider(id);
        ladders_by_method[name].push_back(ladder);
        RDCurve curve = ladder_curve(ladder, surface);
        row.bd_rate_percent = bd_rate(curve, hull, bd_options);
        row.bd_quality = bd_quality(curve, hull, bd_options);
        auto& ra = rate_acc[name];
        ra.first += row.bd_rate_percent;
        ++ra.second;
        auto& qa = quality_acc[name];
        qa.first += row.bd_quality;
        ++qa.second;
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      report.rows.push_back(row);
    }
  }

  for (const auto& [name, acc] : rate_acc)
    report.mean_bd_rate[name] = acc.first / acc.second;
  for (const auto& [name, acc] : quality_acc)
    report.mean_bd_quality[name] = acc.first / acc.second;
  for (const auto& [name, ladders] : ladders_by_method) {
    if (ladders.size() != gt_in_order.size()) continue;  // had failures
    auto confusion = ConfusionTensor::build(ladders, gt_in_order, recipe);
    report.accuracy_by_method[name] = accuracy(ladders, gt_in_order, recipe);
    report.f_score_by_method[name] = f_score(confusion);
    report.g_mean_by_method[name] = g_mean(confusion);
  }
  return report;
}

nlohmann::json StudyReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json r = {{"sequence_id", row.sequence_id},
                        {"method", row.method}};
    if (row.failed) {
      r["error"] = row.error;
    } else {
      r["bd_rate_percent"] = row.bd_rate_percent;
      r["bd_quality"] = row.bd_quality;
    }
    rows_json.push_back(r);
  }
  return {{"rows", rows_json},
          {"mean_bd_rate", mean_bd_rate},
          {"mean_bd_quality", mean_bd_quality},
          {"accuracy", accuracy_by_method},
          {"f_score", f_score_by_method},
          {"g_mean", g_mean_by_method}};
}

std::string StudyReport::to_csv() const {
  std::ostringstream out;
  out << "sequence_id,method,bd_rate_percent,bd_quality,error\n";
  for (const auto& row : rows) {
    out << row.sequence_id << "," << row.method << ",";
    if (row.failed) {
      out << ",,\"" << row.error << "\"";
    } else {
      out << row.bd_rate_percent << "," << row.bd_quality << ",";
    }
    out << "\n";
  }
  return out.str();
}

std::string plot_data_csv(
    const RDSurface& surface,
    const std::vector<std::pair<std::string, BitrateLadder>>& ladders) {
  std::ostringstream out;
  out << "method,bitrate_kbps,quality\n";
  for (const auto& [name, ladder] : ladders) {
    RDCurve curve = ladder_curve(ladder, surface);
    for (const auto& p : curve.points)
      out << name << "," << p.actual_bitrate_kbps << "," << p.quality << "\n";
  }
  return out.str();
}

}  // namespace ladder
