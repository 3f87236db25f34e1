#include "affpipe/evaluation.hpp"

#include <algorithm>
#include <map>

namespace affpipe {

namespace {

struct Accumulator {
  std::map<std::string, std::pair<double, std::size_t>> sums;
  std::size_t count = 0;

  void add(const json& metrics) {
    ++count;
    for (const auto& [key, value] : metrics.items()) {
      if (!value.is_number()) continue;
      auto& [s, n] = sums[key];
      s += value.get<double>();
      ++n;
    }
  }

  json means() const {
    json j = {{"count", count}};
    for (const auto& [key, sn] : sums) j[key] = sn.first / static_cast<double>(sn.second);
    return j;
  }
};

std::vector<std::string> tuple_dirs(const std::filesystem::path& root) {
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / kTupleFile)) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

MetricReport evaluate_pair(const DatasetTuple& pred, const DatasetTuple& gt,
                           const EvalOptions& options) {
  MetricReport r;
  r.sim = sim(pred.heatmap, gt.heatmap);
  r.cc = cc(pred.heatmap, gt.heatmap);
  if (!gt.keypoints.empty()) {
    r.auc_j = auc_judd(pred.heatmap, FixationSet{gt.keypoints, gt.width, gt.height});
  }
  const auto a = normalize_for_eval(pred.trajectory.params, options.samples);
  const auto b = normalize_for_eval(gt.trajectory.params, options.samples);
  r.ade = ade(a, b);
  const auto d = dtw_path(a, b);
  r.dtw = d.cost;
  r.dtw_normalized = d.cost / static_cast<double>(d.path_length);
  return r;
}

json metric_report_to_json(const MetricReport& r, bool normalize_dtw) {
  json j = json::object();
  auto put = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? json(*v) : json(nullptr);
  };
  put("sim", r.sim);
  put("cc", r.cc);
  put("auc_j", r.auc_j);
  put("ade", r.ade);
  put("dtw", normalize_dtw ? r.dtw_normalized : r.dtw);
  put("dtw_total", r.dtw);
  put("dtw_normalized", r.dtw_normalized);
  return j;
}

json evaluate_directories(const std::filesystem::path& pred_dir,
                          const std::filesystem::path& gt_dir,
                          const EvalOptions& options) {
  if (!std::filesystem::is_directory(pred_dir) || !std::filesystem::is_directory(gt_dir)) {
    throw Error(ErrorCode::Io, "prediction and ground-truth directories must exist");
  }
  json instances = json::array();
  json missing = json::array();
  json failed = json::array();
  Accumulator all;
  std::map<std::string, Accumulator> groups;
  for (const auto& name : tuple_dirs(gt_dir)) {
    if (!std::filesystem::exists(pred_dir / name / kTupleFile)) {
      missing.push_back(name);
      continue;
    }
    try {
      const DatasetTuple gt = read_tuple(gt_dir / name);
      const DatasetTuple pred = read_tuple(pred_dir / name);
      const json metrics =
          metric_report_to_json(evaluate_pair(pred, gt, options), options.normalize_dtw);
      const std::string kind(interaction_kind_name(gt.interaction.kind));
      instances.push_back({{"id", name}, {"kind", kind}, {"metrics", metrics}});
      all.add(metrics);
      groups[kind].add(metrics);
    } catch (const Error& e) {
      failed.push_back({{"id", name}, {"reason", std::string(error_code_name(e.code()))},
                        {"detail", e.what()}});
    }
  }
  json aggregate = {{"all", all.means()}};
  for (const auto& [kind, acc] : groups) aggregate[kind] = acc.means();
  return {{"dtw_convention", options.normalize_dtw ? "path_normalized" : "total"},
          {"trajectory_samples", options.samples},
          {"instances", instances},
          {"aggregate", aggregate},
          {"missing", missing},
          {"failed", failed}};
}

}  // namespace affpipe
