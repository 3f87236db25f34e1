#pragma once

#include <filesystem>

#include <json.hpp>

#include "affpipe/metrics.hpp"
#include "affpipe/pipeline.hpp"

namespace affpipe {

struct EvalOptions {
  int samples = kEvalSamples;
  /// Report path-length-normalized DTW in the "dtw" field.
  bool normalize_dtw = false;
};

/// Heatmap metrics against the ground-truth heatmap (AUC-Judd against its
/// keypoints, when it has them); trajectory metrics on curves sampled and
/// normalized independently of the heatmaps.
MetricReport evaluate_pair(const DatasetTuple& pred, const DatasetTuple& gt,
                           const EvalOptions& options = {});

json metric_report_to_json(const MetricReport& r, bool normalize_dtw);

/// Matches tuple directories by name; groups means by the ground truth's
/// interaction kind.
json evaluate_directories(const std::filesystem::path& pred_dir,
                          const std::filesystem::path& gt_dir,
                          const EvalOptions& options = {});

}  // namespace affpipe
