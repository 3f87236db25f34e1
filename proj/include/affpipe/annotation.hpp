#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "affpipe/pipeline.hpp"

namespace affpipe {

inline constexpr std::size_t kAnnotationKeypoints = 5;

/// One manual annotation, exchanged as a JSON line:
///   {"task_id", "image", "image_size": [w, h], "description",
///    "interaction": {"kind", "tool_name"?}, "keypoints": [[x, y] x 5],
///    "trajectory": [[x, y], ...], "annotator", "timestamp"}
/// Coordinates are image pixels.
struct AnnotationRecord {
  std::string task_id;
  std::string image;
  int width = 0;
  int height = 0;
  std::string description;
  InteractionLabel interaction;
  std::vector<Point2> keypoints;
  std::vector<Point2> trajectory;
  std::string annotator;
  std::string timestamp;
};

/// Throws AnnotationInvalid.
AnnotationRecord parse_annotation(const json& j);
void validate_annotation(const AnnotationRecord& a);
json annotation_to_json(const AnnotationRecord& a);

/// Reads a JSONL export. Later records replace earlier ones with the same
/// (task_id, annotator); a replaced record keeps its original position.
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);

/// Keypoints are blurred as-is (no mixture resampling); the polyline gets
/// uniform timestamps in click order and is fitted like a track.
DatasetTuple convert_annotation(const AnnotationRecord& a, const PipelineConfig& config);

/// Directory name for a converted record: task id, plus annotator when set.
std::string annotation_key(const AnnotationRecord& a);

}  // namespace affpipe
