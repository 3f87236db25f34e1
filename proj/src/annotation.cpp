#include "affpipe/annotation.hpp"

#include <map>

#include "affpipe/io.hpp"

namespace affpipe {

namespace {

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorCode::AnnotationInvalid, msg);
}

std::vector<Point2> points_field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) invalid(std::string("'") + key + "' must be an array");
  std::vector<Point2> pts;
  for (const auto& p : j[key]) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      invalid(std::string("'") + key + "' entries must be [x, y]");
    }
    pts.push_back(io::point_from_json(p));
  }
  return pts;
}

}  // namespace

void validate_annotation(const AnnotationRecord& a) {
  if (a.task_id.empty()) invalid("task_id is empty");
  if (a.width <= 0 || a.height <= 0) invalid("image_size must be positive");
  if (a.keypoints.size() != kAnnotationKeypoints) {
    invalid("expected 5 keypoints, got " + std::to_string(a.keypoints.size()));
  }
  if (a.trajectory.size() < 2) invalid("trajectory needs at least 2 vertices");
  auto in_frame = [&](Point2 p) {
    return is_finite(p) && p.x >= 0.0 && p.y >= 0.0 && p.x <= a.width - 1 &&
           p.y <= a.height - 1;
  };
  for (const auto& p : a.keypoints) {
    if (!in_frame(p)) invalid("keypoint outside the image");
  }
  for (const auto& p : a.trajectory) {
    if (!in_frame(p)) invalid("trajectory vertex outside the image");
  }
  if ((a.interaction.kind == InteractionKind::ToolObject) == a.interaction.tool_name.empty()) {
    invalid("tool_name must be present exactly for tool_object interactions");
  }
}

AnnotationRecord parse_annotation(const json& j) {
  if (!j.is_object()) invalid("annotation must be a JSON object");
  AnnotationRecord a;
  try {
    a.task_id = j.at("task_id").get<std::string>();
    a.image = j.at("image").get<std::string>();
    const auto& size = j.at("image_size");
    a.width = size.at(0).get<int>();
    a.height = size.at(1).get<int>();
    a.description = j.value("description", std::string{});
    a.annotator = j.value("annotator", std::string{});
    a.timestamp = j.value("timestamp", std::string{});
    a.interaction = label_from_json(j.at("interaction"), LabelSource::Manual);
  } catch (const json::exception& e) {
    invalid(std::string("annotation: ") + e.what());
  } catch (const Error& e) {
    invalid(std::string("annotation: ") + e.what());
  }
  a.keypoints = points_field(j, "keypoints");
  a.trajectory = points_field(j, "trajectory");
  validate_annotation(a);
  return a;
}

json annotation_to_json(const AnnotationRecord& a) {
  json kp = json::array();
  for (const auto& p : a.keypoints) kp.push_back(io::point_to_json(p));
  json traj = json::array();
  for (const auto& p : a.trajectory) traj.push_back(io::point_to_json(p));
  json label = {{"kind", std::string(interaction_kind_name(a.interaction.kind))}};
  if (a.interaction.kind == InteractionKind::ToolObject) label["tool_name"] = a.interaction.tool_name;
  return {{"task_id", a.task_id},         {"image", a.image},
          {"image_size", {a.width, a.height}}, {"description", a.description},
          {"interaction", label},         {"keypoints", kp},
          {"trajectory", traj},           {"annotator", a.annotator},
          {"timestamp", a.timestamp}};
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
  std::vector<AnnotationRecord> out;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const auto& j : io::read_json_records(path)) {
    auto a = parse_annotation(j);
    const auto key = std::make_pair(a.task_id, a.annotator);
    if (auto it = slot.find(key); it != slot.end()) {
      out[it->second] = std::move(a);
    } else {
      slot.emplace(key, out.size());
      out.push_back(std::move(a));
    }
  }
  return out;
}

std::string annotation_key(const AnnotationRecord& a) {
  std::string key = a.annotator.empty() ? a.task_id : a.task_id + "__" + a.annotator;
  for (auto& c : key) {
    if (c == '/' || c == '\\') c = '_';
  }
  return key;
}

DatasetTuple convert_annotation(const AnnotationRecord& a, const PipelineConfig& config) {
  validate_annotation(a);
  TrackSet polyline;
  polyline.tracks.push_back(a.trajectory);
  const auto n = a.trajectory.size();
  for (std::size_t i = 0; i < n; ++i) {
    polyline.timestamps.push_back(static_cast<double>(i) / static_cast<double>(n - 1));
  }

  DatasetTuple t;
  t.clip_id = annotation_key(a);
  t.image = a.image;
  t.description = a.description;
  t.interaction = a.interaction;
  t.interaction.source = LabelSource::Manual;
  t.width = a.width;
  t.height = a.height;
  t.heatmap = rasterize_heatmap(a.keypoints, a.width, a.height, config.sigma);
  t.trajectory = fit_trajectory(polyline);
  t.keypoints = a.keypoints;
  t.provenance = {{"source", "annotation"},
                  {"annotator", a.annotator},
                  {"timestamp", a.timestamp},
                  {"sigma", config.sigma}};
  return t;
}

}  // namespace affpipe
