#include <doctest.h>

#include <cmath>
#include <fstream>

#include "affpipe/annotation.hpp"
#include "affpipe/error.hpp"
#include "scratch_dir.hpp"

using namespace affpipe;

namespace {

json fixture() {
  return json::parse(R"({
    "task_id": "kitchen_0042",
    "image": "media/kitchen_0042.jpg",
    "image_size": [64, 48],
    "description": "cut the bread with a knife",
    "interaction": {"kind": "tool_object", "tool_name": "knife"},
    "keypoints": [[20, 20], [21, 20], [20, 21], [22, 22], [21, 21]],
    "trajectory": [[10, 30], [20, 30], [30, 30], [40, 30]],
    "annotator": "ann1",
    "timestamp": "2024-03-01T10:00:00Z"
  })");
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("parse and serialize") {
  const auto a = parse_annotation(fixture());
  CHECK(a.task_id == "kitchen_0042");
  CHECK(a.width == 64);
  CHECK(a.height == 48);
  CHECK(a.interaction.kind == InteractionKind::ToolObject);
  CHECK(a.interaction.source == LabelSource::Manual);
  CHECK(a.keypoints.size() == 5);
  const auto j = annotation_to_json(a);
  const auto b = parse_annotation(j);
  CHECK(b.keypoints == a.keypoints);
  CHECK(b.trajectory == a.trajectory);
  CHECK(j["interaction"] == fixture()["interaction"]);

  auto hand = fixture();
  hand["interaction"] = {{"kind", "hand_object"}};
  CHECK_FALSE(annotation_to_json(parse_annotation(hand))["interaction"].contains("tool_name"));
}

TEST_CASE("validation") {
  auto four = fixture();
  four["keypoints"].erase(4);
  CHECK(code_of([&] { parse_annotation(four); }) == ErrorCode::AnnotationInvalid);

  auto short_line = fixture();
  short_line["trajectory"] = json::array({json::array({1, 1})});
  CHECK(code_of([&] { parse_annotation(short_line); }) == ErrorCode::AnnotationInvalid);

  auto outside = fixture();
  outside["keypoints"][0] = {64, 10};
  CHECK(code_of([&] { parse_annotation(outside); }) == ErrorCode::AnnotationInvalid);

  auto no_tool = fixture();
  no_tool["interaction"].erase("tool_name");
  CHECK(code_of([&] { parse_annotation(no_tool); }) == ErrorCode::AnnotationInvalid);
}

TEST_CASE("convert coincident keypoints") {
  auto j = fixture();
  j["keypoints"] = json::array();
  for (int i = 0; i < 5; ++i) j["keypoints"].push_back({30, 12});
  const auto t = convert_annotation(parse_annotation(j), PipelineConfig{});
  CHECK(t.heatmap.argmax() == std::pair{30, 12});
  CHECK(t.heatmap.at(30, 12) == 1.0f);
  int peaks = 0;
  for (float v : t.heatmap.values) peaks += v == 1.0f ? 1 : 0;
  CHECK(peaks == 1);
  CHECK(t.interaction.source == LabelSource::Manual);
}

TEST_CASE("convert straight polyline") {
  auto j = fixture();
  j["trajectory"] = json::array({json::array({0, 0}), json::array({10, 0})});
  const auto t = convert_annotation(parse_annotation(j), PipelineConfig{});
  CHECK(std::abs(t.trajectory.params.b - 10.0) < 1e-2);
  CHECK(std::abs(angle_difference(t.trajectory.params.phi, 0.0)) < 1e-2);
  CHECK(t.trajectory.residual < 1e-2);
  CHECK(t.keypoints.size() == 5);
  CHECK(t.clip_id == annotation_key(parse_annotation(j)));
}

TEST_CASE("read_annotations keeps the last write per task and annotator") {
  ScratchDir dir("ann");
  auto first = fixture();
  auto other_task = fixture();
  other_task["task_id"] = "kitchen_0043";
  auto other_annotator = fixture();
  other_annotator["annotator"] = "ann2";
  auto rewrite = fixture();
  rewrite["description"] = "slice the bread";
  {
    std::ofstream out(dir / "a.jsonl");
    for (const auto& r : {first, other_task, other_annotator, rewrite}) out << r.dump() << '\n';
  }
  const auto recs = read_annotations(dir / "a.jsonl");
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].task_id == "kitchen_0042");
  CHECK(recs[0].annotator == "ann1");
  CHECK(recs[0].description == "slice the bread");
  CHECK(recs[1].task_id == "kitchen_0043");
  CHECK(recs[2].annotator == "ann2");
}
