#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "affpipe/contact.hpp"
#include "affpipe/geometry.hpp"
#include "affpipe/trajectory.hpp"

namespace affpipe {

namespace fs = std::filesystem;
using nlohmann::json;

enum class InteractionKind { HandObject, ToolObject };
enum class LabelSource { External, LexiconFallback, Manual };

struct InteractionLabel {
  InteractionKind kind = InteractionKind::HandObject;
  /// Nonempty exactly when kind == ToolObject.
  std::string tool_name;
  LabelSource source = LabelSource::LexiconFallback;

  friend bool operator==(const InteractionLabel&, const InteractionLabel&) = default;
};

std::string_view interaction_kind_name(InteractionKind kind);
std::string_view label_source_name(LabelSource source);
json label_to_json(const InteractionLabel& label);
/// Throws InvalidInput on unknown kinds or a tool name that disagrees with
/// the kind. `source` overrides whatever the JSON says.
InteractionLabel label_from_json(const json& j, LabelSource source);

/// Tool nouns for the fallback classifier. Entries are lowercase and may be
/// two words ("rolling pin").
class ToolLexicon {
 public:
  ToolLexicon() = default;
  explicit ToolLexicon(std::vector<std::string> entries);

  static const ToolLexicon& builtin();
  /// One entry per line; blank lines and '#' comments are ignored.
  static ToolLexicon load(const fs::path& path);

  /// First tool mentioned in `text`, in reading order. Plurals ("knives",
  /// "spoons") map to their entry.
  std::optional<std::string> find_tool(std::string_view text) const;
  const std::vector<std::string>& entries() const { return entries_; }

 private:
  std::vector<std::string> entries_;
};

/// An external label wins; otherwise the description and then the preceding
/// descriptions are scanned for tool nouns.
InteractionLabel classify_interaction(std::string_view description,
                                      std::span<const std::string> previous,
                                      const ToolLexicon& lexicon,
                                      const std::optional<InteractionLabel>& external = {});

struct PipelineConfig {
  int gmm_k = kDefaultGmmComponents;
  int gmm_max_iters = kDefaultGmmMaxIters;
  int samples = kDefaultContactSamples;
  double sigma = kDefaultBlurSigma;
  double ransac_threshold = kDefaultRansacThreshold;
  int ransac_iterations = kDefaultRansacIterations;
  /// Seconds of tracking after the interaction frame.
  double track_window = 1.0;
  bool write_preview = false;
  std::optional<fs::path> lexicon;

  json to_json() const;
  /// Unknown keys are rejected; missing keys keep their defaults.
  static PipelineConfig from_json(const json& j);
};

struct ClipManifest {
  std::string clip_id;
  fs::path frames_dir;
  double t_obs = 0.0;
  double t_inter = 0.0;
  double fps = 0.0;
  std::string description;
  std::vector<std::string> prev_descriptions;
  fs::path detections;
  fs::path correspondences;
  fs::path mask;
  fs::path tracks;
  std::optional<InteractionLabel> interaction;

  int obs_frame() const;
  int inter_frame() const;
};

/// Relative paths resolve against `base_dir`. Throws ManifestInvalid.
ClipManifest parse_manifest(const json& j, const fs::path& base_dir);
/// Field-level checks plus existence of every referenced path.
void validate_manifest(const ClipManifest& m);
json manifest_to_json(const ClipManifest& m);

/// A manifest entry as read from disk, parsed lazily so that one broken
/// entry does not block the batch.
struct ManifestSource {
  json raw;
  fs::path base_dir;
};
/// Accepts a single manifest, an array, {"clips": [...]}, or JSON lines.
std::vector<ManifestSource> load_manifest_sources(const fs::path& path);

struct DatasetTuple {
  std::string clip_id;
  std::string image;
  std::string description;
  InteractionLabel interaction;
  int width = 0;
  int height = 0;
  Heatmap heatmap;
  TrajectoryFit trajectory;
  /// Present for tuples converted from manual annotations.
  std::vector<Point2> keypoints;
  json provenance = json::object();
};

inline constexpr const char* kHeatmapFile = "heatmap.pfm";
inline constexpr const char* kPreviewFile = "heatmap.png";
inline constexpr const char* kTrajectoryFile = "trajectory.json";
inline constexpr const char* kTupleFile = "tuple.json";

/// Writes heatmap.pfm, trajectory.json and tuple.json into `dir`.
void write_tuple(const fs::path& dir, const DatasetTuple& t, bool preview = false);
DatasetTuple read_tuple(const fs::path& dir);

/// Deterministic per-clip seed, independent of batch order.
std::uint64_t derive_seed(std::uint64_t base, std::string_view key,
                          std::uint64_t stream = 0);

struct BuildOutcome {
  std::string clip_id;
  std::optional<DatasetTuple> tuple;
  /// error_code_name() of the failure when skipped.
  std::string reason;
  std::string detail;

  bool built() const { return tuple.has_value(); }
};

/// Runs the full labeling pipeline for one clip and writes its tuple under
/// out_dir / clip_id. Per-clip failures come back as a skip, never throw.
BuildOutcome build_tuple(const ClipManifest& m, const PipelineConfig& config,
                         std::uint64_t seed, const fs::path& out_dir);
BuildOutcome build_tuple(const ManifestSource& source, const PipelineConfig& config,
                         std::uint64_t seed, const fs::path& out_dir);

struct BatchSummary {
  std::vector<BuildOutcome> outcomes;  // input order
  std::size_t built = 0;
  std::map<std::string, std::size_t> skipped;

  json to_json() const;
};

/// Processes clips on `workers` threads; results do not depend on the
/// worker count. Writes out_dir/summary.json.
BatchSummary run_batch(std::span<const ManifestSource> sources,
                       const PipelineConfig& config, std::uint64_t seed,
                       const fs::path& out_dir, int workers = 1);

}  // namespace affpipe
